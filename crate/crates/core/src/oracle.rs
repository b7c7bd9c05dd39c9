//! Exact diagonalisation of the oscillator plus a few bath modes.
//!
//! The system is always the first tensor factor, followed by the bath modes
//! in model order.

use std::sync::Arc;

use ndarray::{linalg::kron, s, Array1, Array2};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bath::{BathMode, BathSpec};
use crate::error::{invalid, Error, Result};
use crate::generator::{DriveSpec, SystemOperators};
use crate::operator::{
    annihilation_op, dagger, eigh, embed, hermitian_part, number_op, spectral_map, DensityMatrix, FockOperator,
    Tolerances,
};
use crate::propagator::{observe, GateReport, PropagationOptions, Trajectory};
use crate::quadrature::gauss_legendre;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;
pub const MAX_ORACLE_MODES: usize = 4;

/// Pure components with weight below this are dropped from the initial
/// ensemble.
const WEIGHT_CUTOFF: f64 = 1e-15;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A truncated oscillator coupled to at most four truncated bath modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FullModel {
    system_dim: usize,
    mode_dims: Vec<usize>,
    modes: Vec<BathMode>,
    omega0: f64,
    beta: f64,
    cap: usize,
}

impl FullModel {
    /// Modes are kept in the order given (unlike [`BathSpec`], which sorts).
    pub fn new(
        system_dim: usize,
        mode_dims: Vec<usize>,
        modes: Vec<BathMode>,
        omega0: f64,
        beta: f64,
        cap: usize,
    ) -> Result<Self> {
        if system_dim < 2 {
            return Err(Error::InvalidDimension { dim: system_dim });
        }
        if let Some(&dim) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension { dim });
        }
        if modes.is_empty() || modes.len() > MAX_ORACLE_MODES {
            return Err(invalid(
                "modes",
                format!("oracle supports 1..={MAX_ORACLE_MODES} modes, got {}", modes.len()),
            ));
        }
        if mode_dims.len() != modes.len() {
            return Err(invalid(
                "mode_dims",
                format!("{} dims for {} modes", mode_dims.len(), modes.len()),
            ));
        }
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(invalid("omega0", "must be positive"));
        }
        // Reuse the bath validation for frequencies, couplings and beta.
        BathSpec::new(modes.clone(), beta)?;
        let model = Self {
            system_dim,
            mode_dims,
            modes,
            omega0,
            beta,
            cap,
        };
        let dim = model.total_dim();
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        Ok(model)
    }

    /// Picks each mode dimension as the smallest `d` whose thermal top-level
    /// population is below `tail`, starting from `min_dim`.
    pub fn with_auto_dims(
        system_dim: usize,
        modes: Vec<BathMode>,
        omega0: f64,
        beta: f64,
        tail: f64,
        min_dim: usize,
        cap: usize,
    ) -> Result<Self> {
        if !(tail > 0.0 && tail < 1.0) {
            return Err(invalid("tail", "must lie in (0, 1)"));
        }
        let mode_dims = modes
            .iter()
            .map(|m| {
                let mut d = min_dim.max(2);
                while thermal_top_population(m.omega, beta, d) >= tail {
                    d += 1;
                }
                d
            })
            .collect();
        Self::new(system_dim, mode_dims, modes, omega0, beta, cap)
    }

    pub fn system_dim(&self) -> usize {
        self.system_dim
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn bath(&self) -> BathSpec {
        BathSpec::new(self.modes.clone(), self.beta).expect("validated on construction")
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.system_dim];
        dims.extend_from_slice(&self.mode_dims);
        dims
    }

    pub fn bath_dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    pub fn total_dim(&self) -> usize {
        self.system_dim * self.bath_dim()
    }

    /// Same model with every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| BathMode {
                omega: m.omega,
                coupling: m.coupling * factor,
            })
            .collect();
        Self::new(
            self.system_dim,
            self.mode_dims.clone(),
            modes,
            self.omega0,
            self.beta,
            self.cap,
        )
    }

    /// Same model with the bath modes reordered: mode `i` of the result is
    /// mode `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = order.to_vec();
        seen.sort_unstable();
        if seen != (0..self.modes.len()).collect::<Vec<_>>() {
            return Err(invalid("order", "must be a permutation of the mode indices"));
        }
        Self::new(
            self.system_dim,
            order.iter().map(|&i| self.mode_dims[i]).collect(),
            order.iter().map(|&i| self.modes[i]).collect(),
            self.omega0,
            self.beta,
            self.cap,
        )
    }
}

/// Top-level population of a `dim`-level truncated thermal oscillator.
pub fn thermal_top_population(omega: f64, beta: f64, dim: usize) -> f64 {
    let x = (-beta * omega).exp();
    // (1 - x) x^{d-1} / (1 - x^d)
    -(-beta * omega).exp_m1() * x.powi(dim as i32 - 1) / -(-beta * omega * dim as f64).exp_m1()
}

struct Parts {
    free: FockOperator,
    interaction: FockOperator,
    position: FockOperator,
}

fn hamiltonian_parts(m: &FullModel) -> Result<Parts> {
    let dims = m.dims();
    let r = |x: f64| Complex64::new(x, 0.0);
    let a = embed(&annihilation_op(m.system_dim)?, 0, &dims)?;
    let ad = a.dagger();
    let mut free = embed(&number_op(m.system_dim)?.scale(r(m.omega0)), 0, &dims)?;
    let mut interaction = FockOperator::zeros(&dims)?;
    for (k, (mode, &d)) in m.modes.iter().zip(m.mode_dims.iter()).enumerate() {
        free = &free + &embed(&number_op(d)?.scale(r(mode.omega)), k + 1, &dims)?;
        let b = embed(&annihilation_op(d)?, k + 1, &dims)?;
        let hop = &(&a * &b.dagger()) + &(&ad * &b);
        interaction = &interaction + &hop.scale(r(mode.coupling));
    }
    let position = &a + &ad;
    Ok(Parts {
        free,
        interaction,
        position,
    })
}

/// `ω₀a†a + Σ ω_k b_k†b_k + Σ V_k (a b_k† + a† b_k) + f(t)(a + a†)`.
pub fn build_hamiltonian(m: &FullModel, drive: &DriveSpec, t: f64) -> Result<FockOperator> {
    drive.validate()?;
    let parts = hamiltonian_parts(m)?;
    let h = &parts.free + &parts.interaction;
    let f = drive.value(t);
    if f == 0.0 {
        return Ok(h);
    }
    Ok(&h + &parts.position.scale(Complex64::new(f, 0.0)))
}

/// Which full state the exact dynamics starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialCondition {
    /// Gibbs state of the coupled Hamiltonian with the drive off.
    Correlated,
    /// Product of the free system and free bath Gibbs states.
    Factorized,
}

/// Sum over bath indices of a system-first operator on `d_s * d_b`.
pub(crate) fn trace_bath(m: &Array2<Complex64>, d_s: usize, d_b: usize) -> Array2<Complex64> {
    let mut out = Array2::zeros((d_s, d_s));
    for s in 0..d_s {
        for t in 0..d_s {
            let block = m.slice(s![s * d_b..(s + 1) * d_b, t * d_b..(t + 1) * d_b]);
            out[[s, t]] = block.diag().sum();
        }
    }
    out
}

fn lift(x: &Array2<Complex64>, d_b: usize) -> Array2<Complex64> {
    kron(x, &Array2::eye(d_b))
}

/// Ensemble `ρ = Ψ Ψ†` of a full initial state, with the columns of `Ψ`
/// holding `√p_k |k⟩`.
fn ensemble(values: &Array1<f64>, vectors: &Array2<Complex64>, beta: f64) -> Array2<Complex64> {
    let ground = values[0];
    let weights: Vec<f64> = values.iter().map(|&e| (-beta * (e - ground)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let kept: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] / z > WEIGHT_CUTOFF).collect();
    let mut psi = Array2::zeros((vectors.nrows(), kept.len()));
    for (col, &i) in kept.iter().enumerate() {
        let amp = (weights[i] / z).sqrt();
        psi.column_mut(col).assign(&vectors.column(i).mapv(|z| z * amp));
    }
    psi
}

/// Unitary evolution of a mixed full state represented by its ensemble.
pub struct ExactEvolution {
    model: FullModel,
    drive: DriveSpec,
    psi0: Array2<Complex64>,
    /// Eigen-decomposition of the time-independent Hamiltonian.
    spectrum: Option<(Array1<f64>, Array2<Complex64>)>,
}

impl ExactEvolution {
    pub fn new(model: &FullModel, drive: &DriveSpec, initial: InitialCondition) -> Result<Self> {
        drive.validate()?;
        let parts = hamiltonian_parts(model)?;
        let psi0 = match initial {
            InitialCondition::Correlated => {
                let h = &parts.free + &parts.interaction;
                let (values, vectors) = eigh(h.data())?;
                ensemble(&values, &vectors, model.beta)
            }
            InitialCondition::Factorized => {
                // The free Hamiltonian is diagonal in the Fock product basis.
                let values: Array1<f64> = parts.free.data().diag().mapv(|z| z.re);
                let mut order: Vec<usize> = (0..values.len()).collect();
                order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
                let sorted: Array1<f64> = order.iter().map(|&i| values[i]).collect();
                let mut vectors = Array2::zeros((values.len(), values.len()));
                for (col, &i) in order.iter().enumerate() {
                    vectors[[i, col]] = ONE;
                }
                ensemble(&sorted, &vectors, model.beta)
            }
        };
        let spectrum = if drive.is_time_dependent() {
            None
        } else {
            Some(eigh(build_hamiltonian(model, drive, 0.0)?.data())?)
        };
        Ok(Self {
            model: model.clone(),
            drive: *drive,
            psi0,
            spectrum,
        })
    }

    pub fn model(&self) -> &FullModel {
        &self.model
    }

    /// Number of pure components kept in the initial ensemble.
    pub fn component_count(&self) -> usize {
        self.psi0.ncols()
    }

    pub fn initial_components(&self) -> &Array2<Complex64> {
        &self.psi0
    }

    /// Ensemble at time `t` for a time-independent Hamiltonian.
    pub fn components_at(&self, t: f64) -> Result<Array2<Complex64>> {
        let (values, vectors) = self
            .spectrum
            .as_ref()
            .ok_or_else(|| invalid("drive", "closed-form evolution needs a time-independent drive"))?;
        let mut c = dagger(vectors).dot(&self.psi0);
        for (mut row, &e) in c.outer_iter_mut().zip(values.iter()) {
            let phase = Complex64::from_polar(1.0, -e * t);
            row.mapv_inplace(|z| z * phase);
        }
        Ok(vectors.dot(&c))
    }

    /// Full density matrix `Ψ Ψ†`.
    pub fn full_state(&self, components: &Array2<Complex64>) -> Result<DensityMatrix> {
        let rho = components.dot(&dagger(components));
        Ok(DensityMatrix::new_unchecked(
            FockOperator::new(self.model.dims(), hermitian_part(&rho))?,
            Tolerances::default(),
        ))
    }

    /// Reduced system state `Tr_B Ψ Ψ†`.
    pub fn reduced_state(&self, components: &Array2<Complex64>) -> Result<DensityMatrix> {
        let d_s = self.model.system_dim;
        let cols = components.len() / d_s;
        let m = components
            .as_standard_layout()
            .into_owned()
            .into_shape_with_order((d_s, cols))
            .map_err(|e| invalid("components", e.to_string()))?;
        let rho = m.dot(&dagger(&m));
        Ok(DensityMatrix::new_unchecked(
            FockOperator::new(vec![d_s], hermitian_part(&rho))?,
            Tolerances::default(),
        ))
    }

    /// `⟨H⟩` of the ensemble for the Hamiltonian at time `t`.
    pub fn energy(&self, components: &Array2<Complex64>, t: f64) -> Result<f64> {
        let h = build_hamiltonian(&self.model, &self.drive, t)?;
        let hp = h.data().dot(components);
        Ok(components.iter().zip(hp.iter()).map(|(a, b)| (a.conj() * b).re).sum())
    }

    fn step_unitary(&self, t_mid: f64, dt: f64) -> Result<Array2<Complex64>> {
        let h = build_hamiltonian(&self.model, &self.drive, t_mid)?;
        let (values, vectors) = eigh(h.data())?;
        Ok(spectral_map(&values, &vectors, |e| Complex64::from_polar(1.0, -e * dt)))
    }

    /// Reduced states on the grid `t = n dt`, sampled as the propagator does.
    pub fn reduced_dynamics(&self, options: &PropagationOptions) -> Result<Trajectory> {
        let steps = options.step_count()?;
        let dt = options.dt;
        let ops = Arc::new(SystemOperators::new(self.model.system_dim)?);
        let mut sample_steps: Vec<usize> = (0..=steps).filter(|n| n % options.sample_every == 0).collect();
        if *sample_steps.last().expect("step 0 is sampled") != steps {
            sample_steps.push(steps);
        }

        let mut states = Vec::with_capacity(sample_steps.len());
        if self.spectrum.is_some() {
            for &n in &sample_steps {
                states.push(self.reduced_state(&self.components_at(n as f64 * dt)?)?);
            }
        } else {
            // Piecewise-constant Hamiltonian evaluated at each step midpoint.
            let mut psi = self.psi0.clone();
            let mut next = sample_steps.iter().peekable();
            for n in 0..=steps {
                if next.peek() == Some(&&n) {
                    states.push(self.reduced_state(&psi)?);
                    next.next();
                }
                if n < steps {
                    psi = self.step_unitary((n as f64 + 0.5) * dt, dt)?.dot(&psi);
                }
            }
        }

        let mut observables = Vec::with_capacity(states.len());
        let mut times = Vec::with_capacity(states.len());
        let mut gates = GateReport::default();
        for (&n, state) in sample_steps.iter().zip(states.iter()) {
            let t = n as f64 * dt;
            let obs = observe(&ops, state.data(), t, 0.0, None)?;
            gates.max_trace_error = gates.max_trace_error.max(obs.trace_error);
            gates.max_top_level_population = gates.max_top_level_population.max(obs.top_level_population);
            times.push(t);
            observables.push(obs);
        }
        let mut warnings = Vec::new();
        if gates.max_top_level_population > options.tail_threshold {
            gates.tail_exceeded = true;
            warnings.push(format!(
                "oracle system top level population reached {:.3e}",
                gates.max_top_level_population
            ));
        }
        Ok(Trajectory {
            times,
            states,
            observables,
            gates,
            warnings,
        })
    }
}

/// Exact reduced dynamics from the correlated Gibbs state of the undriven
/// Hamiltonian.
pub fn exact_reduced_dynamics(m: &FullModel, drive: &DriveSpec, options: &PropagationOptions) -> Result<Trajectory> {
    ExactEvolution::new(m, drive, InitialCondition::Correlated)?.reduced_dynamics(options)
}

/// Largest top-level population of any bath mode in the full state.
pub fn bath_tail_population(m: &FullModel, state: &DensityMatrix) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..m.modes.len() {
        worst = worst.max(state.top_level_population(k + 1)?);
    }
    Ok(worst)
}

fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, z| acc.max(z.norm()))
}

fn random_operator(rng: &mut ChaCha8Rng, dim: usize) -> Array2<Complex64> {
    Array2::from_shape_simple_fn((dim, dim), || {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Gibbs state of the free bath, `⊗_k exp(-β ω_k b_k†b_k) / Z_k`.
fn free_bath_state(m: &FullModel) -> Array2<Complex64> {
    let mut rho = Array2::from_elem((1, 1), ONE);
    for (mode, &d) in m.modes.iter().zip(m.mode_dims.iter()) {
        let weights: Vec<f64> = (0..d).map(|n| (-m.beta * mode.omega * n as f64).exp()).collect();
        let z: f64 = weights.iter().sum();
        let diag = Array1::from_iter(weights.iter().map(|w| Complex64::new(w / z, 0.0)));
        rho = kron(&rho, &Array2::from_diag(&diag));
    }
    rho
}

fn free_system_state(m: &FullModel) -> Array2<Complex64> {
    let weights: Vec<f64> = (0..m.system_dim)
        .map(|n| (-m.beta * m.omega0 * n as f64).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    Array2::from_diag(&Array1::from_iter(weights.iter().map(|w| Complex64::new(w / z, 0.0))))
}

/// Residuals of the correlated projection `P Φ = F(0) F_S(0)⁻¹ Tr_B Φ`.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectorReport {
    pub probes: usize,
    /// `‖P F(0) - F(0)‖`.
    pub invariance: f64,
    /// `max ‖P²Φ - PΦ‖`.
    pub idempotency: f64,
    /// `max ‖Tr_B (Φ - PΦ)‖`.
    pub trace_b_q: f64,
    /// `‖Tr_B F(0) F_S(0)⁻¹ - 1‖`.
    pub trace_b_p: f64,
    /// With `F(0)` replaced by `F_S ⊗ ρ_B`: `max ‖PΦ - Tr_BΦ ⊗ ρ_B‖`.
    pub factorized_reduction: f64,
    /// `max ‖Tr_B [H_B, Φ]‖`.
    pub bath_liouvillian_trace: f64,
    /// `max ‖Tr_B [H_S, Φ] - [H_S, Tr_B Φ]‖`.
    pub system_liouvillian_trace: f64,
    /// `max ‖Tr_B [H_SB, Φ_S ⊗ ρ_B]‖` with the free bath Gibbs state.
    pub interaction_bath_average: f64,
    /// `‖[H_B, ρ_B]‖`.
    pub bath_stationarity: f64,
}

impl ProjectorReport {
    pub fn worst(&self) -> f64 {
        [
            self.invariance,
            self.idempotency,
            self.trace_b_q,
            self.trace_b_p,
            self.factorized_reduction,
            self.bath_liouvillian_trace,
            self.system_liouvillian_trace,
            self.interaction_bath_average,
            self.bath_stationarity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Inverse of a hermitian positive-definite matrix.
///
/// Thermal states are strongly graded (diagonal spanning many decades), so
/// the spectrum is taken of `D^{-1/2} M D^{-1/2}` with `D = diag(M)` and the
/// scaling undone afterwards.
fn hermitian_inverse(m: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = m.nrows();
    let diag: Vec<f64> = m.diag().iter().map(|z| z.re).collect();
    if let Some(bad) = diag.iter().find(|d| !(**d > 0.0)) {
        return Err(Error::Singular(format!("diagonal entry {bad:.3e}")));
    }
    let scale: Vec<f64> = diag.iter().map(|d| d.sqrt().recip()).collect();
    let scaled = Array2::from_shape_fn((n, n), |(i, j)| m[[i, j]] * (scale[i] * scale[j]));
    let (values, vectors) = eigh(&scaled)?;
    if !(values[0] > 0.0) {
        return Err(Error::Singular(format!("smallest eigenvalue {:.3e}", values[0])));
    }
    let inner = spectral_map(&values, &vectors, |e| Complex64::new(1.0 / e, 0.0));
    Ok(Array2::from_shape_fn((n, n), |(i, j)| {
        inner[[i, j]] * (scale[i] * scale[j])
    }))
}

/// Builds the projection from the correlated Gibbs state of `m` and checks
/// its algebra on `probes` random operators drawn from `seed`.
pub fn projector_algebra_check(m: &FullModel, probes: usize, seed: u64) -> Result<ProjectorReport> {
    let d_s = m.system_dim;
    let d_b = m.bath_dim();
    let d = d_s * d_b;
    let parts = hamiltonian_parts(m)?;
    let h = &parts.free + &parts.interaction;
    let (values, vectors) = eigh(h.data())?;
    let ground = values[0];
    let z: f64 = values.iter().map(|&e| (-m.beta * (e - ground)).exp()).sum();
    let f0 = hermitian_part(&spectral_map(&values, &vectors, |e| {
        Complex64::new((-m.beta * (e - ground)).exp() / z, 0.0)
    }));
    let fs = trace_bath(&f0, d_s, d_b);
    let fs_inv = hermitian_inverse(&fs)?;
    let r = f0.dot(&lift(&fs_inv, d_b));
    let project = |phi: &Array2<Complex64>| r.dot(&lift(&trace_bath(phi, d_s, d_b), d_b));

    let rho_b = free_bath_state(m);
    let factor_state = kron(&fs, &rho_b);
    let r_fact = factor_state.dot(&lift(&fs_inv, d_b));

    // H_S and H_B alone on the full space.
    let mut h_s = Array2::zeros((d, d));
    let number = number_op(d_s)?;
    h_s += &(kron(number.data(), &Array2::eye(d_b)) * Complex64::new(m.omega0, 0.0));
    let h_b = parts.free.data() - &h_s;
    let comm = |x: &Array2<Complex64>, y: &Array2<Complex64>| x.dot(y) - y.dot(x);

    let mut report = ProjectorReport {
        probes,
        invariance: max_abs(&(project(&f0) - &f0)),
        idempotency: 0.0,
        trace_b_q: 0.0,
        trace_b_p: max_abs(&(trace_bath(&r, d_s, d_b) - Array2::<Complex64>::eye(d_s))),
        factorized_reduction: 0.0,
        bath_liouvillian_trace: 0.0,
        system_liouvillian_trace: 0.0,
        interaction_bath_average: 0.0,
        bath_stationarity: max_abs(&comm(&h_b, &rho_b_full(&rho_b, d_s))),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..probes {
        let phi = random_operator(&mut rng, d);
        let phi_s = trace_bath(&phi, d_s, d_b);
        let p_phi = project(&phi);
        report.idempotency = report.idempotency.max(max_abs(&(project(&p_phi) - &p_phi)));
        report.trace_b_q = report.trace_b_q.max(max_abs(&trace_bath(&(&phi - &p_phi), d_s, d_b)));
        let p_fact = r_fact.dot(&lift(&phi_s, d_b));
        report.factorized_reduction = report
            .factorized_reduction
            .max(max_abs(&(p_fact - kron(&phi_s, &rho_b))));
        report.bath_liouvillian_trace =
            report
                .bath_liouvillian_trace
                .max(max_abs(&trace_bath(&comm(&h_b, &phi), d_s, d_b)));
        let hs_small = number.data() * Complex64::new(m.omega0, 0.0);
        report.system_liouvillian_trace = report.system_liouvillian_trace.max(max_abs(
            &(trace_bath(&comm(&h_s, &phi), d_s, d_b) - comm(&hs_small, &phi_s)),
        ));
        let system_probe = random_operator(&mut rng, d_s);
        let product = kron(&system_probe, &rho_b);
        report.interaction_bath_average = report.interaction_bath_average.max(max_abs(&trace_bath(
            &comm(parts.interaction.data(), &product),
            d_s,
            d_b,
        )));
    }
    Ok(report)
}

fn rho_b_full(rho_b: &Array2<Complex64>, d_s: usize) -> Array2<Complex64> {
    kron(&Array2::eye(d_s), rho_b)
}

/// First-order expansion of the correlated Gibbs state.
#[derive(Debug, Clone, Serialize)]
pub struct GibbsExpansionReport {
    /// Frobenius norm of `ρ_eq - ρ_S ⊗ ρ_B`.
    pub correlation_norm: f64,
    /// Frobenius norm of `I - I⁽¹⁾` at the model couplings.
    pub remainder: f64,
    /// Same with every coupling halved.
    pub remainder_half: f64,
    /// `remainder / remainder_half`.
    pub ratio: f64,
    /// `‖Tr_B I⁽¹⁾‖`.
    pub first_order_bath_trace: f64,
}

/// Quadrature order of the λ integral.
const LAMBDA_ORDER: usize = 48;

/// Exact correlation part `ρ_eq - ρ_S ⊗ ρ_B` and its first-order
/// approximation `-∫₀^β dλ e^{-λH₀} H_SB e^{λH₀} ρ_S ⊗ ρ_B`.
pub fn gibbs_correlation_parts(m: &FullModel) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let parts = hamiltonian_parts(m)?;
    let h = &parts.free + &parts.interaction;
    let (values, vectors) = eigh(h.data())?;
    let ground = values[0];
    let z: f64 = values.iter().map(|&e| (-m.beta * (e - ground)).exp()).sum();
    let rho_eq = spectral_map(&values, &vectors, |e| {
        Complex64::new((-m.beta * (e - ground)).exp() / z, 0.0)
    });
    let rho_0 = kron(&free_system_state(m), &free_bath_state(m));
    let exact = hermitian_part(&rho_eq) - &rho_0;

    // H₀ is diagonal in the product Fock basis.
    let energies: Array1<f64> = parts.free.data().diag().mapv(|z| z.re);
    let populations: Array1<f64> = rho_0.diag().mapv(|z| z.re);
    let rule = gauss_legendre(LAMBDA_ORDER, 0.0, m.beta);
    let v = parts.interaction.data();
    let mut first = Array2::zeros(v.raw_dim());
    for ((i, j), &vij) in v.indexed_iter() {
        if vij == ZERO {
            continue;
        }
        let gap = energies[i] - energies[j];
        let integral: f64 = rule.iter().map(|&(lambda, w)| w * (-lambda * gap).exp()).sum();
        first[[i, j]] = -vij * integral * populations[j];
    }
    Ok((exact, first))
}

fn frobenius(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn gibbs_expansion_check(m: &FullModel) -> Result<GibbsExpansionReport> {
    let (exact, first) = gibbs_correlation_parts(m)?;
    let half = m.scaled_couplings(0.5)?;
    let (exact_half, first_half) = gibbs_correlation_parts(&half)?;
    let remainder = frobenius(&(&exact - &first));
    let remainder_half = frobenius(&(&exact_half - &first_half));
    let first_order_bath_trace = max_abs(&trace_bath(&first, m.system_dim, m.bath_dim()));
    Ok(GibbsExpansionReport {
        correlation_norm: frobenius(&exact),
        remainder,
        remainder_half,
        ratio: if remainder_half > 0.0 {
            remainder / remainder_half
        } else {
            f64::NAN
        },
        first_order_bath_trace,
    })
}
