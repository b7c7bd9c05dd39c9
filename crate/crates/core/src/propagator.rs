//! Fixed-step RK4 integration of the reduced density matrix.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bath::BathSpec;
use crate::error::{invalid, Error, Result};
use crate::generator::{build_generator, lindblad_generator, DriveSpec, EvolutionMode, Generator, SystemOperators};
use crate::kernels::{correlation_probe_norm, kernel_coefficients, KernelCoefficients, MarkovLimits};
use crate::operator::{eigh, gibbs_state, hermitian_part, hermiticity_defect, number_op, DensityMatrix, FockOperator};

/// Integration settings shared by both propagators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Record every `sample_every`-th step (the initial and final states are
    /// always recorded).
    pub sample_every: usize,
    /// Warn when the top Fock level holds more than this population.
    pub tail_threshold: f64,
    /// Upper limit for `dt * |G|`.
    pub stability_limit: f64,
}

impl PropagationOptions {
    pub fn new(t_max: f64, dt: f64) -> Self {
        Self {
            t_max,
            dt,
            sample_every: 1,
            tail_threshold: 1e-6,
            stability_limit: 0.1,
        }
    }

    pub fn with_sample_every(mut self, every: usize) -> Self {
        self.sample_every = every;
        self
    }

    /// Number of RK4 steps covering `[0, t_max]`.
    pub fn step_count(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(invalid("t_max", format!("must be positive, got {}", self.t_max)));
        }
        if self.dt > self.t_max {
            return Err(invalid("dt", "must not exceed t_max"));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be >= 1"));
        }
        if !(self.stability_limit > 0.0) {
            return Err(invalid("stability_limit", "must be positive"));
        }
        Ok((self.t_max / self.dt - 1e-9).ceil() as usize)
    }
}

/// Quantities recorded at each sampled time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observables {
    pub t: f64,
    pub occupation: f64,
    pub amplitude: Complex64,
    pub trace_error: f64,
    /// Hermiticity defect the unsymmetrised generator would have added over
    /// the step that produced this state.
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub top_level_population: f64,
    /// Probe norm of the initial-correlation generator at `t`; absent in the
    /// Markov limit.
    pub cancellation_residual: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct GateReport {
    /// Largest `dt * |G|` over the stage times.
    pub stability_product: f64,
    pub max_top_level_population: f64,
    pub max_trace_error: f64,
    pub max_hermiticity_defect: f64,
    pub tail_exceeded: bool,
    /// The initial state was not the reduced Gibbs state of `ω₀ a†a`.
    pub initial_override: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    pub observables: Vec<Observables>,
    pub gates: GateReport,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states
            .last()
            .expect("a trajectory holds at least the initial state")
    }

    pub fn final_observables(&self) -> &Observables {
        self.observables
            .last()
            .expect("a trajectory holds at least the initial state")
    }
}

/// Reduced Gibbs state of `ω₀ a†a` at inverse temperature `beta`.
pub fn equilibrium_state(dim: usize, omega0: f64, beta: f64) -> Result<DensityMatrix> {
    gibbs_state(&number_op(dim)?.scale(Complex64::new(omega0, 0.0)), beta)
}

pub(crate) fn observe(
    ops: &SystemOperators,
    rho: &Array2<Complex64>,
    t: f64,
    defect: f64,
    residual: Option<f64>,
) -> Result<Observables> {
    let dim = ops.dim();
    let trace: Complex64 = rho.diag().iter().sum();
    let occupation = (0..dim).map(|i| i as f64 * rho[[i, i]].re).sum();
    let amplitude = (0..dim - 1).map(|i| rho[[i + 1, i]] * ((i + 1) as f64).sqrt()).sum();
    let (values, _) = eigh(rho)?;
    Ok(Observables {
        t,
        occupation,
        amplitude,
        trace_error: (trace - 1.0).norm(),
        hermiticity_defect: defect,
        min_eigenvalue: values[0],
        top_level_population: rho[[dim - 1, dim - 1]].re,
        cancellation_residual: residual,
    })
}

/// Hermitian part of `G(ρ)` and the largest entry of its anti-hermitian part.
fn symmetric_rate(g: &Generator, rho: &Array2<Complex64>) -> (Array2<Complex64>, f64) {
    let raw = g.apply_data(rho);
    let defect = hermiticity_defect(&raw);
    (hermitian_part(&raw), defect)
}

/// One RK4 step of `dF/dt = (G(F) + G(F)†) / 2`. Also returns
/// `dt * max|G(F) - G(F)†|` at the start of the step, the hermiticity
/// defect an unsymmetrised step would introduce.
fn rk4_step(g: [&Generator; 3], rho: &Array2<Complex64>, dt: f64) -> (Array2<Complex64>, f64) {
    let half = Complex64::new(0.5 * dt, 0.0);
    let full = Complex64::new(dt, 0.0);
    let (k1, defect) = symmetric_rate(g[0], rho);
    let mut probe = rho.clone();
    probe.scaled_add(half, &k1);
    let (k2, _) = symmetric_rate(g[1], &probe);
    probe.assign(rho);
    probe.scaled_add(half, &k2);
    let (k3, _) = symmetric_rate(g[1], &probe);
    probe.assign(rho);
    probe.scaled_add(full, &k3);
    let (k4, _) = symmetric_rate(g[2], &probe);
    let mut out = rho.clone();
    let sixth = Complex64::new(dt / 6.0, 0.0);
    out.scaled_add(sixth, &k1);
    out.scaled_add(sixth * 2.0, &k2);
    out.scaled_add(sixth * 2.0, &k3);
    out.scaled_add(sixth, &k4);
    (out, dt * defect)
}

/// Runs RK4 over generators sampled on the half-step grid `t = j dt / 2`.
fn integrate(
    initial: &DensityMatrix,
    ops: Arc<SystemOperators>,
    generators: &[Generator],
    residuals: Option<&[f64]>,
    options: &PropagationOptions,
    steps: usize,
    equilibrium: Option<&DensityMatrix>,
) -> Result<Trajectory> {
    let dt = options.dt;
    let stability_product = generators.iter().map(|g| g.norm_bound()).fold(0.0, f64::max) * dt;
    if stability_product >= options.stability_limit {
        return Err(Error::StabilityGate {
            dt,
            product: stability_product,
            limit: options.stability_limit,
            suggested_dt: 0.9 * dt * options.stability_limit / stability_product,
        });
    }

    let initial_override = match equilibrium {
        Some(eq) => initial.trace_distance(eq)? > 1e-10,
        None => false,
    };
    let tolerances = initial.tolerances();
    let dims = initial.dims().to_vec();
    let mut rho = initial.data().clone();
    let residual_at = |j: usize| residuals.map(|r| r[j]);

    let first = observe(&ops, &rho, 0.0, initial.hermiticity_defect(), residual_at(0))?;
    let mut gates = GateReport {
        stability_product,
        max_top_level_population: first.top_level_population,
        max_trace_error: first.trace_error,
        max_hermiticity_defect: first.hermiticity_defect,
        tail_exceeded: false,
        initial_override,
    };
    let mut times = vec![0.0];
    let mut states = vec![initial.clone()];
    let mut observables = vec![first];

    for n in 0..steps {
        let stage = [&generators[2 * n], &generators[2 * n + 1], &generators[2 * n + 2]];
        let (next, defect) = rk4_step(stage, &rho, dt);
        rho = hermitian_part(&next);
        if !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        gates.max_hermiticity_defect = gates.max_hermiticity_defect.max(defect);
        let top = rho[[ops.dim() - 1, ops.dim() - 1]].re;
        gates.max_top_level_population = gates.max_top_level_population.max(top);
        let last = n + 1 == steps;
        if (n + 1) % options.sample_every == 0 || last {
            let t = (n + 1) as f64 * dt;
            let obs = observe(&ops, &rho, t, defect, residual_at(2 * n + 2))?;
            gates.max_trace_error = gates.max_trace_error.max(obs.trace_error);
            times.push(t);
            states.push(DensityMatrix::new_unchecked(
                FockOperator::new(dims.clone(), rho.clone())?,
                tolerances,
            ));
            observables.push(obs);
        }
    }

    let mut warnings = Vec::new();
    if gates.max_top_level_population > options.tail_threshold {
        gates.tail_exceeded = true;
        warnings.push(format!(
            "top Fock level population reached {:.3e} (threshold {:.1e}); increase system_dim",
            gates.max_top_level_population, options.tail_threshold
        ));
    }
    if initial_override {
        warnings.push("initial state differs from the reduced Gibbs state the correlation terms assume".into());
    }
    Ok(Trajectory {
        times,
        states,
        observables,
        gates,
        warnings,
    })
}

fn check_initial(initial: &DensityMatrix) -> Result<usize> {
    if initial.dims().len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: vec![initial.op().dim()],
            found: initial.dims().to_vec(),
        });
    }
    Ok(initial.dims()[0])
}

/// Kernel coefficients on the half-step grid `t_j = j dt / 2`, `j = 0..=2n`.
pub fn coefficient_grid(bath: &BathSpec, omega0: f64, dt: f64, steps: usize) -> Result<Vec<KernelCoefficients>> {
    (0..=2 * steps)
        .into_par_iter()
        .map(|j| kernel_coefficients(bath, omega0, 0.5 * dt * j as f64))
        .collect()
}

/// Integrates the second-order master equation with time-dependent
/// coefficients from `bath`.
pub fn propagate(
    initial: &DensityMatrix,
    bath: &BathSpec,
    omega0: f64,
    drive: &DriveSpec,
    mode: EvolutionMode,
    options: &PropagationOptions,
) -> Result<Trajectory> {
    if mode == EvolutionMode::Lindblad {
        return Err(invalid("mode", "the Markov limit is integrated by lindblad_propagate"));
    }
    drive.validate()?;
    let steps = options.step_count()?;
    let dim = check_initial(initial)?;
    let ops = Arc::new(SystemOperators::new(dim)?);
    let grid = coefficient_grid(bath, omega0, options.dt, steps)?;
    let generators = grid
        .iter()
        .map(|c| build_generator(ops.clone(), c, omega0, drive, mode))
        .collect::<Result<Vec<_>>>()?;
    let residuals: Vec<f64> = grid.par_iter().map(correlation_probe_norm).collect();
    let equilibrium = equilibrium_state(dim, omega0, bath.beta())?;
    integrate(
        initial,
        ops,
        &generators,
        Some(&residuals),
        options,
        steps,
        Some(&equilibrium),
    )
}

/// Integrates the Markov-limit Lindblad equation.
pub fn lindblad_propagate(
    initial: &DensityMatrix,
    limits: &MarkovLimits,
    drive: &DriveSpec,
    options: &PropagationOptions,
) -> Result<Trajectory> {
    drive.validate()?;
    let steps = options.step_count()?;
    let dim = check_initial(initial)?;
    let ops = Arc::new(SystemOperators::new(dim)?);
    let generators: Vec<Generator> = (0..=2 * steps)
        .map(|j| lindblad_generator(ops.clone(), limits, drive, 0.5 * options.dt * j as f64))
        .collect();
    integrate(initial, ops, &generators, None, options, steps, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathMode;

    fn decoupled() -> BathSpec {
        BathSpec::new(
            vec![BathMode {
                omega: 0.7,
                coupling: 0.0,
            }],
            1.5,
        )
        .unwrap()
    }

    #[test]
    fn decoupled_equilibrium_is_stationary() {
        let rho0 = equilibrium_state(8, 1.0, 1.5).unwrap();
        let traj = propagate(
            &rho0,
            &decoupled(),
            1.0,
            &DriveSpec::none(),
            EvolutionMode::Full,
            &PropagationOptions::new(5.0, 0.01).with_sample_every(50),
        )
        .unwrap();
        assert!(!traj.gates.initial_override);
        for s in &traj.states {
            assert!((s.data() - rho0.data()).iter().all(|z| z.norm() < 1e-10));
        }
        assert_eq!(traj.times.len(), 11);
        assert!((traj.times[10] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn stability_gate_suggests_smaller_step() {
        let rho0 = equilibrium_state(8, 1.0, 1.5).unwrap();
        let err = propagate(
            &rho0,
            &decoupled(),
            1.0,
            &DriveSpec::none(),
            EvolutionMode::Full,
            &PropagationOptions::new(5.0, 0.5),
        )
        .unwrap_err();
        match err {
            Error::StabilityGate { suggested_dt, .. } => assert!(suggested_dt < 0.5 / 7.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lindblad_mode_is_routed_separately() {
        let rho0 = equilibrium_state(4, 1.0, 1.5).unwrap();
        let r = propagate(
            &rho0,
            &decoupled(),
            1.0,
            &DriveSpec::none(),
            EvolutionMode::Lindblad,
            &PropagationOptions::new(1.0, 0.01),
        );
        assert!(r.is_err());
    }

    #[test]
    fn invalid_steps_are_rejected() {
        let rho0 = equilibrium_state(4, 1.0, 1.5).unwrap();
        for opts in [PropagationOptions::new(1.0, 0.0), PropagationOptions::new(1.0, 2.0)] {
            assert!(propagate(&rho0, &decoupled(), 1.0, &DriveSpec::none(), EvolutionMode::Full, &opts).is_err());
        }
    }

    #[test]
    fn tail_population_is_flagged_not_fatal() {
        let dim = 4;
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        psi[dim - 1] = Complex64::new(1.0, 0.0);
        let rho0 = DensityMatrix::pure(&[dim], &psi).unwrap();
        let traj = propagate(
            &rho0,
            &decoupled(),
            1.0,
            &DriveSpec::none(),
            EvolutionMode::NzOnly,
            &PropagationOptions::new(0.1, 0.01),
        )
        .unwrap();
        assert!(traj.gates.tail_exceeded);
        assert!(traj.gates.initial_override);
        assert_eq!(traj.warnings.len(), 2);
    }
}
