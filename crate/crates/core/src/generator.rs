//! Assembly of the time-local generator acting on the oscillator density
//! matrix.
//!
//! Every generator used here has the form
//!
//! ```text
//! G(ρ) = -i[ω a†a + f(t)(a + a†), ρ]
//!        + c₁ [a†, aρ] + c₂ [a, a†ρ] + c₃ [ρa†, a] + c₄ [ρa, a†]
//! ```
//!
//! and the evolution modes differ only in how `ω` and `c₁…c₄` are obtained.
//! Each structure is a commutator, so `Tr G(ρ) = 0` for any `ρ`.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernels::{KernelCoefficients, MarkovLimits};
use crate::operator::{annihilation_op, FockOperator};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    None,
    Constant,
    Sinusoidal,
}

/// External force `H_ext(t) = f(t)(a + a†)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub kind: DriveKind,
    #[serde(default)]
    pub amplitude: f64,
    /// Angular frequency of the sinusoidal drive.
    #[serde(default)]
    pub frequency: f64,
}

impl Default for DriveSpec {
    fn default() -> Self {
        Self::none()
    }
}

impl DriveSpec {
    pub fn none() -> Self {
        Self {
            kind: DriveKind::None,
            amplitude: 0.0,
            frequency: 0.0,
        }
    }

    pub fn constant(amplitude: f64) -> Self {
        Self {
            kind: DriveKind::Constant,
            amplitude,
            frequency: 0.0,
        }
    }

    pub fn sinusoidal(amplitude: f64, frequency: f64) -> Self {
        Self {
            kind: DriveKind::Sinusoidal,
            amplitude,
            frequency,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(invalid("amplitude", "drive amplitude must be finite and >= 0"));
        }
        if !self.frequency.is_finite() {
            return Err(invalid("frequency", "drive frequency must be finite"));
        }
        Ok(())
    }

    /// `f(t)`: zero, `A`, or `A cos(νt)`.
    pub fn value(&self, t: f64) -> f64 {
        match self.kind {
            DriveKind::None => 0.0,
            DriveKind::Constant => self.amplitude,
            DriveKind::Sinusoidal => self.amplitude * (self.frequency * t).cos(),
        }
    }

    pub fn is_time_dependent(&self) -> bool {
        self.kind == DriveKind::Sinusoidal && self.frequency != 0.0 && self.amplitude != 0.0
    }
}

/// Which terms of the master equation are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvolutionMode {
    /// Free part, initial-correlation shift, Nakajima–Zwanzig term and the
    /// initial-correlation kernel.
    Full,
    /// Markov-limit Lindblad equation.
    Lindblad,
    /// Free part and the time-dependent Nakajima–Zwanzig term only.
    NzOnly,
    /// Same generator as `NzOnly`; marks runs whose reference dynamics start
    /// from the factorised state `ρ_B ⊗ F_S` instead of the joint Gibbs state.
    NoCorrelations,
}

impl EvolutionMode {
    pub fn keeps_correlation_terms(self) -> bool {
        self == EvolutionMode::Full
    }
}

/// Ladder operators of a truncated oscillator, shared by every generator of
/// the same dimension.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    dim: usize,
    a: Array2<Complex64>,
    a_dag: Array2<Complex64>,
    position: Array2<Complex64>,
    /// Diagonal of `a†a`.
    number: Array1<Complex64>,
    /// Diagonal of `a a†` (the top level is 0 under truncation).
    anti_number: Array1<Complex64>,
}

impl SystemOperators {
    pub fn new(dim: usize) -> Result<Self> {
        let a = annihilation_op(dim)?.into_data();
        let a_dag = crate::operator::dagger(&a);
        let number = a_dag.dot(&a).diag().to_owned();
        let anti_number = a.dot(&a_dag).diag().to_owned();
        let position = &a + &a_dag;
        Ok(Self {
            dim,
            a,
            a_dag,
            position,
            number,
            anti_number,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn annihilation(&self) -> &Array2<Complex64> {
        &self.a
    }

    pub fn creation(&self) -> &Array2<Complex64> {
        &self.a_dag
    }

    pub fn number(&self) -> Array2<Complex64> {
        Array2::from_diag(&self.number)
    }
}

fn scale_rows(diag: &Array1<Complex64>, m: &Array2<Complex64>) -> Array2<Complex64> {
    let mut out = m.clone();
    for (mut row, &d) in out.outer_iter_mut().zip(diag.iter()) {
        row.mapv_inplace(|z| z * d);
    }
    out
}

fn scale_cols(m: &Array2<Complex64>, diag: &Array1<Complex64>) -> Array2<Complex64> {
    let mut out = m.clone();
    for mut row in out.outer_iter_mut() {
        for (z, &d) in row.iter_mut().zip(diag.iter()) {
            *z *= d;
        }
    }
    out
}

/// The four dissipative structures `[a†, aρ]`, `[a, a†ρ]`, `[ρa†, a]`,
/// `[ρa, a†]`.
pub(crate) fn structures(ops: &SystemOperators, rho: &Array2<Complex64>) -> [Array2<Complex64>; 4] {
    let a_rho_ad = ops.a.dot(rho).dot(&ops.a_dag);
    let ad_rho_a = ops.a_dag.dot(rho).dot(&ops.a);
    [
        scale_rows(&ops.number, rho) - &a_rho_ad,
        scale_rows(&ops.anti_number, rho) - &ad_rho_a,
        scale_cols(rho, &ops.number) - &a_rho_ad,
        scale_cols(rho, &ops.anti_number) - &ad_rho_a,
    ]
}

/// Initial-correlation part alone: shift term plus the integrated kernel.
pub(crate) fn correlation_generator(
    ops: &SystemOperators,
    c: &KernelCoefficients,
    rho: &Array2<Complex64>,
) -> Array2<Complex64> {
    let [x1, x2, _, _] = structures(ops, rho);
    let c1 = I * c.lsi_plus + c.ki_plus;
    let c2 = -I * c.lsi_minus + c.ki_minus;
    x1 * c1 + x2 * c2
}

/// A time-local generator frozen at one instant.
#[derive(Debug, Clone)]
pub struct Generator {
    ops: Arc<SystemOperators>,
    frequency: f64,
    drive: f64,
    coefficients: [Complex64; 4],
}

impl Generator {
    pub fn new(ops: Arc<SystemOperators>, frequency: f64, drive: f64, coefficients: [Complex64; 4]) -> Self {
        Self {
            ops,
            frequency,
            drive,
            coefficients,
        }
    }

    pub fn dim(&self) -> usize {
        self.ops.dim
    }

    /// Coefficients of `[a†, aρ]`, `[a, a†ρ]`, `[ρa†, a]`, `[ρa, a†]`.
    pub fn coefficients(&self) -> [Complex64; 4] {
        self.coefficients
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn drive(&self) -> f64 {
        self.drive
    }

    pub(crate) fn apply_data(&self, rho: &Array2<Complex64>) -> Array2<Complex64> {
        let ops = &*self.ops;
        let n_rho = scale_rows(&ops.number, rho);
        let rho_n = scale_cols(rho, &ops.number);
        let mut out = (&n_rho - &rho_n) * (-I * self.frequency);
        if self.drive != 0.0 {
            let comm = ops.position.dot(rho) - rho.dot(&ops.position);
            out = out + comm * (-I * self.drive);
        }
        if self.coefficients.iter().any(|c| c.norm() != 0.0) {
            for (x, &c) in structures(ops, rho).iter().zip(self.coefficients.iter()) {
                out.scaled_add(c, x);
            }
        }
        out
    }

    pub fn apply(&self, rho: &FockOperator) -> Result<FockOperator> {
        if rho.dims() != [self.ops.dim] {
            return Err(Error::DimensionMismatch {
                expected: vec![self.ops.dim],
                found: rho.dims().to_vec(),
            });
        }
        FockOperator::new(vec![self.ops.dim], self.apply_data(rho.data()))
    }

    /// Upper bound on the spectral-norm gain of the generator.
    ///
    /// `‖[H, ·]‖ ≤ spread(H)`, `‖a‖² = d - 1` and each structure is a
    /// difference of two terms bounded by `‖a‖²`.
    pub fn norm_bound(&self) -> f64 {
        let levels = (self.ops.dim - 1) as f64;
        let free = self.frequency.abs() * levels + 4.0 * self.drive.abs() * levels.sqrt();
        let dissipative: f64 = self.coefficients.iter().map(|c| c.norm()).sum();
        free + 2.0 * levels * dissipative
    }
}

/// Generator of the second-order master equation at time `coeffs.t`.
pub fn build_generator(
    ops: Arc<SystemOperators>,
    coeffs: &KernelCoefficients,
    omega0: f64,
    drive: &DriveSpec,
    mode: EvolutionMode,
) -> Result<Generator> {
    let nz = [
        -coeffs.gamma0,
        -coeffs.gamma0_prime.conj(),
        -coeffs.gamma0.conj(),
        -coeffs.gamma0_prime,
    ];
    let coefficients = match mode {
        EvolutionMode::Full => [
            nz[0] + I * coeffs.lsi_plus + coeffs.ki_plus,
            nz[1] - I * coeffs.lsi_minus + coeffs.ki_minus,
            nz[2],
            nz[3],
        ],
        EvolutionMode::NzOnly | EvolutionMode::NoCorrelations => nz,
        EvolutionMode::Lindblad => return Err(invalid("mode", "use lindblad_generator for the Markov limit")),
    };
    Ok(Generator::new(ops, omega0, drive.value(coeffs.t), coefficients))
}

/// `-i[(ω₀ + Δω₀)a†a + H_ext(t), ρ] + Γ↓ D[a]ρ + Γ↑ D[a†]ρ`.
///
/// `D[a] = -([a†, aρ] + [ρa†, a]) / 2` and `D[a†] = -([a, a†ρ] + [ρa, a†]) / 2`.
pub fn lindblad_generator(ops: Arc<SystemOperators>, limits: &MarkovLimits, drive: &DriveSpec, t: f64) -> Generator {
    let down = Complex64::new(-0.5 * limits.rate_down, 0.0);
    let up = Complex64::new(-0.5 * limits.rate_up, 0.0);
    Generator::new(
        ops,
        limits.omega0 + limits.delta_omega0,
        drive.value(t),
        [down, up, down, up],
    )
}
