//! Closed-form scalar coefficients of the second-order master equation for
//! an oscillator `ω₀ a†a` coupled to boson modes through
//! `Σ_k V_k (a b_k† + a† b_k)`, starting from the joint Gibbs state.
//!
//! With `Δ_k = ω₀ - ω_k` and `A_k(t) = ∫₀ᵗ e^{iΔ_k τ} dτ` the coefficients
//! are
//!
//! * initial-correlation shift (time independent):
//!   `lsi₊ = Σ V_k² (1+N_k) (e^{βΔ_k} - 1)/Δ_k`,
//!   `lsi₋ = Σ V_k² N_k (e^{-βΔ_k} - 1)/Δ_k`;
//! * Nakajima–Zwanzig rates:
//!   `γ₀(t) = Σ V_k² (1+N_k) A_k(t)`, `γ₀'(t) = Σ V_k² N_k A_k(t)`;
//! * initial-correlation kernel:
//!   `ki₊(t) = -Σ V_k² (1+N_k) (e^{βΔ_k} - 1) A_k(t)`,
//!   `ki₋(t) = -Σ V_k² N_k (e^{-βΔ_k} - 1) A_k(t)*`.
//!
//! How they multiply operator structures is fixed in [`crate::generator`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{bose_occupation, check_inside, BathSpec, SpectralDensity};
use crate::error::{invalid, Result};
use crate::generator::{correlation_generator, SystemOperators};
use crate::quadrature::integrate;

/// Detunings below `RESONANCE_TOLERANCE * ω₀` take the series branch of
/// `(e^{βΔ} - 1)/Δ`.
pub const RESONANCE_TOLERANCE: f64 = 1e-8;

/// Fock dimension of the probe operators used by [`cancellation_residual`].
pub const PROBE_DIM: usize = 4;

/// Coefficients of every operator structure at a single time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficients {
    pub t: f64,
    /// Multiplies `[a†, aρ]` (emission channel).
    pub gamma0: Complex64,
    /// Multiplies `[ρa, a†]` (absorption channel).
    pub gamma0_prime: Complex64,
    /// Multiplies `[a†, aρ]`.
    pub ki_plus: Complex64,
    /// Multiplies `[a, a†ρ]`.
    pub ki_minus: Complex64,
    pub lsi_plus: f64,
    pub lsi_minus: f64,
}

impl KernelCoefficients {
    pub fn zero(t: f64) -> Self {
        let z = Complex64::new(0.0, 0.0);
        Self {
            t,
            gamma0: z,
            gamma0_prime: z,
            ki_plus: z,
            ki_minus: z,
            lsi_plus: 0.0,
            lsi_minus: 0.0,
        }
    }
}

/// Long-time (Markov) limit of the collision term for a continuous spectral
/// density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovLimits {
    pub omega0: f64,
    pub beta: f64,
    /// Principal-value frequency shift `Δω₀`.
    pub delta_omega0: f64,
    /// `J(ω₀)`.
    pub spectral_density: f64,
    /// `N(ω₀)`.
    pub occupation: f64,
    /// `J(ω₀)(1 + N₀)`, rate of `D[a]`.
    pub rate_down: f64,
    /// `J(ω₀) N₀`, rate of `D[a†]`.
    pub rate_up: f64,
    /// Asymptotic initial-correlation coefficients, in the same structural
    /// normalisation as `lsi_plus` / `lsi_minus`.
    pub ki_asymptotic_plus: f64,
    pub ki_asymptotic_minus: f64,
}

fn check_omega0(omega0: f64) -> Result<()> {
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(invalid("omega0", format!("must be positive, got {omega0}")));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// `(e^{βΔ} - 1)/Δ`, with the removable singularity at `Δ = 0` handled by
/// `β(1 + βΔ/2)` inside `|Δ| < resonance`.
pub fn thermal_ratio(delta: f64, beta: f64, resonance: f64) -> f64 {
    if delta.abs() < resonance {
        beta * (1.0 + 0.5 * beta * delta)
    } else {
        (beta * delta).exp_m1() / delta
    }
}

/// `∫₀ᵗ e^{iΔτ} dτ = t e^{iΔt/2} sinc(Δt/2)`, finite for every `Δ`.
pub fn phase_integral(delta: f64, t: f64) -> Complex64 {
    let half = 0.5 * delta * t;
    let sinc = if half.abs() < 1e-4 {
        1.0 - half * half / 6.0
    } else {
        half.sin() / half
    };
    Complex64::from_polar(t * sinc, half)
}

struct ModeTerm {
    weight: f64,
    occupation: f64,
    detuning: f64,
    /// `(1 + N_k)(e^{βΔ_k} - 1)`.
    emission: f64,
    /// `N_k (e^{-βΔ_k} - 1)`, evaluated without forming `0 · ∞` at low
    /// temperature.
    absorption: f64,
}

impl ModeTerm {
    /// This mode's share of `(lsi₊, lsi₋)`.
    fn shift_weights(&self, beta: f64, resonance: f64) -> (f64, f64) {
        let plus = self.weight * (1.0 + self.occupation) * thermal_ratio(self.detuning, beta, resonance);
        let minus = if self.detuning.abs() < resonance {
            -self.weight * self.occupation * beta * (1.0 - 0.5 * beta * self.detuning)
        } else {
            self.weight * self.absorption / self.detuning
        };
        (plus, minus)
    }
}

fn mode_terms(bath: &BathSpec, omega0: f64) -> impl Iterator<Item = ModeTerm> + '_ {
    let beta = bath.beta();
    bath.modes().iter().map(move |m| {
        let detuning = omega0 - m.omega;
        let denominator = (beta * m.omega).exp_m1();
        let occupation = 1.0 / denominator;
        let absorption = if denominator.is_finite() {
            (-beta * detuning).exp_m1() / denominator
        } else {
            (-beta * omega0).exp()
        };
        ModeTerm {
            weight: m.coupling * m.coupling,
            occupation,
            detuning,
            emission: (1.0 + occupation) * (beta * detuning).exp_m1(),
            absorption,
        }
    })
}

/// Coefficients of the initial-correlation shift `(lsi₊, lsi₋)`.
pub fn lsi_coefficients(bath: &BathSpec, omega0: f64) -> Result<(f64, f64)> {
    check_omega0(omega0)?;
    let beta = bath.beta();
    let resonance = RESONANCE_TOLERANCE * omega0;
    Ok(mode_terms(bath, omega0).fold((0.0, 0.0), |(plus, minus), m| {
        let (p, q) = m.shift_weights(beta, resonance);
        (plus + p, minus + q)
    }))
}

/// Time-local Nakajima–Zwanzig rates `(γ₀(t), γ₀'(t))`.
pub fn gamma0(bath: &BathSpec, omega0: f64, t: f64) -> Result<(Complex64, Complex64)> {
    check_omega0(omega0)?;
    check_time(t)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(mode_terms(bath, omega0).fold((zero, zero), |(g, gp), m| {
        let phase = phase_integral(m.detuning, t);
        (
            g + phase * (m.weight * (1.0 + m.occupation)),
            gp + phase * (m.weight * m.occupation),
        )
    }))
}

/// Finite-time initial-correlation kernel coefficients `(ki₊(t), ki₋(t))`.
pub fn ki_coefficients(bath: &BathSpec, omega0: f64, t: f64) -> Result<(Complex64, Complex64)> {
    check_omega0(omega0)?;
    check_time(t)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(mode_terms(bath, omega0).fold((zero, zero), |(kp, km), m| {
        let phase = phase_integral(m.detuning, t);
        (
            kp - phase * (m.weight * m.emission),
            km - phase.conj() * (m.weight * m.absorption),
        )
    }))
}

/// All coefficients at time `t` in one pass over the modes.
pub fn kernel_coefficients(bath: &BathSpec, omega0: f64, t: f64) -> Result<KernelCoefficients> {
    let (lsi_plus, lsi_minus) = lsi_coefficients(bath, omega0)?;
    let (gamma0, gamma0_prime) = gamma0(bath, omega0, t)?;
    let (ki_plus, ki_minus) = ki_coefficients(bath, omega0, t)?;
    Ok(KernelCoefficients {
        t,
        gamma0,
        gamma0_prime,
        ki_plus,
        ki_minus,
        lsi_plus,
        lsi_minus,
    })
}

/// `t → ∞` limit of the initial-correlation kernel for a discrete bath,
/// expressed in the normalisation of [`lsi_coefficients`].
///
/// Each mode's time integral is replaced by `πδ(Δ) + iP/Δ`; the delta part
/// multiplies `e^{±βΔ} - 1`, which vanishes on its support, so only the
/// principal part survives and no regularisation is needed.
pub fn ki_asymptotic_coefficients(bath: &BathSpec, omega0: f64) -> Result<(f64, f64)> {
    ki_asymptotic_with_sign(bath, omega0, 1.0)
}

/// Same as [`ki_asymptotic_coefficients`] with an overall sign flip applied
/// to the kernel; used by negative-control checks.
pub fn ki_asymptotic_with_sign(bath: &BathSpec, omega0: f64, sign: f64) -> Result<(f64, f64)> {
    check_omega0(omega0)?;
    let beta = bath.beta();
    let resonance = RESONANCE_TOLERANCE * omega0;
    let i = Complex64::new(0.0, 1.0);
    let mut plus = 0.0;
    let mut minus = 0.0;
    for m in mode_terms(bath, omega0) {
        // P/Δ times (e^{±βΔ} - 1), i.e. the shift weights with the sign of Δ
        // absorbed; the δ(Δ) part contributes nothing.
        let (principal_up, principal_down) = m.shift_weights(beta, resonance);
        // ki₊(∞) = -(1+N)V²(e^{βΔ}-1)·i/Δ multiplies [a†, aρ] = -[aρ, a†],
        // so its structural coefficient is -i·ki₊(∞).
        let ki_up = -i * principal_up * sign;
        plus += (-i * ki_up).re;
        // ki₋(∞) = -N V²(e^{-βΔ}-1)·(-i/Δ) multiplies [a, a†ρ] = -[a†ρ, a],
        // so its structural coefficient is i·ki₋(∞).
        let ki_down = i * principal_down * sign;
        minus += (i * ki_down).re;
    }
    Ok((plus, minus))
}

/// `P ∫ dω/2π J(ω)/(ω₀ - ω)` over the support of `density`.
///
/// A symmetric window of half-width `w` around the pole is excluded and the
/// result extrapolated to `w → 0` with two Richardson steps (the excluded
/// contribution is odd in `w`).
pub fn principal_value_shift(density: &dyn SpectralDensity, omega0: f64, pv_window: f64) -> Result<f64> {
    check_inside(density, omega0)?;
    if !(pv_window > 0.0) {
        return Err(invalid("pv_window", "must be positive"));
    }
    let (lower, upper) = density.support();
    let room = (omega0 - lower).min(upper - omega0);
    let w = pv_window.min(0.5 * room);
    let integrand = |omega: f64| density.evaluate(omega) / (omega0 - omega) / (2.0 * PI);
    let excluded = |half_width: f64| {
        integrate(&integrand, lower, omega0 - half_width, 1e-15, 1e-13)
            + integrate(&integrand, omega0 + half_width, upper, 1e-15, 1e-13)
    };
    let (i1, i2, i4) = (excluded(w), excluded(0.5 * w), excluded(0.25 * w));
    let r1 = 2.0 * i2 - i1;
    let r2 = 2.0 * i4 - i2;
    Ok((8.0 * r2 - r1) / 7.0)
}

/// Markov limits of the collision term for a continuous spectral density.
pub fn markov_limits(density: &dyn SpectralDensity, beta: f64, omega0: f64, pv_window: f64) -> Result<MarkovLimits> {
    check_omega0(omega0)?;
    let occupation = bose_occupation(omega0, beta)?;
    let delta_omega0 = principal_value_shift(density, omega0, pv_window)?;
    let spectral_density = density.evaluate(omega0);
    let (ki_asymptotic_plus, ki_asymptotic_minus) = continuum_ki_asymptotic(density, beta, omega0)?;
    Ok(MarkovLimits {
        omega0,
        beta,
        delta_omega0,
        spectral_density,
        occupation,
        rate_down: spectral_density * (1.0 + occupation),
        rate_up: spectral_density * occupation,
        ki_asymptotic_plus,
        ki_asymptotic_minus,
    })
}

fn continuum_channel_integral(density: &dyn SpectralDensity, beta: f64, omega0: f64, sign: f64) -> f64 {
    let (lower, upper) = density.support();
    let resonance = RESONANCE_TOLERANCE * omega0;
    let integrand = |omega: f64| {
        if omega <= 0.0 {
            return 0.0;
        }
        let occupation = 1.0 / (beta * omega).exp_m1();
        let weight = if sign > 0.0 { 1.0 + occupation } else { occupation };
        density.evaluate(omega) * weight * thermal_ratio(omega0 - omega, sign * beta, resonance) / (2.0 * PI)
    };
    let split = omega0.clamp(lower, upper);
    integrate(&integrand, lower, split, 1e-15, 1e-12) + integrate(&integrand, split, upper, 1e-15, 1e-12)
}

/// Continuum version of [`lsi_coefficients`].
pub fn continuum_lsi(density: &dyn SpectralDensity, beta: f64, omega0: f64) -> Result<(f64, f64)> {
    check_omega0(omega0)?;
    bose_occupation(omega0, beta)?;
    Ok((
        continuum_channel_integral(density, beta, omega0, 1.0),
        continuum_channel_integral(density, beta, omega0, -1.0),
    ))
}

fn continuum_ki_asymptotic(density: &dyn SpectralDensity, beta: f64, omega0: f64) -> Result<(f64, f64)> {
    let (plus, minus) = continuum_lsi(density, beta, omega0)?;
    Ok((-plus, -minus))
}

/// Max-norm of the summed initial-correlation generator (shift term plus
/// the time-integrated kernel) over the matrix-unit probes `|m><n|` of a
/// `PROBE_DIM`-level oscillator.
pub fn cancellation_residual(bath: &BathSpec, omega0: f64, t: f64) -> Result<f64> {
    let c = kernel_coefficients(bath, omega0, t)?;
    Ok(correlation_probe_norm(&c))
}

pub(crate) fn correlation_probe_norm(c: &KernelCoefficients) -> f64 {
    let ops = SystemOperators::new(PROBE_DIM).expect("probe dimension is valid");
    let mut worst: f64 = 0.0;
    for m in 0..PROBE_DIM {
        for n in 0..PROBE_DIM {
            let mut probe = ndarray::Array2::zeros((PROBE_DIM, PROBE_DIM));
            probe[[m, n]] = Complex64::new(1.0, 0.0);
            let out = correlation_generator(&ops, c, &probe);
            worst = worst.max(out.iter().fold(0.0, |acc: f64, z| acc.max(z.norm())));
        }
    }
    worst
}

/// Mean of [`cancellation_residual`] over `samples` equally spaced times in
/// `[t_start, t_start + window]`.
pub fn cancellation_residual_window_mean(
    bath: &BathSpec,
    omega0: f64,
    t_start: f64,
    window: f64,
    samples: usize,
) -> Result<f64> {
    let samples = samples.max(1);
    let mut total = 0.0;
    for s in 0..samples {
        let t = t_start + window * s as f64 / (samples.max(2) - 1) as f64;
        total += cancellation_residual(bath, omega0, t)?;
    }
    Ok(total / samples as f64)
}

/// Probe norm of the correlation generator averaged over the window
/// (coefficients are averaged before the norm is taken).
pub fn averaged_cancellation_residual(
    bath: &BathSpec,
    omega0: f64,
    t_start: f64,
    window: f64,
    samples: usize,
) -> Result<f64> {
    let samples = samples.max(2);
    let mut acc = KernelCoefficients::zero(t_start);
    let (lsi_plus, lsi_minus) = lsi_coefficients(bath, omega0)?;
    acc.lsi_plus = lsi_plus;
    acc.lsi_minus = lsi_minus;
    for s in 0..samples {
        // Midpoint samples so that the mean of a pure oscillation over whole
        // periods is exact.
        let t = t_start + window * (s as f64 + 0.5) / samples as f64;
        let (kp, km) = ki_coefficients(bath, omega0, t)?;
        acc.ki_plus += kp / samples as f64;
        acc.ki_minus += km / samples as f64;
    }
    Ok(correlation_probe_norm(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathMode;

    fn single(omega: f64, coupling: f64, beta: f64) -> BathSpec {
        BathSpec::new(vec![BathMode { omega, coupling }], beta).unwrap()
    }

    #[test]
    fn decoupled_bath_has_no_coefficients() {
        let bath = single(0.7, 0.0, 1.0);
        assert_eq!(lsi_coefficients(&bath, 1.0).unwrap(), (0.0, 0.0));
        let c = kernel_coefficients(&bath, 1.0, 3.0).unwrap();
        assert_eq!(
            c.gamma0.norm() + c.gamma0_prime.norm() + c.ki_plus.norm() + c.ki_minus.norm(),
            0.0
        );
    }

    #[test]
    fn everything_integrated_vanishes_at_zero_time() {
        let bath = BathSpec::new(
            vec![
                BathMode {
                    omega: 0.4,
                    coupling: 0.1,
                },
                BathMode {
                    omega: 1.6,
                    coupling: 0.2,
                },
            ],
            2.0,
        )
        .unwrap();
        let c = kernel_coefficients(&bath, 1.0, 0.0).unwrap();
        assert_eq!(c.gamma0.norm() + c.gamma0_prime.norm(), 0.0);
        assert_eq!(c.ki_plus.norm() + c.ki_minus.norm(), 0.0);
        assert!(c.lsi_plus != 0.0 && c.lsi_minus != 0.0);
    }

    #[test]
    fn exactly_resonant_mode() {
        let (v, beta) = (0.3, 1.7);
        let bath = single(1.0, v, beta);
        let n = bath.occupations()[0];
        let (lp, lm) = lsi_coefficients(&bath, 1.0).unwrap();
        assert!((lp - v * v * (1.0 + n) * beta).abs() < 1e-15);
        assert!((lm + v * v * n * beta).abs() < 1e-15);

        let t = 2.5;
        let (g, gp) = gamma0(&bath, 1.0, t).unwrap();
        assert!((g - Complex64::new(v * v * (1.0 + n) * t, 0.0)).norm() < 1e-15);
        assert!((gp - Complex64::new(v * v * n * t, 0.0)).norm() < 1e-15);

        // (e^{βΔ} - 1) vanishes at resonance while the τ integral stays t.
        let (kp, km) = ki_coefficients(&bath, 1.0, t).unwrap();
        assert_eq!(kp.norm() + km.norm(), 0.0);
    }

    #[test]
    fn negative_time_is_rejected() {
        let bath = single(0.7, 0.1, 1.0);
        assert!(gamma0(&bath, 1.0, -1.0).is_err());
        assert!(ki_coefficients(&bath, 1.0, -1e-9).is_err());
        assert!(lsi_coefficients(&bath, 0.0).is_err());
    }

    #[test]
    fn phase_integral_branches_agree() {
        for &(delta, t) in &[(1e-3, 0.2), (0.5, 3.0), (-2.0, 7.0), (1e-9, 100.0)] {
            let direct: Complex64 = if delta == 0.0 {
                Complex64::new(t, 0.0)
            } else {
                (Complex64::new(0.0, delta * t).exp() - 1.0) / Complex64::new(0.0, delta)
            };
            let closed = phase_integral(delta, t);
            assert!((closed - direct).norm() <= 1e-9 * t, "{delta} {t}");
        }
    }

    #[test]
    fn zero_temperature_limit_kills_absorption_channel() {
        let bath = BathSpec::new(
            vec![
                BathMode {
                    omega: 0.8,
                    coupling: 0.1,
                },
                BathMode {
                    omega: 1.3,
                    coupling: 0.1,
                },
            ],
            1000.0,
        )
        .unwrap();
        let c = kernel_coefficients(&bath, 1.0, 4.0).unwrap();
        assert_eq!(c.gamma0_prime.norm(), 0.0);
        assert_eq!(c.lsi_minus, 0.0);
        assert_eq!(c.ki_minus.norm(), 0.0);
        assert!(c.gamma0.norm() > 0.0);
    }

    #[test]
    fn residual_at_zero_time_is_the_shift_generator() {
        let bath = single(0.6, 0.2, 1.0);
        let mut shift_only = kernel_coefficients(&bath, 1.0, 0.0).unwrap();
        shift_only.ki_plus = Complex64::new(0.0, 0.0);
        shift_only.ki_minus = Complex64::new(0.0, 0.0);
        let r0 = cancellation_residual(&bath, 1.0, 0.0).unwrap();
        assert_eq!(r0, correlation_probe_norm(&shift_only));
        assert!(r0 > 0.0);
    }

    #[test]
    fn pv_window_must_be_positive() {
        let p = crate::bath::OhmicParams::new(0.1, 1.0, 10.0, 100).unwrap();
        assert!(principal_value_shift(&p, 1.0, 0.0).is_err());
        assert!(principal_value_shift(&p, 11.0, 0.1).is_err());
    }
}
