//! Boson bath description: discrete modes, thermal occupations and
//! spectral densities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One bath oscillator with angular frequency `omega` and coupling `coupling`
/// to the system (the `V_k` of `V_k (a b_k† + a† b_k)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathMode {
    pub omega: f64,
    pub coupling: f64,
}

/// A finite set of bath modes at inverse temperature `beta`, kept sorted by
/// frequency.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BathSpec {
    modes: Vec<BathMode>,
    beta: f64,
}

impl BathSpec {
    pub fn new(mut modes: Vec<BathMode>, beta: f64) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("modes", "a bath needs at least one mode"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(invalid("beta", format!("must be positive and finite, got {beta}")));
        }
        for m in &modes {
            if !(m.omega > 0.0) || !m.omega.is_finite() {
                return Err(invalid("omega", format!("mode frequency {} must be positive", m.omega)));
            }
            if !(m.coupling >= 0.0) || !m.coupling.is_finite() {
                return Err(invalid("coupling", format!("coupling {} must be >= 0", m.coupling)));
            }
        }
        modes.sort_by(|x, y| x.omega.total_cmp(&y.omega));
        Ok(Self { modes, beta })
    }

    pub fn modes(&self) -> &[BathMode] {
        &self.modes
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Bose occupation of every mode, in mode order.
    pub fn occupations(&self) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| 1.0 / (self.beta * m.omega).exp_m1())
            .collect()
    }

    /// Copy with every coupling multiplied by `factor`.
    pub fn scaled_couplings(&self, factor: f64) -> Result<Self> {
        let modes = self
            .modes
            .iter()
            .map(|m| BathMode {
                omega: m.omega,
                coupling: m.coupling * factor,
            })
            .collect();
        Self::new(modes, self.beta)
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.modes.clone(), beta)
    }

    /// `Σ_k V_k²`.
    pub fn total_coupling(&self) -> f64 {
        self.modes.iter().map(|m| m.coupling * m.coupling).sum()
    }

    pub fn frequency_range(&self) -> (f64, f64) {
        (self.modes[0].omega, self.modes[self.modes.len() - 1].omega)
    }
}

/// Thermal occupation `1 / (exp(βω) - 1)` with ħ = k_B = 1.
pub fn bose_occupation(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(invalid("beta", format!("must be positive, got {beta}")));
    }
    Ok(1.0 / (beta * omega).exp_m1())
}

/// A spectral density `J(ω)` together with the frequency interval on which it
/// is sampled.
pub trait SpectralDensity: Sync {
    fn evaluate(&self, omega: f64) -> f64;

    /// `(lower, upper)` bounds of the sampled support.
    fn support(&self) -> (f64, f64);
}

/// Ohmic-family spectral density `J(ω) = η ω_c^{1-s} ω^s exp(-ω/ω_c)` and
/// its midpoint discretisation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OhmicParams {
    pub eta: f64,
    pub omega_c: f64,
    pub omega_max: f64,
    pub mode_count: usize,
    /// Power `s` of the low-frequency law; 1 is Ohmic.
    #[serde(default = "default_exponent")]
    pub exponent: f64,
}

fn default_exponent() -> f64 {
    1.0
}

impl OhmicParams {
    pub fn new(eta: f64, omega_c: f64, omega_max: f64, mode_count: usize) -> Result<Self> {
        let p = Self {
            eta,
            omega_c,
            omega_max,
            mode_count,
            exponent: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(invalid("eta", "must be >= 0"));
        }
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(invalid("omega_c", "must be positive"));
        }
        if !(self.omega_max >= self.omega_c) || !self.omega_max.is_finite() {
            return Err(invalid("omega_max", "must be finite and >= omega_c"));
        }
        if self.mode_count == 0 {
            return Err(invalid("mode_count", "must be >= 1"));
        }
        if !(self.exponent > 0.0) {
            return Err(invalid("exponent", "must be positive"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        self.omega_max / self.mode_count as f64
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        self.eta * self.omega_c.powf(1.0 - self.exponent) * omega.powf(self.exponent) * (-omega / self.omega_c).exp()
    }
}

impl SpectralDensity for OhmicParams {
    fn evaluate(&self, omega: f64) -> f64 {
        self.spectral_density(omega)
    }

    fn support(&self) -> (f64, f64) {
        (0.0, self.omega_max)
    }
}

/// Midpoint discretisation: `ω_k = (k - ½) Δω`, `V_k² = J(ω_k) Δω / 2π`.
pub fn discretize_ohmic(p: &OhmicParams, beta: f64) -> Result<BathSpec> {
    p.validate()?;
    let spacing = p.spacing();
    let modes = (0..p.mode_count)
        .map(|k| {
            let omega = (k as f64 + 0.5) * spacing;
            BathMode {
                omega,
                coupling: (p.spectral_density(omega) * spacing / (2.0 * PI)).sqrt(),
            }
        })
        .collect();
    BathSpec::new(modes, beta)
}

fn lorentzian(x: f64, width: f64) -> f64 {
    width / (PI * (x * x + width * width))
}

/// Lorentzian-broadened spectral density `2π Σ_k V_k² L_w(ω_k - ω)`.
pub fn spectral_density_estimate(bath: &BathSpec, omega: f64, width: f64) -> Result<f64> {
    if !(width > 0.0) {
        return Err(invalid("width", "must be positive"));
    }
    Ok(2.0
        * PI
        * bath
            .modes
            .iter()
            .map(|m| m.coupling * m.coupling * lorentzian(m.omega - omega, width))
            .sum::<f64>())
}

/// A discrete bath viewed as a continuous spectral density through
/// Lorentzian broadening.
#[derive(Debug, Clone)]
pub struct BroadenedBath {
    bath: BathSpec,
    width: f64,
}

impl BroadenedBath {
    pub fn new(bath: BathSpec, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(invalid("width", "must be positive"));
        }
        Ok(Self { bath, width })
    }
}

impl SpectralDensity for BroadenedBath {
    fn evaluate(&self, omega: f64) -> f64 {
        spectral_density_estimate(&self.bath, omega, self.width).unwrap_or(0.0)
    }

    fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.bath.frequency_range();
        (lo, hi)
    }
}

/// Checks that `omega` lies strictly inside the support of `density`.
pub(crate) fn check_inside(density: &dyn SpectralDensity, omega: f64) -> Result<()> {
    let (lower, upper) = density.support();
    if !(omega > lower && omega < upper) {
        return Err(Error::OutsideSupport { omega, lower, upper });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn occupation_at_ln2_is_one() {
        let n = bose_occupation(2f64.ln(), 1.0).unwrap();
        assert!((n - 1.0).abs() < 1e-15);
    }

    #[test]
    fn occupation_deep_quantum_regime() {
        let n = bose_occupation(20.0, 1.0).unwrap();
        assert!((n - (-20f64).exp()).abs() < 1e-12);
        // exp(-20) + exp(-40) + ...: the leading correction is exp(-40)/exp(-20).
        let series = (-20f64).exp() + (-40f64).exp();
        assert!((n - series).abs() / series < 1e-12);
    }

    #[test]
    fn occupation_rejects_zero_frequency() {
        assert!(bose_occupation(0.0, 1.0).is_err());
        assert!(bose_occupation(-1.0, 1.0).is_err());
        assert!(bose_occupation(1.0, 0.0).is_err());
    }

    #[test]
    fn bath_is_sorted_and_validated() {
        let bath = BathSpec::new(
            vec![
                BathMode {
                    omega: 2.0,
                    coupling: 0.1,
                },
                BathMode {
                    omega: 0.5,
                    coupling: 0.2,
                },
            ],
            1.0,
        )
        .unwrap();
        assert_eq!(bath.modes()[0].omega, 0.5);
        assert!(BathSpec::new(vec![], 1.0).is_err());
        assert!(BathSpec::new(
            vec![BathMode {
                omega: 0.0,
                coupling: 0.1
            }],
            1.0
        )
        .is_err());
        assert!(BathSpec::new(
            vec![BathMode {
                omega: 1.0,
                coupling: -0.1
            }],
            1.0
        )
        .is_err());
    }

    #[test]
    fn zero_eta_gives_decoupled_bath() {
        let p = OhmicParams::new(0.0, 1.0, 10.0, 50).unwrap();
        let bath = discretize_ohmic(&p, 1.0).unwrap();
        assert_eq!(bath.len(), 50);
        assert!(bath.modes().iter().all(|m| m.coupling == 0.0));
        assert_eq!(spectral_density_estimate(&bath, 1.0, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn single_bin_quadrature() {
        let p = OhmicParams::new(0.3, 1.0, 1.0, 1).unwrap();
        let bath = discretize_ohmic(&p, 2.0).unwrap();
        let m = bath.modes()[0];
        assert_eq!(m.omega, 0.5);
        let expected = p.spectral_density(0.5) * 1.0 / (2.0 * PI);
        assert!((m.coupling * m.coupling - expected).abs() < 1e-16);
    }

    #[test]
    fn lorentzian_peak_value() {
        let bath = BathSpec::new(
            vec![BathMode {
                omega: 1.3,
                coupling: 0.2,
            }],
            1.0,
        )
        .unwrap();
        let w = 0.05;
        let v = spectral_density_estimate(&bath, 1.3, w).unwrap();
        assert!((v - 2.0 * 0.04 / w).abs() < 1e-13);
        assert!(spectral_density_estimate(&bath, 1.3, 0.0).is_err());
    }

    #[test]
    fn invalid_ohmic_parameters() {
        assert!(OhmicParams::new(-0.1, 1.0, 10.0, 10).is_err());
        assert!(OhmicParams::new(0.1, 0.0, 10.0, 10).is_err());
        assert!(OhmicParams::new(0.1, 2.0, 1.0, 10).is_err());
        assert!(OhmicParams::new(0.1, 1.0, 10.0, 0).is_err());
    }
}
