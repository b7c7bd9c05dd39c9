//! Scenario files: one TOML document per run.

use std::path::{Path, PathBuf};

use corrgme::bath::{discretize_ohmic, BathMode, BathSpec, BroadenedBath, OhmicParams, SpectralDensity};
use corrgme::generator::{DriveSpec, EvolutionMode};
use corrgme::oracle::{FullModel, InitialCondition, DEFAULT_DIMENSION_CAP, MAX_ORACLE_MODES};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub omega0: f64,
    pub beta: f64,
    pub system_dim: usize,
    pub t_max: f64,
    pub dt: f64,
    #[serde(default = "default_mode")]
    pub mode: EvolutionMode,
    /// Write every n-th step.
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Seed for the random probes of `verify`.
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub bath: BathConfig,
    #[serde(default)]
    pub drive: DriveSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default)]
    pub markov: MarkovConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_mode() -> EvolutionMode {
    EvolutionMode::Full
}

fn default_sample_every() -> usize {
    1
}

fn default_seed() -> u64 {
    1
}

/// Exactly one of `modes` and `ohmic`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<Vec<BathMode>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ohmic: Option<OhmicParams>,
}

/// Displaced thermal start `D(α) ρ_th(β') D(α)†` in place of the reduced
/// Gibbs state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    /// `[Re α, Im α]`.
    #[serde(default)]
    pub displacement: [f64; 2],
    /// Inverse temperature of the state before displacement; defaults to `beta`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkovConfig {
    #[serde(default = "default_pv_window")]
    pub pv_window: f64,
    /// Lorentzian width that turns explicit modes into a continuous density.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub broadening: Option<f64>,
}

fn default_pv_window() -> f64 {
    0.05
}

impl Default for MarkovConfig {
    fn default() -> Self {
        Self {
            pv_window: default_pv_window(),
            broadening: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    /// Per-mode Fock dimensions; chosen from `tail` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode_dims: Option<Vec<usize>>,
    #[serde(default = "default_oracle_tail")]
    pub tail: f64,
    #[serde(default = "default_min_dim")]
    pub min_dim: usize,
    #[serde(default = "default_cap")]
    pub cap: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Also run the comparison with every coupling halved.
    #[serde(default)]
    pub halve_coupling: bool,
}

fn default_oracle_tail() -> f64 {
    1e-6
}

fn default_min_dim() -> usize {
    3
}

fn default_cap() -> usize {
    DEFAULT_DIMENSION_CAP
}

fn default_probes() -> usize {
    20
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mode_dims: None,
            tail: default_oracle_tail(),
            min_dim: default_min_dim(),
            cap: default_cap(),
            probes: default_probes(),
            halve_coupling: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    #[serde(default = "default_trace")]
    pub trace: f64,
    /// Top Fock level population gate.
    #[serde(default = "default_tail")]
    pub tail: f64,
    /// Upper bound on `dt · ‖G‖`.
    #[serde(default = "default_stability")]
    pub stability: f64,
    #[serde(default = "default_oracle_distance")]
    pub oracle_distance: f64,
    /// Minimum reduction of the oracle distance when couplings are halved.
    #[serde(default = "default_coupling_scaling")]
    pub coupling_scaling: f64,
    #[serde(default = "default_projector")]
    pub projector: f64,
    #[serde(default = "default_cancellation")]
    pub cancellation: f64,
    #[serde(default = "default_gibbs_ratio")]
    pub gibbs_ratio: [f64; 2],
}

fn default_trace() -> f64 {
    1e-8
}

fn default_tail() -> f64 {
    1e-6
}

fn default_stability() -> f64 {
    0.1
}

fn default_oracle_distance() -> f64 {
    2e-3
}

fn default_coupling_scaling() -> f64 {
    3.0
}

fn default_projector() -> f64 {
    1e-10
}

fn default_cancellation() -> f64 {
    1e-14
}

fn default_gibbs_ratio() -> [f64; 2] {
    [3.5, 4.5]
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            trace: default_trace(),
            tail: default_tail(),
            stability: default_stability(),
            oracle_distance: default_oracle_distance(),
            coupling_scaling: default_coupling_scaling(),
            projector: default_projector(),
            cancellation: default_cancellation(),
            gibbs_ratio: default_gibbs_ratio(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// Multiplies every coupling.
    CouplingScale,
    Beta,
    Omega0,
    DriveAmplitude,
    Dt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    /// Worker threads; all available cores when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn config_error(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Config(format!("{key}: {}", reason.into()))
}

fn positive(key: &str, value: f64) -> Result<(), CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(config_error(key, format!("must be positive and finite, got {value}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Runtime(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("omega0", self.omega0)?;
        positive("beta", self.beta)?;
        positive("t_max", self.t_max)?;
        positive("dt", self.dt)?;
        if self.dt >= self.t_max {
            return Err(config_error(
                "dt",
                format!("must be smaller than t_max ({})", self.t_max),
            ));
        }
        if self.system_dim < 2 {
            return Err(config_error("system_dim", "must be at least 2"));
        }
        if self.sample_every == 0 {
            return Err(config_error("sample_every", "must be at least 1"));
        }
        self.drive
            .validate()
            .map_err(|e| config_error("drive", e.to_string()))?;
        match (&self.bath.modes, &self.bath.ohmic) {
            (Some(_), Some(_)) => return Err(config_error("bath", "give either `modes` or `ohmic`, not both")),
            (None, None) => return Err(config_error("bath", "one of `modes` or `ohmic` is required")),
            (Some(modes), None) => {
                BathSpec::new(modes.clone(), self.beta).map_err(|e| config_error("bath.modes", e.to_string()))?;
            }
            (None, Some(p)) => p.validate().map_err(|e| config_error("bath.ohmic", e.to_string()))?,
        }
        positive("markov.pv_window", self.markov.pv_window)?;
        if let Some(width) = self.markov.broadening {
            positive("markov.broadening", width)?;
        }
        if let Some(initial) = &self.initial {
            if let Some(b) = initial.beta {
                positive("initial.beta", b)?;
            }
            if !initial.displacement.iter().all(|x| x.is_finite()) {
                return Err(config_error("initial.displacement", "must be finite"));
            }
        }
        if let Some(oracle) = &self.oracle {
            if !(oracle.tail > 0.0 && oracle.tail < 1.0) {
                return Err(config_error("oracle.tail", "must lie in (0, 1)"));
            }
            if oracle.probes == 0 {
                return Err(config_error("oracle.probes", "must be at least 1"));
            }
        }
        let t = &self.tolerances;
        for (key, value) in [
            ("tolerances.trace", t.trace),
            ("tolerances.tail", t.tail),
            ("tolerances.stability", t.stability),
            ("tolerances.oracle_distance", t.oracle_distance),
            ("tolerances.coupling_scaling", t.coupling_scaling),
            ("tolerances.projector", t.projector),
            ("tolerances.cancellation", t.cancellation),
        ] {
            positive(key, value)?;
        }
        if !(t.gibbs_ratio[0] < t.gibbs_ratio[1]) {
            return Err(config_error(
                "tolerances.gibbs_ratio",
                "must be [low, high] with low < high",
            ));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(config_error("sweep.values", "must not be empty"));
            }
            if sweep.workers == Some(0) {
                return Err(config_error("sweep.workers", "must be at least 1"));
            }
        }
        Ok(())
    }

    /// The discrete bath used by the time-local kernels.
    pub fn bath_spec(&self) -> Result<BathSpec, CliError> {
        match (&self.bath.modes, &self.bath.ohmic) {
            (Some(modes), _) => Ok(BathSpec::new(modes.clone(), self.beta)?),
            (None, Some(p)) => Ok(discretize_ohmic(p, self.beta)?),
            (None, None) => Err(config_error("bath", "one of `modes` or `ohmic` is required")),
        }
    }

    /// Continuous spectral density for the Markov limit.
    pub fn spectral_density(&self) -> Result<Box<dyn SpectralDensity>, CliError> {
        if let Some(p) = self.bath.ohmic {
            return Ok(Box::new(p));
        }
        let width = self.markov.broadening.ok_or_else(|| {
            config_error(
                "markov.broadening",
                "required for the Markov limit of an explicit mode list",
            )
        })?;
        Ok(Box::new(BroadenedBath::new(self.bath_spec()?, width)?))
    }

    /// Exact model over the explicit modes.
    pub fn full_model(&self) -> Result<FullModel, CliError> {
        let modes = self
            .bath
            .modes
            .clone()
            .ok_or_else(|| config_error("bath.modes", "the exact oracle needs an explicit mode list"))?;
        if modes.len() > MAX_ORACLE_MODES {
            return Err(config_error(
                "bath.modes",
                format!("the exact oracle supports at most {MAX_ORACLE_MODES} modes"),
            ));
        }
        let oracle = self.oracle.clone().unwrap_or_default();
        let model = match &oracle.mode_dims {
            Some(dims) => FullModel::new(self.system_dim, dims.clone(), modes, self.omega0, self.beta, oracle.cap),
            None => FullModel::with_auto_dims(
                self.system_dim,
                modes,
                self.omega0,
                self.beta,
                oracle.tail,
                oracle.min_dim,
                oracle.cap,
            ),
        };
        Ok(model?)
    }

    /// Exact reference start matching the evolution mode.
    pub fn oracle_initial(&self) -> InitialCondition {
        match self.mode {
            EvolutionMode::NoCorrelations => InitialCondition::Factorized,
            _ => InitialCondition::Correlated,
        }
    }

    pub fn oracle_settings(&self) -> OracleConfig {
        self.oracle.clone().unwrap_or_default()
    }

    /// Copy with `parameter` set to `value`.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<Self, CliError> {
        let mut next = self.clone();
        next.sweep = None;
        match parameter {
            SweepParameter::CouplingScale => {
                if let Some(modes) = &mut next.bath.modes {
                    for m in modes.iter_mut() {
                        m.coupling *= value;
                    }
                }
                if let Some(p) = &mut next.bath.ohmic {
                    // V_k² ∝ η.
                    p.eta *= value * value;
                }
            }
            SweepParameter::Beta => next.beta = value,
            SweepParameter::Omega0 => next.omega0 = value,
            SweepParameter::DriveAmplitude => next.drive.amplitude = value,
            SweepParameter::Dt => next.dt = value,
        }
        next.validate()?;
        Ok(next)
    }
}
