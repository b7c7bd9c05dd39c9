use std::path::{Path, PathBuf};
use std::time::Instant;

use corrgme::bath::{bose_occupation, BathMode, BathSpec};
use corrgme::generator::EvolutionMode;
use corrgme::kernels::{
    cancellation_residual, kernel_coefficients, ki_asymptotic_with_sign, lsi_coefficients, markov_limits,
    KernelCoefficients, MarkovLimits,
};
use corrgme::operator::{annihilation_op, creation_op, matrix_exp, DensityMatrix, Tolerances};
use corrgme::oracle::{
    gibbs_expansion_check, projector_algebra_check, ExactEvolution, GibbsExpansionReport, ProjectorReport,
};
use corrgme::propagator::{
    equilibrium_state, lindblad_propagate, propagate, GateReport, Observables, PropagationOptions, Trajectory,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ScenarioConfig, SweepParameter};
use crate::error::CliError;
use crate::output::{write_json, CsvTable, SCHEMA_VERSION};

/// Per-invocation settings that are not part of the scenario.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub timing: bool,
    /// Negative control for `verify`: flips the sign of the asymptotic
    /// correlation kernel.
    pub corrupt_cancellation_sign: bool,
}

/// Number of random single-mode draws in the cancellation check.
pub const CANCELLATION_DRAWS: usize = 100;

pub const RATES_COLUMNS: [&str; 12] = [
    "t",
    "gamma0_re",
    "gamma0_im",
    "gamma0_prime_re",
    "gamma0_prime_im",
    "ki_plus_re",
    "ki_plus_im",
    "ki_minus_re",
    "ki_minus_im",
    "lsi_plus",
    "lsi_minus",
    "cancellation_residual",
];

pub const TRAJECTORY_COLUMNS: [&str; 8] = [
    "t",
    "occupation",
    "amplitude_re",
    "amplitude_im",
    "trace_error",
    "hermiticity_defect",
    "min_eigenvalue",
    "cancellation_residual",
];

pub const ORACLE_COLUMNS: [&str; 4] = ["t", "trace_distance", "occupation_master", "occupation_exact"];

fn options(cfg: &ScenarioConfig) -> PropagationOptions {
    let mut opts = PropagationOptions::new(cfg.t_max, cfg.dt).with_sample_every(cfg.sample_every);
    opts.tail_threshold = cfg.tolerances.tail;
    opts.stability_limit = cfg.tolerances.stability;
    opts
}

/// Times written by `rates`; the same grid the propagators sample.
pub fn sample_times(cfg: &ScenarioConfig) -> Result<Vec<f64>, CliError> {
    let steps = options(cfg).step_count()?;
    let mut times: Vec<f64> = (0..=steps)
        .filter(|j| j % cfg.sample_every == 0 || *j == steps)
        .map(|j| j as f64 * cfg.dt)
        .collect();
    times.dedup();
    Ok(times)
}

fn elapsed(ctx: &RunContext, start: Instant) -> Option<f64> {
    ctx.timing.then(|| start.elapsed().as_secs_f64())
}

fn report_runtime(ctx: &RunContext, command: &str, runtime: Option<f64>) {
    if let (true, Some(seconds)) = (ctx.timing, runtime) {
        eprintln!("{command}: {seconds:.3} s");
    }
}

pub fn rates(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<(), CliError> {
    let start = Instant::now();
    let bath = cfg.bath_spec()?;
    let times = sample_times(cfg)?;
    let rows = times
        .par_iter()
        .map(|&t| {
            Ok((
                kernel_coefficients(&bath, cfg.omega0, t)?,
                cancellation_residual(&bath, cfg.omega0, t)?,
            ))
        })
        .collect::<Result<Vec<(KernelCoefficients, f64)>, corrgme::Error>>()?;
    let mut table = CsvTable::new("rates", &RATES_COLUMNS);
    for (c, residual) in &rows {
        table.row(&[
            c.t,
            c.gamma0.re,
            c.gamma0.im,
            c.gamma0_prime.re,
            c.gamma0_prime.im,
            c.ki_plus.re,
            c.ki_plus.im,
            c.ki_minus.re,
            c.ki_minus.im,
            c.lsi_plus,
            c.lsi_minus,
            *residual,
        ]);
    }
    table.write(&out.join("rates.csv"))?;
    report_runtime(ctx, "rates", elapsed(ctx, start));
    Ok(())
}

/// `D(α) ρ_th(β') D(α)†` for the `[initial]` table, else the reduced Gibbs
/// state.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<DensityMatrix, CliError> {
    let Some(initial) = &cfg.initial else {
        return Ok(equilibrium_state(cfg.system_dim, cfg.omega0, cfg.beta)?);
    };
    let thermal = equilibrium_state(cfg.system_dim, cfg.omega0, initial.beta.unwrap_or(cfg.beta))?;
    let alpha = Complex64::new(initial.displacement[0], initial.displacement[1]);
    let a = annihilation_op(cfg.system_dim)?;
    let ad = creation_op(cfg.system_dim)?;
    let d = matrix_exp(&(&ad.scale(alpha) - &a.scale(alpha.conj())), 1e-15)?;
    let rho = d.matmul(thermal.op())?.matmul(&d.dagger())?;
    Ok(DensityMatrix::new(rho, Tolerances::default())?)
}

fn markov(cfg: &ScenarioConfig, pv_window: f64) -> Result<MarkovLimits, CliError> {
    let density = cfg.spectral_density()?;
    Ok(markov_limits(density.as_ref(), cfg.beta, cfg.omega0, pv_window)?)
}

/// Runs the master equation selected by `cfg.mode`.
pub fn run_master(cfg: &ScenarioConfig) -> Result<(Trajectory, Option<MarkovLimits>), CliError> {
    let initial = initial_state(cfg)?;
    let opts = options(cfg);
    if cfg.mode == EvolutionMode::Lindblad {
        let limits = markov(cfg, cfg.markov.pv_window)?;
        let traj = lindblad_propagate(&initial, &limits, &cfg.drive, &opts)?;
        return Ok((traj, Some(limits)));
    }
    let bath = cfg.bath_spec()?;
    let traj = propagate(&initial, &bath, cfg.omega0, &cfg.drive, cfg.mode, &opts)?;
    Ok((traj, None))
}

#[derive(Debug, Clone, Serialize)]
pub struct GateFailure {
    pub gate: &'static str,
    pub value: f64,
    pub limit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggested_dt: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveSummary {
    pub schema: u32,
    pub status: &'static str,
    pub mode: EvolutionMode,
    pub system_dim: usize,
    pub t_max: f64,
    pub dt: f64,
    /// Bose occupation at ω₀ and β.
    pub equilibrium_occupation: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_observables: Option<Observables>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gates: Option<GateReport>,
    pub gate_failures: Vec<GateFailure>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub markov: Option<MarkovLimits>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

fn gate_failures(cfg: &ScenarioConfig, gates: &GateReport) -> Vec<GateFailure> {
    let mut failures = Vec::new();
    if gates.tail_exceeded {
        failures.push(GateFailure {
            gate: "tail",
            value: gates.max_top_level_population,
            limit: cfg.tolerances.tail,
            suggested_dt: None,
        });
    }
    if gates.max_trace_error > cfg.tolerances.trace {
        failures.push(GateFailure {
            gate: "trace",
            value: gates.max_trace_error,
            limit: cfg.tolerances.trace,
            suggested_dt: None,
        });
    }
    failures
}

fn trajectory_table(traj: &Trajectory) -> CsvTable {
    let mut table = CsvTable::new("trajectory", &TRAJECTORY_COLUMNS);
    for o in &traj.observables {
        table.row(&[
            o.t,
            o.occupation,
            o.amplitude.re,
            o.amplitude.im,
            o.trace_error,
            o.hermiticity_defect,
            o.min_eigenvalue,
            o.cancellation_residual.unwrap_or(f64::NAN),
        ]);
    }
    table
}

pub fn evolve(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<EvolveSummary, CliError> {
    let start = Instant::now();
    let mut summary = EvolveSummary {
        schema: SCHEMA_VERSION,
        status: "ok",
        mode: cfg.mode,
        system_dim: cfg.system_dim,
        t_max: cfg.t_max,
        dt: cfg.dt,
        equilibrium_occupation: bose_occupation(cfg.omega0, cfg.beta)?,
        final_observables: None,
        gates: None,
        gate_failures: Vec::new(),
        warnings: Vec::new(),
        markov: None,
        runtime_seconds: None,
    };
    let summary_path = out.join("summary.json");
    let (traj, limits) = match run_master(cfg) {
        Ok(result) => result,
        Err(CliError::Core(corrgme::Error::StabilityGate {
            dt,
            product,
            limit,
            suggested_dt,
        })) => {
            summary.status = "gate-violation";
            summary.gate_failures.push(GateFailure {
                gate: "stability",
                value: product,
                limit,
                suggested_dt: Some(suggested_dt),
            });
            write_json(&summary_path, &summary)?;
            return Err(CliError::Gate(format!(
                "stability: dt*|G| = {product:.3e} >= {limit} at dt = {dt}; try dt <= {suggested_dt:.3e}"
            )));
        }
        Err(e) => return Err(e),
    };
    for w in &traj.warnings {
        log::warn!("{w}");
    }
    trajectory_table(&traj).write(&out.join("trajectory.csv"))?;
    summary.gate_failures = gate_failures(cfg, &traj.gates);
    if !summary.gate_failures.is_empty() {
        summary.status = "gate-violation";
    }
    summary.final_observables = Some(*traj.final_observables());
    summary.gates = Some(traj.gates.clone());
    summary.warnings = traj.warnings.clone();
    summary.markov = limits;
    summary.runtime_seconds = elapsed(ctx, start);
    write_json(&summary_path, &summary)?;
    report_runtime(ctx, "evolve", summary.runtime_seconds);
    if let Some(f) = summary.gate_failures.first() {
        return Err(CliError::Gate(format!(
            "{}: {:.3e} exceeds {:.1e}",
            f.gate, f.value, f.limit
        )));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRun {
    pub mode_dims: Vec<usize>,
    pub total_dim: usize,
    pub max_trace_distance: f64,
    pub at_time: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HalvedCoupling {
    pub max_trace_distance: f64,
    /// Full-coupling distance over half-coupling distance.
    pub ratio: f64,
    pub required: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub schema: u32,
    pub mode: EvolutionMode,
    pub run: OracleRun,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halved_coupling: Option<HalvedCoupling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

fn oracle_run(cfg: &ScenarioConfig, table: Option<&mut CsvTable>) -> Result<OracleRun, CliError> {
    if cfg.initial.is_some() {
        return Err(CliError::Config(
            "initial: the exact reference always starts from the Gibbs state; remove [initial]".into(),
        ));
    }
    let model = cfg.full_model()?;
    let (master, _) = run_master(cfg)?;
    let exact = ExactEvolution::new(&model, &cfg.drive, cfg.oracle_initial())?.reduced_dynamics(&options(cfg))?;
    let mut worst = (0.0, 0.0);
    let mut rows = Vec::with_capacity(master.states.len());
    for ((t, m), (e, (om, oe))) in master.times.iter().zip(&master.states).zip(
        exact
            .states
            .iter()
            .zip(master.observables.iter().zip(&exact.observables)),
    ) {
        let d = m.trace_distance(e)?;
        if d > worst.0 {
            worst = (d, *t);
        }
        rows.push([*t, d, om.occupation, oe.occupation]);
    }
    if let Some(table) = table {
        for row in &rows {
            table.row(row);
        }
    }
    Ok(OracleRun {
        mode_dims: model.mode_dims().to_vec(),
        total_dim: model.total_dim(),
        max_trace_distance: worst.0,
        at_time: worst.1,
    })
}

fn oracle_report(cfg: &ScenarioConfig, table: Option<&mut CsvTable>) -> Result<OracleReport, CliError> {
    let run = oracle_run(cfg, table)?;
    let halved_coupling = if cfg.oracle_settings().halve_coupling {
        let half = oracle_run(&cfg.with_parameter(SweepParameter::CouplingScale, 0.5)?, None)?;
        let ratio = run.max_trace_distance / half.max_trace_distance;
        Some(HalvedCoupling {
            max_trace_distance: half.max_trace_distance,
            ratio,
            required: cfg.tolerances.coupling_scaling,
            pass: ratio >= cfg.tolerances.coupling_scaling,
        })
    } else {
        None
    };
    let pass =
        run.max_trace_distance < cfg.tolerances.oracle_distance && halved_coupling.as_ref().is_none_or(|h| h.pass);
    Ok(OracleReport {
        schema: SCHEMA_VERSION,
        mode: cfg.mode,
        run,
        tolerance: cfg.tolerances.oracle_distance,
        pass,
        halved_coupling,
        runtime_seconds: None,
    })
}

pub fn oracle_compare(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<OracleReport, CliError> {
    let start = Instant::now();
    let mut table = CsvTable::new("oracle-compare", &ORACLE_COLUMNS);
    let mut report = oracle_report(cfg, Some(&mut table))?;
    report.runtime_seconds = elapsed(ctx, start);
    table.write(&out.join("oracle_compare.csv"))?;
    write_json(&out.join("oracle_compare.json"), &report)?;
    report_runtime(ctx, "oracle-compare", report.runtime_seconds);
    if !report.pass {
        return Err(CliError::Verification(format!(
            "max trace distance {:.3e} (tolerance {:.1e}){}",
            report.run.max_trace_distance,
            report.tolerance,
            report
                .halved_coupling
                .as_ref()
                .map(|h| format!(", coupling-halving ratio {:.3} (required {})", h.ratio, h.required))
                .unwrap_or_default()
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MarkovReport {
    pub schema: u32,
    pub limits: MarkovLimits,
    /// Frequency shift recomputed with half the principal-value window.
    pub delta_omega0_half_window: f64,
    pub delta_omega0_relative_change: f64,
    /// `Re γ₀(t_max)` of the discrete bath.
    pub gamma0_re_at_t_max: f64,
    /// Relative deviation of `Re γ₀(t_max)` from `rate_down / 2`.
    pub gamma0_relative_error: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

pub fn markov_command(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<MarkovReport, CliError> {
    let start = Instant::now();
    let limits = markov(cfg, cfg.markov.pv_window)?;
    let half = markov(cfg, 0.5 * cfg.markov.pv_window)?;
    let gamma0 = kernel_coefficients(&cfg.bath_spec()?, cfg.omega0, cfg.t_max)?.gamma0.re;
    let target = 0.5 * limits.rate_down;
    let mut report = MarkovReport {
        schema: SCHEMA_VERSION,
        limits,
        delta_omega0_half_window: half.delta_omega0,
        delta_omega0_relative_change: ((half.delta_omega0 - limits.delta_omega0) / limits.delta_omega0).abs(),
        gamma0_re_at_t_max: gamma0,
        gamma0_relative_error: (gamma0 - target) / target,
        runtime_seconds: None,
    };
    report.runtime_seconds = elapsed(ctx, start);
    write_json(&out.join("markov.json"), &report)?;
    report_runtime(ctx, "markov", report.runtime_seconds);
    Ok(report)
}

/// One line of the verification report. `value` is the measured residual;
/// a check passes when it lies within `[lower, upper]`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn below(name: &'static str, value: f64, upper: f64) -> Self {
        Self {
            name,
            value,
            lower: None,
            upper: Some(upper),
            pass: value < upper,
        }
    }

    fn within(name: &'static str, value: f64, lower: f64, upper: f64) -> Self {
        Self {
            name,
            value,
            lower: Some(lower),
            upper: Some(upper),
            pass: (lower..=upper).contains(&value),
        }
    }

    fn above(name: &'static str, value: f64, lower: f64) -> Self {
        Self {
            name,
            value,
            lower: Some(lower),
            upper: None,
            pass: value >= lower,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CancellationReport {
    pub modes_checked: usize,
    pub random_draws: usize,
    pub seed: u64,
    pub worst_plus: f64,
    pub worst_minus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub projector: ProjectorReport,
    pub gibbs_expansion: GibbsExpansionReport,
    pub cancellation: CancellationReport,
    pub oracle: OracleReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
}

/// Worst per-mode `|lsi_± + ki_±(∞)|` over the configured modes and
/// `draws` random single-mode baths.
pub fn cancellation_check(
    modes: &[BathMode],
    omega0: f64,
    beta: f64,
    draws: usize,
    seed: u64,
    sign: f64,
) -> Result<CancellationReport, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<(BathMode, f64, f64)> = modes.iter().map(|m| (*m, omega0, beta)).collect();
    for _ in 0..draws {
        let mode = BathMode {
            omega: rng.random_range(0.05..4.0),
            coupling: rng.random_range(0.0..0.5),
        };
        cases.push((mode, rng.random_range(0.2..3.0), rng.random_range(0.1..5.0)));
    }
    let (mut worst_plus, mut worst_minus) = (0.0f64, 0.0f64);
    for (mode, omega0, beta) in cases {
        let bath = BathSpec::new(vec![mode], beta)?;
        let (lsi_plus, lsi_minus) = lsi_coefficients(&bath, omega0)?;
        let (ki_plus, ki_minus) = ki_asymptotic_with_sign(&bath, omega0, sign)?;
        worst_plus = worst_plus.max((lsi_plus + ki_plus).abs());
        worst_minus = worst_minus.max((lsi_minus + ki_minus).abs());
    }
    Ok(CancellationReport {
        modes_checked: modes.len(),
        random_draws: draws,
        seed,
        worst_plus,
        worst_minus,
    })
}

pub fn verify(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<VerifyReport, CliError> {
    let start = Instant::now();
    let model = cfg.full_model()?;
    let settings = cfg.oracle_settings();
    let tol = &cfg.tolerances;

    let projector = projector_algebra_check(&model, settings.probes, cfg.seed)?;
    let gibbs = gibbs_expansion_check(&model)?;
    let sign = if ctx.corrupt_cancellation_sign { -1.0 } else { 1.0 };
    if ctx.corrupt_cancellation_sign {
        log::warn!("negative control: asymptotic correlation kernel sign flipped");
    }
    let cancellation = cancellation_check(model.modes(), cfg.omega0, cfg.beta, CANCELLATION_DRAWS, cfg.seed, sign)?;
    let oracle = oracle_report(cfg, None)?;

    let mut checks = vec![
        Check::below("projector_invariance", projector.invariance, tol.projector),
        Check::below("projector_idempotency", projector.idempotency, tol.projector),
        Check::below("projector_trace_b_q", projector.trace_b_q, tol.projector),
        Check::below("projector_worst", projector.worst(), tol.projector),
        Check::within(
            "gibbs_remainder_ratio",
            gibbs.ratio,
            tol.gibbs_ratio[0],
            tol.gibbs_ratio[1],
        ),
        Check::below(
            "gibbs_first_order_bath_trace",
            gibbs.first_order_bath_trace,
            tol.projector,
        ),
        Check::below("cancellation_plus", cancellation.worst_plus, tol.cancellation),
        Check::below("cancellation_minus", cancellation.worst_minus, tol.cancellation),
        Check::below(
            "oracle_trace_distance",
            oracle.run.max_trace_distance,
            tol.oracle_distance,
        ),
    ];
    if let Some(h) = &oracle.halved_coupling {
        checks.push(Check::above("oracle_coupling_scaling", h.ratio, h.required));
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        schema: SCHEMA_VERSION,
        pass,
        checks,
        projector,
        gibbs_expansion: gibbs,
        cancellation,
        oracle,
        runtime_seconds: elapsed(ctx, start),
    };
    write_json(&out.join("verify.json"), &report)?;
    report_runtime(ctx, "verify", report.runtime_seconds);
    if !pass {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("{} = {:.3e}", c.name, c.value))
            .collect();
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub index: usize,
    pub value: f64,
    pub dir: PathBuf,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_occupation: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema: u32,
    pub parameter: SweepParameter,
    pub entries: Vec<SweepEntry>,
}

/// Runs `evolve` once per sweep value, in parallel, each into its own
/// subdirectory of `out`.
pub fn sweep(cfg: &ScenarioConfig, out: &Path, ctx: &RunContext) -> Result<SweepReport, CliError> {
    let spec = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Config("sweep: the [sweep] table is required".into()))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(workers) = spec.workers {
        builder = builder.num_threads(workers);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let param_name = serde_json::to_value(spec.parameter)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let entries: Vec<SweepEntry> = pool.install(|| {
        spec.values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let relative = PathBuf::from(format!("run_{index:03}_{param_name}"));
                let dir = out.join(&relative);
                let result = cfg.with_parameter(spec.parameter, value).and_then(|c| {
                    evolve(
                        &c,
                        &dir,
                        &RunContext {
                            timing: false,
                            ..ctx.clone()
                        },
                    )
                });
                let (exit_code, error, final_occupation) = match result {
                    Ok(summary) => (0, None, summary.final_observables.map(|o| o.occupation)),
                    Err(e) => (e.exit_code(), Some(e.to_string()), None),
                };
                SweepEntry {
                    index,
                    value,
                    dir: relative,
                    exit_code,
                    error,
                    final_occupation,
                }
            })
            .collect()
    });
    let report = SweepReport {
        schema: SCHEMA_VERSION,
        parameter: spec.parameter,
        entries,
    };
    write_json(&out.join("sweep.json"), &report)?;
    let worst = report.entries.iter().max_by_key(|e| e.exit_code);
    match worst {
        Some(e) if e.exit_code != 0 => {
            let message = format!(
                "run {} ({} = {}): {}",
                e.index,
                param_name,
                e.value,
                e.error.clone().unwrap_or_default()
            );
            Err(match e.exit_code {
                2 => CliError::Config(message),
                3 => CliError::Gate(message),
                4 => CliError::Verification(message),
                _ => CliError::Runtime(message),
            })
        }
        _ => Ok(report),
    }
}
