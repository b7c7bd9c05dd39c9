//! `corrgme`: scenario runner for the correlated-initial-state master
//! equation of a driven, damped oscillator.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use corrgme::generator::EvolutionMode;

use crate::commands::RunContext;
use crate::config::ScenarioConfig;
use crate::error::CliError;

/// Built-in scenario used when `--config` is absent.
const DESK_SCENARIO: &str = include_str!("../scenarios/desk.toml");

#[derive(Debug, Parser)]
#[command(
    name = "corrgme",
    version,
    about = "Correlated-initial-state master equation for a driven damped oscillator"
)]
struct Cli {
    /// Scenario file (TOML). The built-in desk-scale scenario is used when absent.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output].dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Overrides `mode`.
    #[arg(long, global = true, value_enum)]
    mode: Option<ModeArg>,

    /// Seed for the random probes of `verify`; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Only report errors.
    #[arg(long, global = true)]
    quiet: bool,

    /// Report wall-clock runtime on stderr and in the JSON summary.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Lindblad,
    NzOnly,
    NoCorrelations,
}

impl From<ModeArg> for EvolutionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => EvolutionMode::Full,
            ModeArg::Lindblad => EvolutionMode::Lindblad,
            ModeArg::NzOnly => EvolutionMode::NzOnly,
            ModeArg::NoCorrelations => EvolutionMode::NoCorrelations,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate the time-dependent kernel coefficients (rates.csv).
    Rates,
    /// Integrate the master equation (trajectory.csv, summary.json).
    Evolve,
    /// Compare the master equation against exact dynamics of the full model.
    OracleCompare,
    /// Markov-limit rates and frequency shift (markov.json).
    Markov,
    /// Run the verification suite (verify.json); exit 4 on any failed check.
    Verify {
        /// Negative control: flip the sign of the asymptotic correlation kernel.
        #[arg(long, hide = true)]
        corrupt_cancellation_sign: bool,
    },
    /// Run `evolve` for every value in `[sweep]`, in parallel.
    Sweep,
    /// Validate the scenario and print it with all defaults filled in.
    CheckConfig,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::from_toml(DESK_SCENARIO)?,
    };
    if let Some(mode) = cli.mode {
        cfg.mode = mode.into();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    let out = cfg.output.dir.clone();
    let mut ctx = RunContext {
        timing: cli.timing,
        ..RunContext::default()
    };
    match &cli.command {
        Command::Rates => commands::rates(&cfg, &out, &ctx),
        Command::Evolve => commands::evolve(&cfg, &out, &ctx).map(drop),
        Command::OracleCompare => commands::oracle_compare(&cfg, &out, &ctx).map(drop),
        Command::Markov => commands::markov_command(&cfg, &out, &ctx).map(drop),
        Command::Verify {
            corrupt_cancellation_sign,
        } => {
            ctx.corrupt_cancellation_sign = *corrupt_cancellation_sign;
            commands::verify(&cfg, &out, &ctx).map(drop)
        }
        Command::Sweep => commands::sweep(&cfg, &out, &ctx).map(drop),
        Command::CheckConfig => {
            print!("{}", cfg.to_toml()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
