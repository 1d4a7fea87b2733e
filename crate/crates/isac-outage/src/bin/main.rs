//! Command-line harness for the outage studies.
//!
//! Subcommands mirror the experiment library: `user-op`, `target-op`,
//! `tradeoff`, `hist`, and `validate`. Every run resolves its parameters as
//! defaults < config file < command-line flags, and emits a CSV table whose
//! metadata header records the full resolved configuration.
//!
//! Exit codes: 0 on success, 1 on a failed check or computation, 2 on bad
//! input.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

use isac_outage::experiment::{
    apply_config_text, run_histogram, run_target_op_sweep, run_tradeoff, run_user_op_sweep,
    run_validate, CsvRow, Report,
};
use isac_outage::{ExperimentSpec, IsacError, Sweep, SystemConfig};

#[derive(Parser)]
#[command(
    name = "isac-outage",
    version,
    about = "Communication/sensing outage trade-off studies for a downlink MIMO link"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the user outage probability over a SINR-threshold grid.
    UserOp(SweepArgs),
    /// Sweep the target outage probability over a CRB-threshold grid.
    TargetOp(SweepArgs),
    /// Trace the outage trade-off over a beam-magnitude grid.
    Tradeoff(TradeoffArgs),
    /// Joint histogram of the summed pair (X, Y) with its Gaussian overlay.
    Hist(HistArgs),
    /// Run the built-in consistency checks and report pass/fail per check.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for all Monte Carlo substreams.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Gauss-Legendre nodes per half-interval of the azimuth integral.
    #[arg(long)]
    theta_nodes: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grid of sweep values.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct TradeoffArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which beam magnitude the grid applies to.
    #[arg(long, value_enum, default_value_t = SweptMagnitude::B1)]
    sweep: SweptMagnitude,
    /// Comma-separated grid of magnitudes.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Fixed SINR threshold.
    #[arg(long)]
    gamma: Option<f64>,
    /// Fixed CRB threshold.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct HistArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bins per axis.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum SweptMagnitude {
    B1,
    B2,
}

fn default_gamma_grid() -> Vec<f64> {
    (1..=16).map(f64::from).collect()
}

fn default_epsilon_grid() -> Vec<f64> {
    // 12 points, log-spaced across six decades around 8e-7.
    (0..12)
        .map(|k| 8e-10 * 10f64.powf(6.0 * k as f64 / 11.0))
        .collect()
}

fn default_magnitude_grid() -> Vec<f64> {
    (0..10).map(|k| 0.05 + 0.1 * k as f64).collect()
}

fn build_spec(common: &CommonArgs) -> Result<ExperimentSpec, IsacError> {
    let mut spec = ExperimentSpec::new(SystemConfig::baseline());
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path).map_err(|e| IsacError::InvalidConfig {
            field: "config",
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        apply_config_text(&mut spec, &text)?;
    }
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    if let Some(trials) = common.trials {
        spec.trials = trials;
    }
    if let Some(nodes) = common.theta_nodes {
        spec.theta_nodes = nodes;
    }
    Ok(spec)
}

fn emit<R: CsvRow>(report: &Report<R>, out: Option<&PathBuf>) -> Result<(), IsacError> {
    let csv = report.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| IsacError::InvalidConfig {
            field: "out",
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool, IsacError> {
    match cli.command {
        Command::UserOp(args) => {
            let mut spec = build_spec(&args.common)?;
            spec.sweep = Sweep::GammaGrid;
            spec.grid = args.grid.unwrap_or_else(default_gamma_grid);
            let report = run_user_op_sweep(&spec)?;
            emit(&report, args.common.out.as_ref())?;
            Ok(true)
        }
        Command::TargetOp(args) => {
            let mut spec = build_spec(&args.common)?;
            spec.sweep = Sweep::EpsilonGrid;
            spec.grid = args.grid.unwrap_or_else(default_epsilon_grid);
            let report = run_target_op_sweep(&spec)?;
            emit(&report, args.common.out.as_ref())?;
            Ok(true)
        }
        Command::Tradeoff(args) => {
            let mut spec = build_spec(&args.common)?;
            spec.sweep = match args.sweep {
                SweptMagnitude::B1 => Sweep::B1Grid,
                SweptMagnitude::B2 => Sweep::B2Grid,
            };
            spec.grid = args.grid.unwrap_or_else(default_magnitude_grid);
            if let Some(gamma) = args.gamma {
                spec.gamma = gamma;
            }
            if let Some(epsilon) = args.epsilon {
                spec.epsilon = epsilon;
            }
            let report = run_tradeoff(&spec)?;
            emit(&report, args.common.out.as_ref())?;
            Ok(true)
        }
        Command::Hist(args) => {
            let mut spec = build_spec(&args.common)?;
            if let Some(bins) = args.bins {
                spec.bins = bins;
            }
            let report = run_histogram(&spec)?;
            emit(&report, args.common.out.as_ref())?;
            Ok(true)
        }
        Command::Validate(args) => {
            let spec = build_spec(&args)?;
            let (report, all_passed) = run_validate(&spec)?;
            emit(&report, args.out.as_ref())?;
            Ok(all_passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err @ IsacError::InvalidConfig { .. }) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
