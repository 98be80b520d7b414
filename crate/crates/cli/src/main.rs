//! `harvest` -- closed-form solutions, Monte Carlo simulation, candidate
//! verification, and yield bounds for density-dependent harvesting models,
//! driven by a JSON problem configuration.
//!
//! Exit codes: 0 success, 1 configuration error, 2 unsupported request,
//! 3 numeric failure.

mod commands;
mod config;
mod output;
mod policies;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "harvest",
    version,
    about = "Optimal harvesting of diffusions with density-dependent prices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form solution: regimes, thresholds, pasting constants, value.
    Solve(SolveArgs),
    /// Monte Carlo evaluation of harvesting policies (CSV).
    Simulate(SimulateArgs),
    /// Grid verification of the solved candidate value function.
    Verify(VerifyArgs),
    /// Lower/upper bounds on the attainable yield.
    Bounds(BoundsArgs),
    /// Re-solve across a parameter range (CSV).
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Problem configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the metadata block (timestamps), for byte-stable outputs.
    #[arg(long)]
    no_meta: bool,
    /// Override the simulation seed from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Output format (solve is JSON-only).
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Policies to evaluate; repeatable and/or comma-separated
    /// (e.g. `--policy take_all,chatter:m=10000:eta=0,barrier`).
    #[arg(long, required = true)]
    policy: Vec<String>,
    /// Output format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Override the extinction convention (`both` emits one row per mode).
    #[arg(long, value_enum)]
    extinction: Option<ExtinctionArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExtinctionArg {
    Auto,
    Joint,
    PerComponent,
    Both,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which candidate to verify: the solved value or the chattering form.
    #[arg(long, value_enum, default_value = "solved")]
    candidate: CandidateArg,
    /// Multiply solved thresholds by this factor before verification
    /// (diagnostic; a perturbed threshold must fail the curvature pasting).
    #[arg(long)]
    perturb_x_star: Option<f64>,
    /// Also write the per-grid-point evaluation as CSV to this path.
    #[arg(long)]
    grid_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CandidateArg {
    Solved,
    Chatter,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Refine the upper bound with a Monte Carlo extinction estimate.
    #[arg(long)]
    with_mc: bool,
    /// Policy used for the extinction estimate (defaults to the solved
    /// optimal policy shape).
    #[arg(long)]
    mc_policy: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to sweep.
    #[arg(long, value_enum)]
    param: SweepParam,
    /// Range `lo:hi:n` (n points, endpoints included).
    #[arg(long)]
    range: String,
    /// Component the parameter applies to (ignored for rho).
    #[arg(long, default_value_t = 0)]
    component: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Mu,
    Sigma,
    Rho,
    Theta,
    CarryingCapacity,
}

/// Error carrying the process exit code.
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn new(code: u8, message: String) -> Self {
        CliError { code, message }
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new(1, message.into())
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        CliError::new(2, message.into())
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError::new(3, message.into())
    }

    /// Library errors raised while *building* a model from config values
    /// are configuration mistakes.
    pub fn from_config_value(e: harvest::Error) -> Self {
        CliError::new(1, e.to_string())
    }
}

impl From<harvest::Error> for CliError {
    fn from(e: harvest::Error) -> Self {
        use harvest::Error::*;
        let code = match &e {
            InvalidParameter { .. } | Domain(_) => 1,
            NoAnalyticSolution(_) | Range(_) | Regime(_) => 2,
            Numeric(_) | Estimation(_) | BoundUnavailable(_) => 3,
        };
        CliError::new(code, e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => commands::solve::run(args),
        Command::Simulate(args) => commands::simulate::run(args),
        Command::Verify(args) => commands::verify::run(args),
        Command::Bounds(args) => commands::bounds::run(args),
        Command::Sweep(args) => commands::sweep::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
