//! `fellerstar`: simulate Feller Brownian motions on a star graph and check
//! them against the analytic resolvent.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 invalid configuration
//! or parameters, 3 a Monte Carlo estimate more than 4 standard errors from
//! its analytic reference.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "fellerstar", version, about = "Feller Brownian motions on star graphs")]
pub struct Cli {
    /// Worker threads for path-parallel runs (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check boundary parameters and report whether they can be simulated.
    Validate(Source),
    /// Sample trajectories and write them as CSV.
    Simulate(SimulateArgs),
    /// Analytic resolvent R_lambda g(x), with an optional Monte Carlo estimate.
    Resolvent(ResolventArgs),
    /// Analytic lambda-potential of the local time, with optional Monte Carlo.
    Potential(PotentialArgs),
    /// Walsh transition density on one edge, with an optional histogram.
    Density(DensityArgs),
    /// Exit statistics of sticky reflected Brownian motion from [0, eps).
    Exitstats(ExitArgs),
    /// Resolvent or potential along a ladder of jump truncation levels.
    Converge(ConvergeArgs),
}

/// Where the boundary parameters come from.
#[derive(Args, Debug, Clone)]
pub struct Source {
    /// JSON run config (schema 1).
    #[arg(long, conflicts_with = "beta")]
    pub config: Option<PathBuf>,
    /// Walsh weights, comma separated, instead of a config.
    #[arg(long, value_delimiter = ',')]
    pub beta: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed; FELLERSTAR_SEED overrides the config, this flag overrides both.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Steps {
    /// Smallest Brownian step.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Largest Brownian step.
    #[arg(long)]
    pub dt_max: Option<f64>,
    /// Truncation level for infinite jump measures.
    #[arg(long)]
    pub eps: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    /// Time-changed subordinators.
    Full,
    /// Piecing together runs between jumps (finite measures only).
    Concat,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub steps: Steps,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Output grid spacing.
    #[arg(long, default_value_t = 0.01)]
    pub out_dt: f64,
    /// Start: center, edge:I:X, inf:I (edges 0-based).
    #[arg(long, default_value = "center")]
    pub x0: String,
    #[arg(long, value_enum, default_value_t = Construction::Full)]
    pub construction: Construction,
}

#[derive(Args, Debug)]
pub struct McArgs {
    /// Add a Monte Carlo estimate.
    #[arg(long)]
    pub mc: bool,
    /// Paths for the estimate.
    #[arg(long)]
    pub paths: Option<usize>,
}

#[derive(Args, Debug)]
pub struct ResolventArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub steps: Steps,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Evaluation point: center, edge:I:X, inf:I.
    #[arg(long, default_value = "center")]
    pub x: String,
    /// one, zero, exp-decay, or a JSON object; the config's g otherwise.
    #[arg(long)]
    pub g: Option<String>,
}

#[derive(Args, Debug)]
pub struct PotentialArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub steps: Steps,
    #[command(flatten)]
    pub mc: McArgs,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "center")]
    pub x: String,
}

#[derive(Args, Debug)]
pub struct DensityArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value = "center")]
    pub from: String,
    /// Edge whose density is written (0-based).
    #[arg(long, default_value_t = 0)]
    pub edge: usize,
    #[arg(long, default_value_t = 5.0)]
    pub ymax: f64,
    #[arg(long, default_value_t = 100)]
    pub bins: usize,
    /// Paths for an empirical histogram; 0 for the formula only.
    #[arg(long, default_value_t = 0)]
    pub paths: usize,
}

#[derive(Args, Debug)]
pub struct ExitArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// Radius of the ball around the center.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub dt: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatisticKind {
    Resolvent,
    Potential,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RungChoice {
    None,
    Last,
    All,
}

#[derive(Args, Debug)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long, default_value = "center")]
    pub x: String,
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long, value_enum, default_value_t = StatisticKind::Resolvent)]
    pub statistic: StatisticKind,
    /// Decreasing truncation levels.
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub ladder: Vec<f64>,
    /// Which rungs get a Monte Carlo estimate.
    #[arg(long, value_enum, default_value_t = RungChoice::None)]
    pub mc: RungChoice,
    #[arg(long)]
    pub paths: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
