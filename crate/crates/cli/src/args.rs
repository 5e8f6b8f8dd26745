use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipdyn::lipschitz::{DEFAULT_MARGIN, DEFAULT_RADIUS};
use lipdyn::lyapunov::SkipMode;
use lipdyn::orbit::{DEFAULT_FP_TOL, DEFAULT_MAX_PERIOD, DEFAULT_PERIOD_TOL};

#[derive(Debug, Parser)]
#[command(
    name = "lipdyn",
    version,
    about = "Stability and Lyapunov analysis of Lipschitz maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the orbit x_{B+1}, ..., x_{B+N} of x0.
    Orbit(OrbitArgs),
    /// Classify fixed points or periodic orbits as sink, source or inconclusive.
    Classify(ClassifyArgs),
    /// Lyapunov exponent, periodicity and chaos report for one orbit.
    Analyze(AnalyzeArgs),
    /// Run `analyze` across a parameter range of a builtin family.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SkipArg {
    Skip,
    Perturb,
    Fail,
}

impl From<SkipArg> for SkipMode {
    fn from(a: SkipArg) -> Self {
        match a {
            SkipArg::Skip => SkipMode::Skip,
            SkipArg::Perturb => SkipMode::Perturb,
            SkipArg::Fail => SkipMode::Fail,
        }
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// `builtin:name:key=value,...` or a path to a `.map` file.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long, default_value_t = 0.3, allow_hyphen_values = true)]
    pub x0: f64,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PERIOD_TOL)]
    pub period_tol: f64,
    #[arg(long, default_value_t = DEFAULT_FP_TOL)]
    pub fp_tol: f64,
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    pub margin: f64,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    pub radius: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PERIOD)]
    pub max_period: usize,
    #[arg(long, value_enum, default_value_t = SkipArg::Skip)]
    pub skip_mode: SkipArg,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["point", "auto"])))]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Candidate fixed point (or cycle seed with --period). Repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub point: Vec<f64>,
    /// Locate fixed points on --interval and classify each.
    #[arg(long, requires = "interval")]
    pub auto: bool,
    /// `lo,hi` search interval for --auto.
    #[arg(long, allow_hyphen_values = true)]
    pub interval: Option<String>,
    /// Refine each point to a cycle of this period first.
    #[arg(long, conflicts_with = "auto")]
    pub period: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Builtin family, optionally with fixed parameters (`tent_ab:b=1`).
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub param: String,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long)]
    pub steps: usize,
}
