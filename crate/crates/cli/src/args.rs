use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vfusion::{EvidenceRoute, Preprocessing, DEFAULT_SEED};

#[derive(Debug, Parser)]
#[command(name = "vfusion", version, about = "Bayesian variable fusion for linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulation study for one case and report P_B, MSE and PSE.
    Simulate(SimulateArgs),
    /// Fit the fusion model to a table with a response column.
    Fit(FitArgs),
    /// Piecewise-constant smoothing of a single signal column (X = I).
    Smooth(SmoothArgs),
    /// Spike-and-slab variable selection baseline.
    Select(SelectArgs),
}

/// Slab scale: a positive number or `auto` (the sample size).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GScale {
    #[default]
    Auto,
    Value(f64),
}

impl GScale {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            GScale::Auto => n as f64,
            GScale::Value(g) => g,
        }
    }

    pub fn is_auto(self) -> bool {
        self == GScale::Auto
    }
}

impl FromStr for GScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GScale::Auto);
        }
        match s.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(GScale::Value(g)),
            _ => Err(format!("expected a positive number or \"auto\", got {s:?}")),
        }
    }
}

impl fmt::Display for GScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GScale::Auto => f.write_str("auto"),
            GScale::Value(g) => write!(f, "{g}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Dense,
    Reduced,
}

impl From<Route> for EvidenceRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::Dense => EvidenceRoute::Dense,
            Route::Reduced => EvidenceRoute::Reduced,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preprocess {
    Standardize,
    Center,
    None,
}

impl From<Preprocess> for Preprocessing {
    fn from(p: Preprocess) -> Self {
        match p {
            Preprocess::Standardize => Preprocessing::Standardized,
            Preprocess::Center => Preprocessing::Centered,
            Preprocess::None => Preprocessing::Raw,
        }
    }
}

/// Flags shared by every command.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Total Gibbs sweeps, burn-in included.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Slab scale g, a positive number or "auto" (= n).
    #[arg(long, default_value = "auto")]
    pub g: GScale,
    #[arg(long = "a-omega", default_value_t = 1.0)]
    pub a_omega: f64,
    #[arg(long = "b-omega", default_value_t = 1.0)]
    pub b_omega: f64,
    /// Declare a boundary (or selection) where the posterior probability exceeds this.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every kept draw to this CSV file.
    #[arg(long)]
    pub chain: Option<PathBuf>,
    /// Worker threads (simulate only; other commands run one chain).
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// How log p(y | δ) is evaluated.
    #[arg(long, value_enum, default_value_t = Route::Dense)]
    pub route: Route,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub case: u8,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Comma-separated table with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Name of the response column; every other column is a predictor, in file order.
    #[arg(long)]
    pub response: String,
    #[arg(long, value_enum, default_value_t = Preprocess::Standardize)]
    pub preprocess: Preprocess,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SmoothArgs {
    /// One numeric column with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Also write the posterior summary here.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub response: String,
    /// islab:C, gslab:G or fslab:B; `gslab:auto` takes g from --g.
    #[arg(long, default_value = "gslab:auto")]
    pub slab: String,
    #[arg(long, value_enum, default_value_t = Preprocess::Standardize)]
    pub preprocess: Preprocess,
    #[command(flatten)]
    pub common: Common,
}
