use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "mtbp", version, about = "Multi-type branching processes with time-dependent offspring laws")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the non-degeneracy assumptions and write validate.json.
    Validate(ValidateArgs),
    /// Generalized Perron-Frobenius sequences; writes spectral.csv and spectral.json.
    Spectral(SpectralArgs),
    /// Survival series Ξ, Γ, α and survival curves; writes series.csv and series.json.
    Series(SeriesArgs),
    /// Survival / extinction verdict; writes classify.json and prints it.
    Classify(ClassifyArgs),
    /// Discrete-time Monte Carlo ensemble; writes ensemble.csv and stats.json.
    Simulate(SimulateArgs),
    /// Continuous-time Monte Carlo ensemble; writes ct_ensemble.csv and ct_stats.json.
    CtSimulate(CtSimulateArgs),
    /// First-moment ODE of a continuous-time model; writes moment_ode.csv.
    MomentOde(MomentOdeArgs),
    /// Observe a model every l generations; writes skip_l<l>.json.
    Skip(SkipArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Directory receiving the artifacts.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads for data-parallel loops; results do not depend on it.
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    /// Probability bounds must exceed this to pass.
    #[arg(long, default_value_t = 0.0)]
    pub eps_min: f64,
    /// b in 1/b ≤ M_{n,n+k}(j,i) ≤ b.
    #[arg(long, default_value_t = 1e3)]
    pub criticality_bound: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectralArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Starting left vector, comma separated; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub u0: Option<Vec<f64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeriesArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub horizon: u64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Initial population for the bounded-ratio diagnostics.
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<u64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ClassifyArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(2..))]
    pub horizon: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// |ln ρ| at or below this counts as critical.
    #[arg(long, default_value_t = 1e-9)]
    pub crit_tol: f64,
    #[arg(long, default_value_t = 0.01)]
    pub convergent_ratio: f64,
    #[arg(long, default_value_t = 0.1)]
    pub divergent_ratio: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    pub model: PathBuf,
    #[arg(short = 'n', long = "generations", default_value_t = 100)]
    pub generations: u64,
    #[arg(short = 'R', long = "reps", default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial counts per type, comma separated; one type-1 particle when omitted.
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<u64>>,
    /// Positive weights u for the conditioned statistics; all ones when omitted.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = mtbp_core::simulate::DEFAULT_PARTICLE_CAP)]
    pub cap: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CtSimulateArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub time: f64,
    #[arg(short = 'R', long = "reps", default_value_t = 1000)]
    pub reps: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<u64>>,
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = mtbp_core::simulate::DEFAULT_PARTICLE_CAP)]
    pub cap: u64,
    /// RK4 step of the reference moment curve.
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MomentOdeArgs {
    pub model: PathBuf,
    #[arg(long, default_value_t = 5.0)]
    pub time: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    #[arg(long, value_delimiter = ',')]
    pub initial: Option<Vec<u64>>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SkipArgs {
    pub model: PathBuf,
    #[arg(short = 'l', long = "skip", value_parser = clap::value_parser!(u64).range(1..))]
    pub l: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub mass_tol: f64,
    #[arg(long, default_value_t = mtbp_core::model::DEFAULT_SUPPORT_CAP)]
    pub support_cap: usize,
    #[command(flatten)]
    pub common: Common,
}
