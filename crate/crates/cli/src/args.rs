use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use corrgen_core::conditions::Alpha;
use corrgen_core::factorize::DEFAULT_RNG_SEED;

#[derive(Debug, Parser)]
#[command(name = "corrgen", version, about = "Decide and search for local protocols generating classical correlations from shared seeds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the necessary conditions for a seed and a target.
    Check(CheckArgs),
    /// Search for a diagonal-form factorization with a prescribed Λ.
    Factorize(FactorizeArgs),
    /// Check a candidate factorization against a target.
    Verify(VerifyArgs),
    /// Sample label pairs from a factorization's protocol.
    Simulate(SimulateArgs),
    /// Search for stochastic maps taking a classical seed to a target.
    Classical(ClassicalArgs),
    /// Build the hardness instances of a SUBSET-SUM instance.
    Reduce(ReduceArgs),
    /// Λ diagonals read off explicit purifications of a target.
    LambdaCandidates(LambdaCandidatesArgs),
    /// Conditions first, then a factorization search if nothing rules the seed out.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Seed file: a pure state `{"amplitudes": ...}` or a classical-classical
    /// state `{"matrix": ...}`.
    #[arg(long, conflicts_with = "schmidt", required_unless_present = "schmidt")]
    pub seed: Option<PathBuf>,
    /// Squared Schmidt coefficients of a pure seed.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub schmidt: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    #[arg(long = "seed-rng", default_value_t = DEFAULT_RNG_SEED)]
    pub seed_rng: u64,
    /// Objective value counted as converged.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub seed: SeedArgs,
    /// Rényi orders; `inf` for the limit.
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<Alpha>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct FactorizeArgs {
    #[arg(long)]
    pub target: PathBuf,
    /// Diagonal of Λ: the Schmidt coefficients √λ (or λ with --squared).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Read --lambda as squared coefficients λ.
    #[arg(long)]
    pub squared: bool,
    /// Factorization size; must equal the length of --lambda.
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub target: PathBuf,
    /// Factorization JSON `{"lambda", "C", "D"}`.
    #[arg(long)]
    pub factorization: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub factorization: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long = "seed-rng", default_value_t = DEFAULT_RNG_SEED)]
    pub seed_rng: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ClassicalArgs {
    /// Seed correlation P₁.
    #[arg(long)]
    pub seed: PathBuf,
    /// Target correlation P₂.
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// SUBSET-SUM items.
    #[arg(long, value_delimiter = ',', conflicts_with = "instance", required_unless_present = "instance")]
    pub items: Option<Vec<u64>>,
    /// Instance file `{"items": [...]}`.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LambdaCandidatesArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<Alpha>>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}
