use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "bhtn", version, about = "Boolean hierarchical Tucker network decomposition")]
pub struct Cli {
    /// Worker threads (default: all cores). `--jobs 1` runs everything serially.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: Option<u64>,

    /// More log output on standard error (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a random tensor with a known exact decomposition.
    Generate(GenerateArgs),
    /// Decompose a tensor into a tree.
    Decompose(DecomposeArgs),
    /// Multiply a tree back into a tensor.
    Reconstruct(ReconstructArgs),
    /// Factorize a Boolean matrix as A·B.
    Bmf(BmfArgs),
    /// Run a parameter sweep and write per-trial CSV.
    Bench(BenchArgs),
    /// Serve the remote solver protocol.
    Serve(ServeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendArg {
    Exact,
    Sa,
    Remote,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitArg {
    ColumnSample,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FormatArg {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "sa")]
    pub backend: BackendArg,

    /// Annealing reads per column solve.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub reads: u64,

    /// Metropolis sweeps per read.
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub sweeps: u64,

    #[arg(long, default_value_t = 0.1)]
    pub beta_min: f64,

    #[arg(long, default_value_t = 10.0)]
    pub beta_max: f64,

    /// Per-solve time budget in milliseconds (makes results timing dependent).
    #[arg(long)]
    pub time_limit_ms: Option<u64>,

    /// Remote solver base URL, e.g. http://127.0.0.1:8080.
    #[arg(long, env = "BHTN_REMOTE_ENDPOINT")]
    pub endpoint: Option<String>,

    /// Alternating iterations per factorization.
    #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,

    /// Iterations without improvement before a factorization stops.
    #[arg(long, default_value_t = 3)]
    pub stall: u64,

    #[arg(long, value_enum, default_value = "column-sample")]
    pub init: InitArg,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub order: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub size: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: u64,
    /// Factor density; drawn from {0.1, ..., 0.9} when omitted.
    #[arg(long)]
    pub p: Option<f64>,
    /// Bit-flip probability applied after generation.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tensor output (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Ground-truth tree output.
    #[arg(long)]
    pub tree_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct DecomposeArgs {
    /// Tensor file (JSON or plain text).
    pub tensor: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Tree output (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Machine-readable report output.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReconstructArgs {
    /// Tree JSON file.
    pub tree: PathBuf,
    /// Tensor output (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report the error rate against this tensor.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct BmfArgs {
    /// Matrix file (JSON or plain text, two dimensions).
    pub matrix: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rank: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Factors output (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum VaryArg {
    Rank,
    Size,
    Order,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseArg {
    Both,
    Clean,
    Noisy,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompareArg {
    Input,
    Clean,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub vary: VaryArg,
    /// Comma-separated values of the varied parameter.
    #[arg(long, value_delimiter = ',', required = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub values: Vec<u64>,
    #[arg(long, default_value_t = 4)]
    pub order: u64,
    #[arg(long, default_value_t = 4)]
    pub size: u64,
    #[arg(long, default_value_t = 4)]
    pub rank: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, value_enum, default_value = "both")]
    pub noise: NoiseArg,
    #[arg(long, default_value_t = 0.01)]
    pub noise_prob: f64,
    /// Target used for the summary error column.
    #[arg(long, value_enum, default_value = "input")]
    pub compare: CompareArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// CSV output (standard output when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scatter plot of solver time and error rate.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub sweeps: u64,
    #[arg(long, default_value_t = 0.1)]
    pub beta_min: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta_max: f64,
    /// Solver worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Queued requests beyond this get HTTP 503.
    #[arg(long, default_value_t = 256)]
    pub queue: usize,
}
