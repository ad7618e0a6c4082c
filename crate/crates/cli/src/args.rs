use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "modelspace", version, about = "Bayesian variable selection under Zellner g-priors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a design with the chosen mains, their squares and pairwise products.
    Expand(ExpandArgs),
    /// Run one Gibbs chain and report frequency and renormalized estimates.
    Gibbs(GibbsArgs),
    /// Enumerate every model.
    Exact(ExactArgs),
    /// Repeat seeded runs and compare estimated with observed variability.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column; every other column is a candidate.
    #[arg(long, default_value = "y")]
    pub response: String,
}

#[derive(Debug, Args)]
#[group(id = "prior", multiple = false)]
pub struct PriorArgs {
    /// Fixed g (default: the number of observations).
    #[arg(long)]
    pub g: Option<f64>,
    /// Put the Zellner-Siow prior on g and sample it.
    #[arg(long)]
    pub zellner_siow: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StartArg {
    Null,
    Full,
    Random,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Comma-separated main-effect columns.
    #[arg(long, value_delimiter = ',', required = true)]
    pub mains: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GibbsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    /// Recorded draws.
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub burn: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = StartArg::Null)]
    pub start: StartArg,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// Compare the running SSE with a fresh fit every this many sweeps (0: never).
    #[arg(long, default_value_t = 1000)]
    pub sse_check_every: usize,
    /// Report path (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write every draw as `mask<TAB>g<TAB>log_bf`.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fixed g (default: the number of observations).
    #[arg(long)]
    pub g: Option<f64>,
    /// Worker threads (default: MODELSPACE_WORKERS, else all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// High-order bits to shard on (default: four shards per worker).
    #[arg(long)]
    pub shard_bits: Option<u32>,
    /// Enumerate even when p exceeds the safety limit.
    #[arg(long)]
    pub force: bool,
    /// Also count the models more probable than the median probability model (a second pass).
    #[arg(long)]
    pub rank_mpm: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Visit frequencies.
    Gibbs,
    /// Bayes factors renormalized over each chain's visited models.
    Renormalized,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Recorded draws per run.
    #[arg(long, default_value_t = 10_000)]
    pub iterations: usize,
    /// Base seed; run seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Explicit comma-separated run seeds, one run each; replaces --runs and --seed.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["seed", "runs"])]
    pub seeds: Vec<u64>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Gibbs, MethodArg::Renormalized])]
    pub methods: Vec<MethodArg>,
    #[arg(long, value_enum, default_value_t = StartArg::Null)]
    pub start: StartArg,
    #[arg(long, default_value_t = 1000)]
    pub top_k: usize,
    /// Report from `exact` on the same data, to count HPM and MPM hits.
    #[arg(long)]
    pub exact: Option<PathBuf>,
    /// Visited models from another search, in trace format; scored by renormalization.
    #[arg(long)]
    pub visited: Vec<PathBuf>,
    /// Runs executed at once (default: MODELSPACE_WORKERS, else all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
