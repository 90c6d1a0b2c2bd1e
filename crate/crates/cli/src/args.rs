use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evingca::data::SyntheticKind;
use evingca::engine::{Seeding, SmallClusterPolicy};
use evingca::{EvingcaConfig, HeuristicsMode, IndexKind, ScalerKind};

#[derive(Debug, Parser)]
#[command(name = "evingca", version, about = "Density-variance guided graph clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster one dataset and write its labels.
    Cluster(ClusterArgs),
    /// Random-search the configuration space against ground truth.
    Tune(TuneArgs),
    /// Time clustering over growing point counts and dimensions.
    Bench(BenchArgs),
    /// Compare ablation arms against the baseline across datasets.
    Ablate(AblateArgs),
    /// Write a synthetic dataset as CSV.
    Gen(GenArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

/// Where the data comes from: a CSV file or a generator.
#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "source")]
pub struct Source {
    /// CSV file of numeric features.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Generate the data instead (seeded by --seed).
    #[arg(long)]
    pub kind: Option<SyntheticKind>,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[command(flatten)]
    pub source: Source,
    /// Ground-truth column of --input, by header name or 0-based index.
    #[arg(long)]
    pub truth: Option<String>,
    /// Point count for --kind (defaults per kind).
    #[arg(long, requires = "kind")]
    pub n: Option<usize>,
    /// Noise level for --kind (defaults per kind).
    #[arg(long, requires = "kind")]
    pub noise: Option<f64>,
    /// minmax, standard or none.
    #[arg(long, default_value = "minmax")]
    pub scaler: ScalerKind,
}

/// Clustering parameters. Unset flags keep the defaults for the dataset
/// size.
#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// 1 or 2.
    #[arg(long)]
    pub level: Option<u8>,
    #[arg(long)]
    pub expansion: Option<f64>,
    #[arg(long)]
    pub blur: Option<f64>,
    #[arg(long)]
    pub max_neighbors: Option<usize>,
    #[arg(long)]
    pub min_cluster_size: Option<usize>,
    /// reassign or noise.
    #[arg(long)]
    pub policy: Option<SmallClusterPolicy>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// default or identity.
    #[arg(long)]
    pub heuristics: Option<HeuristicsMode>,
    /// ordered or random.
    #[arg(long)]
    pub seeding: Option<Seeding>,
    /// exact or accelerated.
    #[arg(long)]
    pub index: Option<IndexKind>,
}

impl ConfigArgs {
    pub fn apply(&self, n: usize, seed: u64) -> EvingcaConfig {
        let d = EvingcaConfig::for_dataset(n);
        EvingcaConfig {
            level: self.level.unwrap_or(d.level),
            expansion: self.expansion.unwrap_or(d.expansion),
            blur: self.blur.unwrap_or(d.blur),
            max_neighbors: self.max_neighbors.unwrap_or(d.max_neighbors),
            min_cluster_size: self.min_cluster_size.unwrap_or(d.min_cluster_size),
            small_cluster_policy: self.policy.unwrap_or(d.small_cluster_policy),
            tau: self.tau.unwrap_or(d.tau),
            heuristics: self.heuristics.unwrap_or(d.heuristics),
            seeding: self.seeding.unwrap_or(d.seeding),
            index: self.index.unwrap_or(d.index),
            seed,
        }
    }
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for labels.csv and report.json; labels go to stdout
    /// when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Fixes the first trial; later trials sample level, expansion, blur,
    /// neighbors, min size, policy and tau.
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 51)]
    pub trials: usize,
    #[arg(long, default_value_t = 120.0)]
    pub seconds: f64,
    /// Output directory for trials.jsonl and summary.json; trials go to
    /// stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Point counts of the N sweep (at --bench-dim dimensions).
    #[arg(long, value_delimiter = ',', default_value = "2500,5000,10000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    pub bench_dim: usize,
    /// Dimensions of the d sweep (at --bench-n points).
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256")]
    pub dims: Vec<usize>,
    #[arg(long, default_value_t = 2000)]
    pub bench_n: usize,
    /// Timed runs per point; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for bench.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(id = "datasets", required = true, multiple = true, args = ["input", "dev"])]
pub struct AblateArgs {
    /// CSV dataset entered into the significance tests; repeatable.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Ground-truth column of every --input.
    #[arg(long, default_value = "label")]
    pub truth: String,
    /// Also ablate the generated development suite (excluded from the
    /// significance tests).
    #[arg(long)]
    pub dev: bool,
    /// Arms to run: scaler=standard, scaler=none, policy=noise,
    /// seeding=random, heuristics=identity. All when omitted.
    #[arg(long, value_delimiter = ',')]
    pub arms: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 51)]
    pub trials: usize,
    #[arg(long, default_value_t = 120.0)]
    pub seconds: f64,
    #[arg(long, default_value_t = 10)]
    pub reruns: usize,
    /// Output directory for ablation.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub kind: SyntheticKind,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output CSV file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}
