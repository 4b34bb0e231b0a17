use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use pathex::corpus::live::DEFAULT_USER_AGENT;
use pathex::eval::CrossroadDegree;
use pathex::features::FeatureConfig;
use pathex::model::ProjectionMode;

pub const CACHE_DIR_ENV: &str = "PATHEX_CACHE_DIR";

/// Navigation-path extrapolation on article graphs.
///
/// Every option can also come from a flat `key=value` file given with
/// `--config`, where keys are long option names without the dashes. Options
/// given on the command line win.
#[derive(Debug, Parser)]
#[command(name = "pathex", version, propagate_version = true)]
pub struct Cli {
    /// Flat key=value configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Log more; repeat for debug output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate random-walk paths over a corpus and write the dataset files.
    BuildDataset(BuildDatasetArgs),
    /// Convert Wikispeedia path and link files into a dataset.
    ImportWikispeedia(ImportWikispeediaArgs),
    /// Write a deterministic synthetic corpus snapshot.
    SynthCorpus(SynthCorpusArgs),
    /// Compute node and edge features for one feature configuration.
    ExtractFeatures(ExtractFeaturesArgs),
    /// Train a model and write a checkpoint.
    Train(TrainArgs),
    /// Score a checkpoint on a split of the dataset.
    Evaluate(EvaluateArgs),
    /// Print the most likely suffixes of a prefix.
    Predict(PredictArgs),
    /// Train and evaluate every feature configuration over several seeds.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Pick among the first `dense-window` usable links.
    Dense,
    /// Pick among all usable links.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategorySource {
    /// Every article gets the fallback category.
    Offline,
    /// Query the DBpedia SPARQL endpoint (needs --allow-network).
    Dbpedia,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusKind {
    /// Articles in five topics with mostly within-topic links.
    Topics,
    /// Twenty articles whose walks follow one of two routes.
    TwoRoute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPart {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BuildDatasetArgs {
    /// Local snapshot directory to walk over.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Fetch articles over HTTP instead of reading a snapshot.
    #[arg(long)]
    pub allow_network: bool,
    /// MediaWiki API endpoint for live fetching.
    #[arg(long, default_value = "https://en.wikipedia.org/w/api.php")]
    pub api: String,
    #[arg(long, default_value = DEFAULT_USER_AGENT)]
    pub user_agent: String,
    /// Start article; defaults to the first article of the snapshot.
    #[arg(long)]
    pub seed_title: Option<String>,
    #[arg(long, value_enum, default_value = "sparse")]
    pub policy: Policy,
    /// Number of paths to generate.
    #[arg(long, default_value_t = 3000)]
    pub paths: usize,
    #[arg(long, default_value_t = 4)]
    pub min_len: usize,
    #[arg(long, default_value_t = 7)]
    pub max_len: usize,
    #[arg(long, default_value_t = 5)]
    pub dense_window: usize,
    /// Cut the dense window before filtering invalid titles.
    #[arg(long)]
    pub window_before_filter: bool,
    /// Start walks from a random previously visited article.
    #[arg(long)]
    pub restart_from_prior: bool,
    #[arg(long, default_value_t = 100)]
    pub max_attempts: usize,
    /// Random seed for the walks.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "offline")]
    pub categories: CategorySource,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ImportWikispeediaArgs {
    /// `paths_finished.tsv`.
    #[arg(long)]
    pub paths_file: PathBuf,
    /// `links.tsv`; without it the graph holds only traversed links.
    #[arg(long)]
    pub links_file: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthCorpusArgs {
    #[arg(long, value_enum, default_value = "topics")]
    pub kind: CorpusKind,
    /// Number of articles (topics corpus only).
    #[arg(long, default_value_t = 100)]
    pub articles: usize,
    /// Links per article (topics corpus only).
    #[arg(long, default_value_t = 8)]
    pub links: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SplitArgs {
    /// Train, validation and test shares, comma-separated.
    #[arg(long, default_value = "0.8,0.1,0.1")]
    pub split: String,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExtractFeaturesArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Snapshot with article texts; without it titles stand in for texts.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// original, sim, dhnode or both.
    #[arg(long, default_value = "both")]
    pub features: FeatureConfig,
    #[command(flatten)]
    #[serde(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Hidden layer widths, comma-separated; `none` for a linear model.
    #[arg(long, default_value = "16,16")]
    pub hidden: String,
    /// Diffusion steps for the pseudo-coordinates.
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// History decay for the pseudo-coordinates, in (0, 1].
    #[arg(long, default_value_t = 0.7)]
    pub decay: f64,
    #[arg(long, default_value_t = 0.05)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 20)]
    pub patience: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory of extract-features.
    #[arg(long)]
    pub features_dir: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Seed for the network initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvalArgs {
    /// Degree that makes a node a crossroad: out or total.
    #[arg(long, default_value = "out")]
    pub crossroads: CrossroadDegree,
    /// head or pinv.
    #[arg(long, default_value = "head")]
    pub projection: ProjectionMode,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub features_dir: PathBuf,
    /// Checkpoint written by train.
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub on: SplitPart,
    #[command(flatten)]
    #[serde(flatten)]
    pub eval: EvalArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub features_dir: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Observed titles, comma-joined; write a comma inside a title as `%2C`.
    #[arg(long)]
    pub prefix: String,
    #[arg(long, default_value_t = 2)]
    pub horizon: usize,
    /// Number of suffixes to list.
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Feature configurations, comma-separated, or `all`.
    #[arg(long, default_value = "all")]
    pub features: String,
    /// Network seeds, comma-separated.
    #[arg(long, default_value = "0,1,2")]
    pub seeds: String,
    /// Dataset name used in the reports; defaults to the directory name.
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub split: SplitArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub eval: EvalArgs,
    #[arg(long)]
    pub out: PathBuf,
}
