use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pkgraph::kgd::PolicyVariant;
use pkgraph::pipeline::{BackendKind, Preset};
use pkgraph::NodeKind;

#[derive(Debug, Parser)]
#[command(name = "pkgraph", version, about = "Build, evaluate and inspect product knowledge graphs")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Settings shared by every command. Flags win over environment variables,
/// which win over the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Decision policy: basic, strict or no-discard
    #[arg(long, global = true)]
    pub policy: Option<PolicyVariant>,
    /// Neighbours retrieved per decision
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Decide without showing retrieved neighbours
    #[arg(long, global = true)]
    pub no_retrieval_context: bool,
    /// Never send listing images to the value extractor
    #[arg(long, global = true)]
    pub no_images: bool,
    /// Listings whose type proposals run concurrently
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Seed for gen-corpus (default 7)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Agent backend for every role: rule or llm
    #[arg(long, global = true)]
    pub backend: Option<BackendKind>,
    /// Model assignment per role when using the llm backend
    #[arg(long, global = true)]
    pub preset: Option<Preset>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a graph from a JSON-lines corpus
    Build(BuildArgs),
    /// Compute an evaluation metric
    Eval(EvalArgs),
    /// Show a node and its edges
    Inspect(InspectArgs),
    /// Write a seeded synthetic corpus and its reference facts
    GenCorpus(GenArgs),
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    pub corpus: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Print the full JSON report instead of a summary
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub metric: EvalCommand,
}

#[derive(Debug, Subcommand)]
pub enum EvalCommand {
    /// Weighted efficiency score for product types
    Types {
        #[arg(long, alias = "acceptance")]
        acc: f64,
        #[arg(long, alias = "coverage")]
        cov: f64,
        /// Compression rate; give --products and --canonical-types instead to compute it
        #[arg(long, alias = "compression")]
        comp: Option<f64>,
        #[arg(long, requires = "canonical_types", conflicts_with = "comp")]
        products: Option<u64>,
        #[arg(long, requires = "products")]
        canonical_types: Option<u64>,
    },
    /// Probabilistic precision and recall of several models' key sets
    Keys {
        /// JSON object: model -> list of canonical keys
        #[arg(long)]
        keysets: PathBuf,
        /// JSON object: model -> reliability prior
        #[arg(long)]
        priors: PathBuf,
    },
    /// Edge-level precision, recall and F1 against reference facts
    Edges {
        /// JSON lines of {"product_id", "pairs"}
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Cohen's kappa between two label files
    Kappa {
        /// JSON array of labels
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Majority consensus of a judge panel
    Consensus {
        /// JSON object: judge -> label array
        #[arg(long)]
        panel: PathBuf,
        #[arg(long, default_value_t = pkgraph::eval::DEFAULT_CONSENSUS_THRESHOLD)]
        threshold: usize,
        /// JSON object: candidate -> label array, scored against the consensus
        #[arg(long)]
        candidates: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Product,
    Type,
    Key,
    Value,
}

impl From<KindArg> for NodeKind {
    fn from(k: KindArg) -> NodeKind {
        match k {
            KindArg::Product => NodeKind::Product,
            KindArg::Type => NodeKind::ProductType,
            KindArg::Key => NodeKind::AttributeKey,
            KindArg::Value => NodeKind::Value,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct InspectArgs {
    /// Node id or name
    pub node: String,
    /// Snapshot to read; defaults to graph.json in the output directory
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Restrict name lookup to one node kind
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Most neighbours listed per edge group
    #[arg(long, default_value_t = 25)]
    pub limit: usize,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 50)]
    pub listings: usize,
    #[arg(long, default_value_t = 10)]
    pub types: usize,
    /// Keep type names in their canonical spelling
    #[arg(long)]
    pub no_noise: bool,
    /// Attach placeholder image URLs
    #[arg(long)]
    pub images: bool,
}
