//! `rdkit`: train, evaluate and compare distilled linear rankers.
//!
//! Every command that writes files also writes `<command>.manifest.json`
//! into `--out-dir`; `rdkit rerun --manifest <file>` repeats the run and
//! checks the outputs byte for byte.

mod commands;
mod data;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rdkit::{DistillConfig, DistillLoss, EmptyQueryPolicy, MetricSpec, RelevanceLoss};

use data::Format;

#[derive(Debug, Parser)]
#[command(name = "rdkit", version, about = "Ranking distillation toolkit")]
pub struct Cli {
    /// Directory for written artifacts and the run manifest.
    #[arg(long, global = true, env = "RDKIT_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads for sweeps and evaluation [default: logical cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a TREC run against TREC qrels.
    Evaluate(EvaluateArgs),
    /// Train one linear student.
    Train(TrainArgs),
    /// Train a grid of configurations and select per method on validation NDCG@5.
    Sweep(SweepArgs),
    /// Summary statistics of teacher scores.
    Stats(StatsArgs),
    /// Write a synthetic dataset with a known utility.
    Synth(SynthArgs),
    /// Mean ranks of methods across result tables.
    Report(ReportArgs),
    /// Repeat a run from its manifest and compare the outputs.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

impl Toggle {
    pub fn is_on(self) -> bool {
        self == Toggle::On
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalFlags {
    /// Score of queries without relevant documents: perfect, zero or ignore.
    #[arg(long, default_value = "ignore")]
    pub policy: EmptyQueryPolicy,
    /// Labels at or above this value count as relevant for MRR.
    #[arg(long)]
    pub binarize_threshold: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DataFlags {
    #[arg(long, value_enum, default_value = "libsvm")]
    pub format: Format,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: Option<PathBuf>,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// TREC run holding teacher scores for the training documents.
    #[arg(long)]
    pub train_teacher: Option<PathBuf>,
    #[arg(long)]
    pub val_teacher: Option<PathBuf>,
    #[arg(long)]
    pub test_teacher: Option<PathBuf>,
}

/// Settings shared by `train` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct TrainingFlags {
    #[arg(long, default_value = "softmax")]
    pub rel_loss: RelevanceLoss,
    #[arg(long, default_value_t = 128)]
    pub batch_lists: usize,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Validation interval in steps [default: steps / 20].
    #[arg(long)]
    pub eval_every: Option<usize>,
    /// Teacher permutations per list for RankDistil.
    #[arg(long, default_value_t = 8)]
    pub permutation_samples: usize,
    /// Gumbel noise draws per list for GumbelNDCG.
    #[arg(long, default_value_t = 8)]
    pub gumbel_samples: usize,
}

impl TrainingFlags {
    pub fn apply(&self, cfg: DistillConfig) -> DistillConfig {
        DistillConfig {
            relevance_loss: self.rel_loss,
            batch_lists: self.batch_lists,
            train_steps: self.steps,
            seed: self.seed,
            eval_every: self.eval_every,
            num_permutation_samples: self.permutation_samples,
            gumbel_samples: self.gumbel_samples,
            ..cfg
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub run: PathBuf,
    #[arg(long)]
    pub qrels: PathBuf,
    /// Metrics such as ndcg@5 or mrr [default: MRR@10, MRR, NDCG@1, NDCG@5, NDCG].
    #[arg(long, value_delimiter = ',')]
    pub metric: Vec<MetricSpec>,
    /// Cutoff for metrics given without one.
    #[arg(long)]
    pub cutoff: Option<usize>,
    #[command(flatten)]
    pub eval: EvalFlags,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long, default_value = "none")]
    pub distill_loss: DistillLoss,
    /// Weight of the relevance term; 1 trains on labels only.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "off")]
    pub transform: Toggle,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 5)]
    pub top_k: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[command(flatten)]
    pub eval: EvalFlags,
}

impl TrainArgs {
    pub fn config(&self) -> DistillConfig {
        self.training.apply(DistillConfig {
            distill_loss: self.distill_loss,
            alpha: self.alpha,
            transform_on: self.transform.is_on(),
            temperature: self.temperature,
            top_k: self.top_k,
            learning_rate: self.lr,
            ..DistillConfig::default()
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataFlags,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
    pub lrs: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.1,1,2,5,10")]
    pub temperatures: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    pub top_ks: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "on,off")]
    pub transform_modes: Vec<Toggle>,
    /// Distillation losses to sweep [default: all eight].
    #[arg(long, value_delimiter = ',')]
    pub losses: Vec<DistillLoss>,
    /// Skip the relevance-only baseline (disables significance marks).
    #[arg(long)]
    pub no_baseline: bool,
    #[command(flatten)]
    pub eval: EvalFlags,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// One or more score sources; each becomes one row.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "trec")]
    pub format: Format,
    /// Teacher runs for LibSVM inputs, matched to --input by position.
    #[arg(long, num_args = 1..)]
    pub teacher: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// File name prefix of the written dataset.
    #[arg(long, default_value = "synthetic")]
    pub name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub n_queries: usize,
    /// List length, or the lower bound when --max-list-len is given.
    #[arg(long, default_value_t = 20)]
    pub list_len: usize,
    #[arg(long)]
    pub max_list_len: Option<usize>,
    #[arg(long, default_value_t = 256)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 0.9)]
    pub teacher_quality: f64,
    #[arg(long, default_value_t = 0.05)]
    pub label_sparsity: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Directory of result-table CSVs [default: the bundled published tables].
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Metric column to rank on.
    #[arg(long, default_value = "ndcg@5")]
    pub column: String,
}

#[derive(Debug, Clone, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match commands::run(cli, &raw) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
