//! Ranking distillation toolkit.
//!
//! Trains a small linear student ranker from relevance labels and teacher
//! scores with a weighted two-term objective, using a family of pointwise,
//! pairwise and listwise distillation losses. Evaluation follows standard IR
//! conventions (NDCG, MRR, TREC run/qrel files) and the [`harness`] module
//! runs hyperparameter sweeps, significance tests and rank aggregation.
//!
//! ```text
//! io (TREC / LibSVM / synthetic) ──► types::Dataset
//!                                        │
//!             objective (transform + α-weighted loss) ◄── losses
//!                                        │
//!                         student (linear model + Adagrad)
//!                                        │
//!                       metrics ──► harness (sweeps, t-tests, ranks)
//! ```
//!
//! Data-parallel work (sweep grid points, per-query evaluation) runs on rayon
//! when the `parallel` feature is enabled and falls back to plain iteration
//! otherwise; see [`exec`].

pub mod exec;
pub mod harness;
pub mod io;
pub mod losses;
pub mod metrics;
pub mod objective;
pub mod ranking;
pub mod seed;
pub mod student;
pub mod types;

pub use losses::{LossError, LossResult, NoiseMode, NoiseSpec};
pub use metrics::{EmptyQueryPolicy, EvalReport, MetricKind, MetricSpec};
pub use objective::{combined_loss, transform_teacher_scores, LossParams, TransformSpec};
pub use student::{train, LinearModel, TrainOutcome, TrainTrace};
pub use types::{
    derive_task_constraints, validate_dataset, ConfigError, Dataset, DistillConfig, DistillLoss,
    RankList, RelevanceLoss, TaskKind, Violation,
};
