//! Experiment orchestration: grid sweeps with validation-based selection,
//! paired significance tests, rank aggregation across result tables,
//! α-sensitivity curves and learning-dynamics export.

mod alpha;
mod dynamics;
mod published;
mod ranks;
mod results;
mod sweep;
mod ttest;

pub use alpha::{alpha_sensitivity, AlphaCell, AlphaCurve};
pub use dynamics::{export_learning_dynamics, parse_learning_dynamics};
pub use published::published_tables;
pub use ranks::{aggregate_ranks, aggregate_ranks_for, average_ranks, MethodRank};
pub use results::{
    per_query_csv, FailedPoint, ResultRow, ResultTable, METRIC_COLUMNS, NDCG5_COLUMN, REFERENCE_METHODS,
};
pub use sweep::{run_sweep, select_best, GridPoint, PointRecord, SweepGrid, SweepOutcome};
pub use ttest::{paired_ttest, TTest};

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exec::Exec;
use crate::metrics::{evaluate_with, EmptyQueryPolicy, MetricError, MetricSpec, Qrels, Run};
use crate::student::{LinearModel, TrainError};
use crate::types::{ConfigError, Dataset};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("paired test needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("paired vectors differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("sweep grid has no {0}")]
    EmptyGrid(&'static str),
    #[error("no result tables to aggregate")]
    NoTables,
    #[error("method {0} appears in no table")]
    MethodMissing(String),
    #[error("table {table}: metric of {method} is not finite")]
    NonFiniteMetric { table: String, method: String },
    #[error("method {method}: all {failures} grid points failed")]
    NoSuccessfulPoint { method: String, failures: usize },
    #[error("malformed learning-dynamics CSV: {0}")]
    Dynamics(String),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Evaluation conventions shared by sweeps and curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub policy: EmptyQueryPolicy,
    /// Binarization threshold for the MRR columns; graded labels need one.
    pub mrr_threshold: Option<f64>,
    pub exec: Exec,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            policy: EmptyQueryPolicy::Ignore,
            mrr_threshold: None,
            exec: Exec::default(),
        }
    }
}

/// Aggregates and per-query values of the five standard columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelEval {
    pub metrics: [f64; 5],
    pub per_query: [BTreeMap<String, f64>; 5],
}

/// Scores every list of `ds` with `model` and evaluates the standard columns
/// against its relevance labels.
pub fn evaluate_model(model: &LinearModel, ds: &Dataset, opts: &EvalOptions) -> Result<ModelEval, HarnessError> {
    let scores = ds
        .lists
        .iter()
        .map(|rl| model.score(rl))
        .collect::<Result<Vec<_>, _>>()?;
    let run = Run::from_scored_lists(ds, &scores);
    let qrels = Qrels::from_dataset(ds);
    let specs = MetricSpec::standard_columns(opts.policy, opts.mrr_threshold);
    let mut metrics = [0.0; 5];
    let mut per_query: [BTreeMap<String, f64>; 5] = Default::default();
    for (c, spec) in specs.iter().enumerate() {
        let report = evaluate_with(&run, &qrels, spec, opts.exec)?;
        metrics[c] = report.aggregate;
        per_query[c] = report.per_query;
    }
    Ok(ModelEval { metrics, per_query })
}
