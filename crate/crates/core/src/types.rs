//! Domain types: ranked lists, datasets, training configuration and tasks.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One query's candidate items.
///
/// Lists are kept at their natural length. Teacher scores are unconstrained
/// in sign and scale, so an absent teacher score is `None`, never `0.0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankList {
    pub query_id: String,
    pub doc_ids: Vec<String>,
    /// Row-major `n × d` feature matrix.
    pub features: Option<Vec<Vec<f64>>>,
    pub relevance: Option<Vec<f64>>,
    pub teacher_scores: Option<Vec<f64>>,
}

impl RankList {
    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// True when at least one relevance label is positive.
    pub fn has_positive(&self) -> bool {
        self.relevance
            .as_ref()
            .is_some_and(|r| r.iter().any(|&y| y > 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    /// Number of feature columns, 0 when the lists carry no features.
    pub feature_dim: usize,
    pub lists: Vec<RankList>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, feature_dim: usize, lists: Vec<RankList>) -> Self {
        Self {
            name: name.into(),
            feature_dim,
            lists,
        }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn max_list_len(&self) -> usize {
        self.lists.iter().map(RankList::len).max().unwrap_or(0)
    }

    pub fn num_docs(&self) -> usize {
        self.lists.iter().map(RankList::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationKind {
    EmptyList,
    LengthMismatch,
    DuplicateDocId,
    NoLabels,
    InvalidRelevance,
    FeatureDimMismatch,
    DuplicateQueryId,
}

/// One broken dataset invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub query_id: String,
    pub field: &'static str,
    pub kind: ViolationKind,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query {}: {}: {}", self.query_id, self.field, self.message)
    }
}

/// Reports every invariant violation in `ds`; an empty result means the
/// dataset is well formed.
pub fn validate_dataset(ds: &Dataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_queries = HashSet::new();
    for rl in &ds.lists {
        let q = rl.query_id.as_str();
        let mut push = |field: &'static str, kind: ViolationKind, message: String| {
            out.push(Violation {
                query_id: q.to_string(),
                field,
                kind,
                message,
            })
        };
        if !seen_queries.insert(q) {
            push("query_id", ViolationKind::DuplicateQueryId, "query id repeated".into());
        }
        let n = rl.doc_ids.len();
        if n == 0 {
            push("doc_ids", ViolationKind::EmptyList, "list has no documents".into());
        }
        let mut seen_docs = HashSet::new();
        for d in &rl.doc_ids {
            if !seen_docs.insert(d.as_str()) {
                push("doc_ids", ViolationKind::DuplicateDocId, format!("doc id {d} repeated"));
            }
        }
        if let Some(features) = &rl.features {
            if features.len() != n {
                push(
                    "features",
                    ViolationKind::LengthMismatch,
                    format!("{} feature rows for {n} documents", features.len()),
                );
            }
            if let Some(row) = features.iter().position(|r| r.len() != ds.feature_dim) {
                push(
                    "features",
                    ViolationKind::FeatureDimMismatch,
                    format!(
                        "row {row} has {} columns, dataset declares {}",
                        features[row].len(),
                        ds.feature_dim
                    ),
                );
            }
        }
        if let Some(rel) = &rl.relevance {
            if rel.len() != n {
                push(
                    "relevance",
                    ViolationKind::LengthMismatch,
                    format!("{} labels for {n} documents", rel.len()),
                );
            }
            if let Some(bad) = rel.iter().find(|y| !y.is_finite() || **y < 0.0) {
                push(
                    "relevance",
                    ViolationKind::InvalidRelevance,
                    format!("label {bad} is not a finite non-negative value"),
                );
            }
        }
        if let Some(t) = &rl.teacher_scores {
            if t.len() != n {
                push(
                    "teacher_scores",
                    ViolationKind::LengthMismatch,
                    format!("{} teacher scores for {n} documents", t.len()),
                );
            }
        }
        if rl.relevance.is_none() && rl.teacher_scores.is_none() {
            push(
                "relevance",
                ViolationKind::NoLabels,
                "neither relevance labels nor teacher scores present".into(),
            );
        }
    }
    out
}

macro_rules! named_enum {
    ($ty:ident { $($variant:ident => $name:literal $(| $alias:literal)*),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn name(self) -> &'static str {
                match self { $($ty::$variant => $name),+ }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = ConfigError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                let lower = s.trim().to_ascii_lowercase();
                $(
                    if lower == $name.to_ascii_lowercase() $(|| lower == $alias)* {
                        return Ok($ty::$variant);
                    }
                )+
                Err(ConfigError::UnknownName { kind: stringify!($ty), name: s.to_string() })
            }
        }
    };
}

/// Loss applied to relevance labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RelevanceLoss {
    Softmax,
    LambdaLoss,
}

named_enum!(RelevanceLoss { Softmax => "Softmax", LambdaLoss => "LambdaLoss" | "lambda" });

/// Loss applied to (transformed) teacher scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DistillLoss {
    None,
    Rd,
    RankDistil,
    Mse,
    PairLog,
    PairMse,
    GumbelNdcg,
    Softmax,
    LambdaLoss,
}

named_enum!(DistillLoss {
    None => "None" | "relevanceonly" | "relevance-only",
    Rd => "RD",
    RankDistil => "RankDistil",
    Mse => "MSE",
    PairLog => "PairLog",
    PairMse => "PairMSE",
    GumbelNdcg => "GumbelNDCG",
    Softmax => "Softmax",
    LambdaLoss => "LambdaLoss" | "lambda",
});

impl DistillLoss {
    /// The eight distillation methods, without `None`.
    pub const METHODS: &'static [DistillLoss] = &[
        DistillLoss::Rd,
        DistillLoss::RankDistil,
        DistillLoss::Mse,
        DistillLoss::PairLog,
        DistillLoss::PairMse,
        DistillLoss::GumbelNdcg,
        DistillLoss::Softmax,
        DistillLoss::LambdaLoss,
    ];

    /// Name used in result tables; `None` is the relevance-only baseline.
    pub fn method_name(self) -> &'static str {
        match self {
            DistillLoss::None => "RelevanceOnly",
            other => other.name(),
        }
    }

    /// Losses that only look at the teacher ordering, so the softmax
    /// transform has no effect on them.
    pub fn is_order_only(self) -> bool {
        matches!(self, DistillLoss::Rd | DistillLoss::PairLog)
    }

    /// RankDistil samples permutations from a distribution and therefore
    /// always needs the transform.
    pub fn requires_transform(self) -> bool {
        matches!(self, DistillLoss::RankDistil)
    }

    pub fn uses_top_k(self) -> bool {
        matches!(self, DistillLoss::Rd | DistillLoss::RankDistil)
    }
}

impl From<RelevanceLoss> for DistillLoss {
    fn from(l: RelevanceLoss) -> Self {
        match l {
            RelevanceLoss::Softmax => DistillLoss::Softmax,
            RelevanceLoss::LambdaLoss => DistillLoss::LambdaLoss,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("{name} must be positive, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("alpha = {0} < 1 needs a distillation loss, but distill_loss is None")]
    MissingDistillLoss(f64),
    #[error("incompatible configuration: {0}")]
    Incompatible(String),
    #[error("unknown {kind} name {name:?}")]
    UnknownName { kind: &'static str, name: String },
}

/// Everything needed to train one student.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillConfig {
    pub relevance_loss: RelevanceLoss,
    pub distill_loss: DistillLoss,
    pub alpha: f64,
    pub transform_on: bool,
    pub temperature: f64,
    /// Teacher top-K for RD and RankDistil; clamped to each list's length.
    pub top_k: usize,
    pub num_permutation_samples: usize,
    pub gumbel_samples: usize,
    pub gumbel_scale: f64,
    pub smoothing_tau: f64,
    pub learning_rate: f64,
    pub batch_lists: usize,
    pub train_steps: usize,
    /// Validation interval; `None` means `train_steps / 20`, at least 1.
    pub eval_every: Option<usize>,
    pub seed: u64,
}

impl Default for DistillConfig {
    fn default() -> Self {
        Self {
            relevance_loss: RelevanceLoss::Softmax,
            distill_loss: DistillLoss::None,
            alpha: 1.0,
            transform_on: false,
            temperature: 1.0,
            top_k: 5,
            num_permutation_samples: 8,
            gumbel_samples: 8,
            gumbel_scale: 1.0,
            smoothing_tau: 0.1,
            learning_rate: 0.1,
            batch_lists: 128,
            train_steps: 2000,
            eval_every: None,
            seed: 0,
        }
    }
}

impl DistillConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::AlphaOutOfRange(self.alpha));
        }
        let positive = [
            ("temperature", self.temperature),
            ("learning_rate", self.learning_rate),
            ("gumbel_scale", self.gumbel_scale),
            ("smoothing_tau", self.smoothing_tau),
            ("top_k", self.top_k as f64),
            ("num_permutation_samples", self.num_permutation_samples as f64),
            ("gumbel_samples", self.gumbel_samples as f64),
            ("batch_lists", self.batch_lists as f64),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ConfigError::NotPositive { name, value });
            }
        }
        if self.eval_every == Some(0) {
            return Err(ConfigError::NotPositive {
                name: "eval_every",
                value: 0.0,
            });
        }
        if self.distill_loss == DistillLoss::None && self.alpha < 1.0 {
            return Err(ConfigError::MissingDistillLoss(self.alpha));
        }
        Ok(())
    }

    /// Whether teacher scores are softmax-transformed before the distillation
    /// loss sees them. RankDistil always transforms.
    pub fn effective_transform(&self) -> bool {
        self.transform_on || self.distill_loss.requires_transform()
    }

    pub fn eval_interval(&self) -> usize {
        self.eval_every.unwrap_or((self.train_steps / 20).max(1))
    }

    pub fn uses_relevance(&self) -> bool {
        self.alpha > 0.0
    }

    pub fn uses_teacher(&self) -> bool {
        self.alpha < 1.0
    }
}

/// Benchmark task families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskKind {
    /// Text, in-domain teacher, labels available.
    T1InDomain,
    /// Text, out-of-domain teacher, labels available.
    T2Transfer,
    /// Text, out-of-domain teacher, no target labels.
    T3TransferZeroshot,
    /// Tabular, in-domain teacher, labels available.
    T4Tabular,
}

named_enum!(TaskKind {
    T1InDomain => "T1" | "t1-indomain",
    T2Transfer => "T2" | "t2-transfer",
    T3TransferZeroshot => "T3" | "t3-zeroshot" | "zeroshot",
    T4Tabular => "T4" | "t4-tabular",
});

/// Adjusts `cfg` to the label availability of `kind`.
///
/// The zeroshot task has no relevance labels, so its objective is the
/// distillation term alone (`alpha = 0`). RD cannot run there, since its
/// positives come from the label-carrying setup.
pub fn derive_task_constraints(
    kind: TaskKind,
    cfg: &DistillConfig,
) -> Result<DistillConfig, ConfigError> {
    match kind {
        TaskKind::T3TransferZeroshot => {
            match cfg.distill_loss {
                DistillLoss::Rd => {
                    return Err(ConfigError::Incompatible(
                        "RD is not applicable to the zeroshot task".into(),
                    ))
                }
                DistillLoss::None => {
                    return Err(ConfigError::Incompatible(
                        "the zeroshot task trains on teacher scores only and needs a distillation loss"
                            .into(),
                    ))
                }
                _ => {}
            }
            Ok(DistillConfig {
                alpha: 0.0,
                ..cfg.clone()
            })
        }
        _ => Ok(cfg.clone()),
    }
}
