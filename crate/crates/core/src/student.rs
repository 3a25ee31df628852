//! Linear student ranker trained with Adagrad on mini-batches of lists.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ndcg_at_k, ndcg_with_gains};
use crate::objective::{combined_loss, transform_teacher_scores, LossParams, ObjectiveError, TransformSpec};
use crate::seed;
use crate::types::{ConfigError, Dataset, DistillConfig, RankList};

pub const ADAGRAD_EPSILON: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("dataset {0} has no lists")]
    EmptyDataset(String),
    #[error("query {query}: no feature matrix")]
    MissingFeatures { query: String },
    #[error("query {query}: feature dimension {got}, model expects {expected}")]
    DimensionMismatch { query: String, expected: usize, got: usize },
    #[error("query {query}: {field} are required by this configuration")]
    MissingLabels { query: String, field: &'static str },
    #[error("gradient has length {got}, model has {expected} parameters")]
    GradientLength { expected: usize, got: usize },
    #[error("training diverged at step {step}: non-finite loss or gradient")]
    Diverged { step: usize },
    #[error("query {query}: {source}")]
    Objective {
        query: String,
        #[source]
        source: ObjectiveError,
    },
}

/// `s = w·x + b` plus the Adagrad accumulator for `[w, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub adagrad_accum: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            adagrad_accum: vec![0.0; dim + 1],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn score_row(&self, x: &[f64]) -> f64 {
        // Four independent partial sums let the loop vectorize; the
        // summation order is fixed, so results stay bit-reproducible.
        let mut acc = [0.0f64; 4];
        let w = self.weights.chunks_exact(4);
        let tail: f64 = w
            .remainder()
            .iter()
            .zip(&x[x.len() - w.remainder().len()..])
            .map(|(a, b)| a * b)
            .sum();
        for (wc, xc) in w.zip(x.chunks_exact(4)) {
            for l in 0..4 {
                acc[l] += wc[l] * xc[l];
            }
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail + self.bias
    }

    pub fn score(&self, rl: &RankList) -> Result<Vec<f64>, TrainError> {
        let features = rl.features.as_ref().ok_or_else(|| TrainError::MissingFeatures {
            query: rl.query_id.clone(),
        })?;
        if let Some(row) = features.iter().find(|r| r.len() != self.dim()) {
            return Err(TrainError::DimensionMismatch {
                query: rl.query_id.clone(),
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(features.iter().map(|x| self.score_row(x)).collect())
    }

    /// One Adagrad update with gradient laid out as `[∂w..., ∂b]`:
    /// `accum += g²`, `θ −= lr·g / (√accum + ε)`. Leaves the model untouched
    /// when the gradient is not finite.
    pub fn adagrad_step(&mut self, gradient: &[f64], learning_rate: f64) -> Result<(), TrainError> {
        let d = self.dim();
        if gradient.len() != d + 1 {
            return Err(TrainError::GradientLength {
                expected: d + 1,
                got: gradient.len(),
            });
        }
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::Diverged { step: 0 });
        }
        for (k, &g) in gradient.iter().enumerate() {
            self.adagrad_accum[k] += g * g;
            let update = learning_rate * g / (self.adagrad_accum[k].sqrt() + ADAGRAD_EPSILON);
            if k < d {
                self.weights[k] -= update;
            } else {
                self.bias -= update;
            }
        }
        Ok(())
    }

    /// `[w..., b]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.weights.clone();
        v.push(self.bias);
        v
    }
}

/// Validation snapshot during training, metrics ×100.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub step: usize,
    /// Mean objective over the step's batch.
    pub train_loss: f64,
    /// NDCG@5 against relevance labels; `None` without labeled validation lists.
    pub val_ndcg5_relevance: Option<f64>,
    /// NDCG@5 against teacher scores used directly as gains.
    pub val_ndcg5_teacher: Option<f64>,
}

impl TrainTrace {
    /// Metric used for checkpoint and sweep selection.
    pub fn selection_metric(&self) -> Option<f64> {
        self.val_ndcg5_relevance.or(self.val_ndcg5_teacher)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub final_model: LinearModel,
    /// Checkpoint with the best validation NDCG@5; the final model when no
    /// validation happened.
    pub best_model: LinearModel,
    pub best_step: usize,
    pub best_val_ndcg5: Option<f64>,
    pub traces: Vec<TrainTrace>,
}

impl TrainOutcome {
    pub fn model(&self) -> &LinearModel {
        &self.best_model
    }
}

/// Counts how often the trainer reads each label source of the training set.
#[derive(Debug, Default)]
pub struct LabelReads {
    pub relevance: AtomicUsize,
    pub teacher: AtomicUsize,
}

impl LabelReads {
    pub fn relevance(&self) -> usize {
        self.relevance.load(Ordering::Relaxed)
    }

    pub fn teacher(&self) -> usize {
        self.teacher.load(Ordering::Relaxed)
    }
}

struct PreparedList<'a> {
    query: &'a str,
    features: &'a [Vec<f64>],
    relevance: Option<&'a [f64]>,
    teacher: Option<Vec<f64>>,
}

fn check_features<'a>(rl: &'a RankList, dim: usize) -> Result<&'a [Vec<f64>], TrainError> {
    let f = rl.features.as_deref().ok_or_else(|| TrainError::MissingFeatures {
        query: rl.query_id.clone(),
    })?;
    if let Some(row) = f.iter().find(|r| r.len() != dim) {
        return Err(TrainError::DimensionMismatch {
            query: rl.query_id.clone(),
            expected: dim,
            got: row.len(),
        });
    }
    Ok(f)
}

fn prepare<'a>(
    ds: &'a Dataset,
    cfg: &DistillConfig,
    reads: &LabelReads,
) -> Result<Vec<PreparedList<'a>>, TrainError> {
    let transform = TransformSpec {
        enabled: cfg.effective_transform(),
        temperature: cfg.temperature,
    };
    ds.lists
        .iter()
        .map(|rl| {
            let features = check_features(rl, ds.feature_dim)?;
            let relevance = if cfg.uses_relevance() {
                reads.relevance.fetch_add(1, Ordering::Relaxed);
                Some(rl.relevance.as_deref().ok_or_else(|| TrainError::MissingLabels {
                    query: rl.query_id.clone(),
                    field: "relevance labels",
                })?)
            } else {
                None
            };
            let teacher = if cfg.uses_teacher() {
                reads.teacher.fetch_add(1, Ordering::Relaxed);
                let t = rl.teacher_scores.as_deref().ok_or_else(|| TrainError::MissingLabels {
                    query: rl.query_id.clone(),
                    field: "teacher scores",
                })?;
                Some(
                    transform_teacher_scores(t, transform).map_err(|source| TrainError::Objective {
                        query: rl.query_id.clone(),
                        source,
                    })?,
                )
            } else {
                None
            };
            Ok(PreparedList {
                query: &rl.query_id,
                features,
                relevance,
                teacher,
            })
        })
        .collect()
}

/// NDCG@5 ×100 of `model` on `ds` against relevance labels and against
/// teacher scores. Teacher gains are the raw scores shifted so the list
/// minimum is 0; lists without signal are skipped.
pub fn validation_ndcg5(model: &LinearModel, ds: &Dataset) -> Result<(Option<f64>, Option<f64>), TrainError> {
    let (mut rel_sum, mut rel_n, mut t_sum, mut t_n) = (0.0, 0usize, 0.0, 0usize);
    for rl in &ds.lists {
        let scores = model.score(rl)?;
        if let Some(rel) = &rl.relevance {
            if rel.iter().any(|&y| y > 0.0) {
                rel_sum += ndcg_at_k(rel, &scores, Some(5));
                rel_n += 1;
            }
        }
        if let Some(t) = &rl.teacher_scores {
            let min = t.iter().copied().fold(f64::INFINITY, f64::min);
            let gains: Vec<f64> = t.iter().map(|v| v - min).collect();
            if gains.iter().any(|&g| g > 0.0) {
                t_sum += ndcg_with_gains(&gains, &scores, Some(5));
                t_n += 1;
            }
        }
    }
    let mean = |sum: f64, n: usize| (n > 0).then(|| 100.0 * sum / n as f64);
    Ok((mean(rel_sum, rel_n), mean(t_sum, t_n)))
}

/// Trains a zero-initialized linear student on `ds_train`, validating on
/// `ds_val` every [`DistillConfig::eval_interval`] steps and at the last step.
pub fn train(ds_train: &Dataset, ds_val: &Dataset, cfg: &DistillConfig) -> Result<TrainOutcome, TrainError> {
    train_instrumented(ds_train, ds_val, cfg, &LabelReads::default())
}

/// [`train`] that also records label reads on the training set in `reads`.
pub fn train_instrumented(
    ds_train: &Dataset,
    ds_val: &Dataset,
    cfg: &DistillConfig,
    reads: &LabelReads,
) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    if ds_train.is_empty() {
        return Err(TrainError::EmptyDataset(ds_train.name.clone()));
    }
    let dim = ds_train.feature_dim;
    for rl in &ds_val.lists {
        check_features(rl, dim)?;
    }
    let lists = prepare(ds_train, cfg, reads)?;
    let params = LossParams::from_config(cfg);
    let eval_every = cfg.eval_interval();

    let mut model = LinearModel::zeros(dim);
    let mut best: Option<(LinearModel, usize, Option<f64>)> = None;
    let mut traces = Vec::new();

    let mut order_rng = seed::rng(seed::derive_seed(cfg.seed, "batch-order"));
    let mut order: Vec<usize> = (0..lists.len()).collect();
    order.shuffle(&mut order_rng);
    let mut cursor = 0;

    let mut grad = vec![0.0; dim + 1];
    for step in 1..=cfg.train_steps {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss_sum = 0.0;
        for _ in 0..cfg.batch_lists {
            if cursor == order.len() {
                order.shuffle(&mut order_rng);
                cursor = 0;
            }
            let li = order[cursor];
            cursor += 1;
            let list = &lists[li];
            let scores: Vec<f64> = list.features.iter().map(|x| model.score_row(x)).collect();
            let call_seed = seed::derive_indexed(cfg.seed, "loss", ((step as u64) << 32) | li as u64);
            let r = combined_loss(
                list.relevance,
                list.teacher.as_deref(),
                &scores,
                cfg.alpha,
                cfg.relevance_loss,
                cfg.distill_loss,
                &params.with_seed(call_seed),
            )
            .map_err(|source| TrainError::Objective {
                query: list.query.to_string(),
                source,
            })?;
            loss_sum += r.value;
            for (x, &g) in list.features.iter().zip(&r.gradient) {
                if g != 0.0 {
                    for (acc, v) in grad[..dim].iter_mut().zip(x) {
                        *acc += g * v;
                    }
                    grad[dim] += g;
                }
            }
        }
        let b = cfg.batch_lists as f64;
        grad.iter_mut().for_each(|g| *g /= b);
        let train_loss = loss_sum / b;
        if !train_loss.is_finite() {
            return Err(TrainError::Diverged { step });
        }
        model
            .adagrad_step(&grad, cfg.learning_rate)
            .map_err(|_| TrainError::Diverged { step })?;

        if step % eval_every == 0 || step == cfg.train_steps {
            let (rel, teacher) = validation_ndcg5(&model, ds_val)?;
            let trace = TrainTrace {
                step,
                train_loss,
                val_ndcg5_relevance: rel,
                val_ndcg5_teacher: teacher,
            };
            let metric = trace.selection_metric();
            let improves = match (&best, metric) {
                (None, _) => true,
                (Some((_, _, Some(b))), Some(m)) => m > *b,
                (Some((_, _, None)), Some(_)) => true,
                (Some(_), None) => false,
            };
            if improves {
                best = Some((model.clone(), step, metric));
            }
            traces.push(trace);
        }
    }
    let (best_model, best_step, best_val_ndcg5) = best.unwrap_or((model.clone(), cfg.train_steps, None));
    Ok(TrainOutcome {
        final_model: model,
        best_model,
        best_step,
        best_val_ndcg5,
        traces,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::DistillLoss;

    fn rl(q: &str, features: Vec<Vec<f64>>, rel: Vec<f64>, teacher: Option<Vec<f64>>) -> RankList {
        RankList {
            query_id: q.into(),
            doc_ids: (0..features.len()).map(|i| format!("d{i}")).collect(),
            features: Some(features),
            relevance: Some(rel),
            teacher_scores: teacher,
        }
    }

    #[test]
    fn scoring() {
        let list = rl("q", vec![vec![1.0, 2.0], vec![3.0, -1.0]], vec![1.0, 0.0], None);
        assert_eq!(LinearModel::zeros(2).score(&list).unwrap(), vec![0.0, 0.0]);
        let m = LinearModel {
            weights: vec![1.0, 0.0],
            ..LinearModel::zeros(2)
        };
        assert_eq!(m.score(&list).unwrap(), vec![1.0, 3.0]);
        assert!(matches!(
            LinearModel::zeros(3).score(&list),
            Err(TrainError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn adagrad_examples() {
        let mut m = LinearModel::zeros(1);
        m.adagrad_step(&[0.0, 0.0], 1.0).unwrap();
        assert_eq!(m, LinearModel::zeros(1));

        let mut m = LinearModel::zeros(1);
        m.adagrad_step(&[1.0, 0.0], 1.0).unwrap();
        assert_eq!(m.weights[0], -1.0 / (1.0 + 1e-7));
        let first = m.weights[0];
        m.adagrad_step(&[1.0, 0.0], 1.0).unwrap();
        let second = m.weights[0] - first;
        assert!(second.abs() < first.abs());
        assert!(m.adagrad_accum.iter().all(|&a| a >= 0.0));

        let mut m = LinearModel::zeros(1);
        assert!(matches!(
            m.adagrad_step(&[f64::NAN, 0.0], 1.0),
            Err(TrainError::Diverged { .. })
        ));
        assert_eq!(m, LinearModel::zeros(1));
    }

    fn tiny() -> Dataset {
        Dataset::new(
            "tiny",
            2,
            vec![
                rl("a", vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]], vec![2.0, 0.0, 1.0], Some(vec![3.0, -1.0, 0.5])),
                rl("b", vec![vec![0.2, 0.1], vec![0.9, -0.3]], vec![0.0, 1.0], Some(vec![0.1, 2.0])),
            ],
        )
    }

    #[test]
    fn zero_steps_returns_initial_model() {
        let ds = tiny();
        let cfg = DistillConfig {
            train_steps: 0,
            ..Default::default()
        };
        let out = train(&ds, &ds, &cfg).unwrap();
        assert_eq!(out.final_model, LinearModel::zeros(2));
        assert!(out.traces.is_empty());
    }

    #[test]
    fn traces_are_strictly_increasing_and_runs_repeat() {
        let ds = tiny();
        let cfg = DistillConfig {
            distill_loss: DistillLoss::GumbelNdcg,
            alpha: 0.5,
            transform_on: true,
            train_steps: 45,
            batch_lists: 3,
            eval_every: Some(10),
            seed: 3,
            ..Default::default()
        };
        let a = train(&ds, &ds, &cfg).unwrap();
        let b = train(&ds, &ds, &cfg).unwrap();
        assert_eq!(a, b);
        let steps: Vec<usize> = a.traces.iter().map(|t| t.step).collect();
        assert_eq!(steps, vec![10, 20, 30, 40, 45]);
    }

    #[test]
    fn missing_teacher_scores_are_an_error() {
        let mut ds = tiny();
        ds.lists[1].teacher_scores = None;
        let cfg = DistillConfig {
            distill_loss: DistillLoss::Mse,
            alpha: 0.5,
            train_steps: 1,
            ..Default::default()
        };
        assert!(matches!(train(&ds, &ds, &cfg), Err(TrainError::MissingLabels { .. })));
        let empty = Dataset::new("empty", 2, vec![]);
        assert!(matches!(train(&empty, &ds, &cfg), Err(TrainError::EmptyDataset(_))));
    }
}
