//! IR metrics: NDCG@k and MRR@k, per-query evaluation and ×100 aggregates.
//!
//! Conventions:
//! - gain `2^y − 1`, discount `1/log₂(1 + rank)`;
//! - ranks come from descending score, ties broken by ascending position;
//! - [`evaluate`] orders each query's documents by doc id first, so ties in
//!   run files resolve by doc id string;
//! - queries with no positive label follow an [`EmptyQueryPolicy`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::ranking::argsort_desc;
use crate::types::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricKind {
    Ndcg,
    Mrr,
}

/// How queries without any relevant document enter the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum EmptyQueryPolicy {
    /// Scored 1.
    Perfect,
    /// Scored 0.
    Zero,
    /// Dropped from the mean.
    #[default]
    Ignore,
}

impl fmt::Display for EmptyQueryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EmptyQueryPolicy::Perfect => "perfect",
            EmptyQueryPolicy::Zero => "zero",
            EmptyQueryPolicy::Ignore => "ignore",
        })
    }
}

impl FromStr for EmptyQueryPolicy {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "perfect" => Ok(EmptyQueryPolicy::Perfect),
            "zero" => Ok(EmptyQueryPolicy::Zero),
            "ignore" => Ok(EmptyQueryPolicy::Ignore),
            _ => Err(MetricError::UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("query {0}: MRR needs binary labels; set a binarization threshold for graded labels")]
    GradedLabelsForMrr(String),
    #[error("cutoff must be positive")]
    ZeroCutoff,
    #[error("unknown empty-query policy {0:?}")]
    UnknownPolicy(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    /// `None` is unbounded.
    pub cutoff: Option<usize>,
    pub empty_query_policy: EmptyQueryPolicy,
    /// Labels `≥ threshold` become 1, others 0.
    pub binarize_threshold: Option<f64>,
}

impl MetricSpec {
    pub fn ndcg(cutoff: Option<usize>) -> Self {
        Self {
            kind: MetricKind::Ndcg,
            cutoff,
            empty_query_policy: EmptyQueryPolicy::Ignore,
            binarize_threshold: None,
        }
    }

    pub fn mrr(cutoff: Option<usize>) -> Self {
        Self {
            kind: MetricKind::Mrr,
            ..Self::ndcg(cutoff)
        }
    }

    pub fn with_policy(self, policy: EmptyQueryPolicy) -> Self {
        Self {
            empty_query_policy: policy,
            ..self
        }
    }

    pub fn with_threshold(self, threshold: Option<f64>) -> Self {
        Self {
            binarize_threshold: threshold,
            ..self
        }
    }

    /// Column name such as `NDCG@5` or `MRR`.
    pub fn label(&self) -> String {
        let base = match self.kind {
            MetricKind::Ndcg => "NDCG",
            MetricKind::Mrr => "MRR",
        };
        match self.cutoff {
            Some(k) => format!("{base}@{k}"),
            None => base.to_string(),
        }
    }

    /// The five result-table columns: MRR@10, MRR, NDCG@1, NDCG@5, NDCG.
    /// The threshold binarizes labels for the MRR columns only.
    pub fn standard_columns(policy: EmptyQueryPolicy, mrr_threshold: Option<f64>) -> [MetricSpec; 5] {
        [
            MetricSpec::mrr(Some(10)).with_threshold(mrr_threshold),
            MetricSpec::mrr(None).with_threshold(mrr_threshold),
            MetricSpec::ndcg(Some(1)),
            MetricSpec::ndcg(Some(5)),
            MetricSpec::ndcg(None),
        ]
        .map(|m| m.with_policy(policy))
    }
}

impl FromStr for MetricSpec {
    type Err = MetricError;

    /// Parses `ndcg`, `ndcg@5`, `mrr`, `mrr@10` (case-insensitive).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (name, cutoff) = match lower.split_once('@') {
            Some((name, k)) => {
                let k: usize = k.parse().map_err(|_| MetricError::UnknownMetric(s.into()))?;
                if k == 0 {
                    return Err(MetricError::ZeroCutoff);
                }
                (name.to_string(), Some(k))
            }
            None => (lower.clone(), None),
        };
        match name.as_str() {
            "ndcg" => Ok(MetricSpec::ndcg(cutoff)),
            "mrr" => Ok(MetricSpec::mrr(cutoff)),
            _ => Err(MetricError::UnknownMetric(s.into())),
        }
    }
}

fn dcg(gains: &[f64], order: &[usize], k: usize) -> f64 {
    order
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &i)| gains[i] / ((pos + 2) as f64).log2())
        .sum()
}

/// NDCG@k with caller-supplied gains. Returns 0 when the ideal DCG is not
/// positive.
pub fn ndcg_with_gains(gains: &[f64], scores: &[f64], k: Option<usize>) -> f64 {
    let k = k.unwrap_or(gains.len());
    let mut ideal: Vec<f64> = gains.to_vec();
    ideal.sort_by(|a, b| b.total_cmp(a));
    let identity: Vec<usize> = (0..ideal.len()).collect();
    let idcg = dcg(&ideal, &identity, k);
    if !(idcg > 0.0) {
        return 0.0;
    }
    dcg(gains, &argsort_desc(scores), k) / idcg
}

/// NDCG@k with gain `2^y − 1`; `k = None` is unbounded.
pub fn ndcg_at_k(relevance: &[f64], scores: &[f64], k: Option<usize>) -> f64 {
    let gains: Vec<f64> = relevance.iter().map(|&y| y.exp2() - 1.0).collect();
    ndcg_with_gains(&gains, scores, k)
}

/// Reciprocal rank of the first item with label `> 0`, or 0 when it falls
/// beyond the cutoff.
pub fn mrr_at_k(binary_relevance: &[f64], scores: &[f64], k: Option<usize>) -> f64 {
    let k = k.unwrap_or(scores.len());
    argsort_desc(scores)
        .iter()
        .take(k)
        .position(|&i| binary_relevance[i] > 0.0)
        .map_or(0.0, |pos| 1.0 / (pos + 1) as f64)
}

pub fn binarize(labels: &[f64], threshold: f64) -> Vec<f64> {
    labels
        .iter()
        .map(|&y| if y >= threshold { 1.0 } else { 0.0 })
        .collect()
}

/// Metric value for one query, or `None` when the query has no positive
/// label and the policy drops it.
pub fn query_metric(spec: &MetricSpec, labels: &[f64], scores: &[f64]) -> Option<f64> {
    let binarized;
    let labels = match spec.binarize_threshold {
        Some(t) => {
            binarized = binarize(labels, t);
            &binarized[..]
        }
        None => labels,
    };
    if !labels.iter().any(|&y| y > 0.0) {
        return match spec.empty_query_policy {
            EmptyQueryPolicy::Perfect => Some(1.0),
            EmptyQueryPolicy::Zero => Some(0.0),
            EmptyQueryPolicy::Ignore => None,
        };
    }
    Some(match spec.kind {
        MetricKind::Ndcg => ndcg_at_k(labels, scores, spec.cutoff),
        MetricKind::Mrr => mrr_at_k(labels, scores, spec.cutoff),
    })
}

/// Scored documents per query.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Run {
    pub queries: BTreeMap<String, Vec<(String, f64)>>,
}

impl Run {
    pub fn insert(&mut self, query_id: &str, doc_id: &str, score: f64) {
        self.queries
            .entry(query_id.to_string())
            .or_default()
            .push((doc_id.to_string(), score));
    }

    /// Run from per-list scores aligned with `ds.lists`.
    pub fn from_scored_lists(ds: &Dataset, scores: &[Vec<f64>]) -> Self {
        let mut run = Run::default();
        for (rl, s) in ds.lists.iter().zip(scores) {
            for (d, &v) in rl.doc_ids.iter().zip(s) {
                run.insert(&rl.query_id, d, v);
            }
        }
        run
    }
}

/// Relevance judgments per query and document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Qrels {
    pub queries: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Qrels {
    pub fn insert(&mut self, query_id: &str, doc_id: &str, label: f64) {
        self.queries
            .entry(query_id.to_string())
            .or_default()
            .insert(doc_id.to_string(), label);
    }

    /// Judgments from the relevance labels of `ds`; lists without labels are skipped.
    pub fn from_dataset(ds: &Dataset) -> Self {
        let mut q = Qrels::default();
        for rl in &ds.lists {
            if let Some(rel) = &rl.relevance {
                q.queries.entry(rl.query_id.clone()).or_default();
                for (d, &y) in rl.doc_ids.iter().zip(rel) {
                    q.insert(&rl.query_id, d, y);
                }
            }
        }
        q
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub spec: MetricSpec,
    /// Values for retained queries, in query id order.
    pub per_query: BTreeMap<String, f64>,
    /// `100 × mean(per_query)`; 0 when nothing is retained.
    pub aggregate: f64,
    pub retained_count: usize,
    pub dropped_count: usize,
    /// Run queries absent from the qrels (evaluated as empty queries).
    pub unjudged_queries: Vec<String>,
}

/// Evaluates every run query against `qrels`. Unjudged documents get label 0.
pub fn evaluate(run: &Run, qrels: &Qrels, spec: &MetricSpec) -> Result<EvalReport, MetricError> {
    evaluate_with(run, qrels, spec, Exec::default())
}

pub fn evaluate_with(
    run: &Run,
    qrels: &Qrels,
    spec: &MetricSpec,
    exec: Exec,
) -> Result<EvalReport, MetricError> {
    if spec.cutoff == Some(0) {
        return Err(MetricError::ZeroCutoff);
    }
    let queries: Vec<(&String, &Vec<(String, f64)>)> = run.queries.iter().collect();
    let results = exec.map(&queries, |&(qid, docs)| {
        let judged = qrels.queries.get(qid);
        let mut docs: Vec<&(String, f64)> = docs.iter().collect();
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        let scores: Vec<f64> = docs.iter().map(|d| d.1).collect();
        let labels: Vec<f64> = docs
            .iter()
            .map(|d| judged.and_then(|j| j.get(&d.0)).copied().unwrap_or(0.0))
            .collect();
        if spec.kind == MetricKind::Mrr
            && spec.binarize_threshold.is_none()
            && labels.iter().any(|&y| y != 0.0 && y != 1.0)
        {
            return Err(MetricError::GradedLabelsForMrr(qid.clone()));
        }
        Ok((qid.clone(), judged.is_none(), query_metric(spec, &labels, &scores)))
    });
    let mut report = EvalReport {
        spec: *spec,
        per_query: BTreeMap::new(),
        aggregate: 0.0,
        retained_count: 0,
        dropped_count: 0,
        unjudged_queries: Vec::new(),
    };
    for r in results {
        let (qid, unjudged, value) = r?;
        if unjudged {
            report.unjudged_queries.push(qid.clone());
        }
        match value {
            Some(v) => {
                report.per_query.insert(qid, v);
            }
            None => report.dropped_count += 1,
        }
    }
    report.retained_count = report.per_query.len();
    if report.retained_count > 0 {
        report.aggregate =
            100.0 * report.per_query.values().sum::<f64>() / report.retained_count as f64;
    }
    Ok(report)
}
