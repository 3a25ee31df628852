//! Synthetic ranking data with a known utility.
//!
//! ```text
//! u(x) = Σ_j x_j / √d + 0.6·x_0·x_1           x ~ N(0, I_d)
//! teacher = q·u + (1 − q)·σ_u·ε               ε ~ N(0, 1)
//! ```
//!
//! The top `label_sparsity` fraction of all documents by `u` is relevant,
//! graded 4..1 by quartile of rank among the relevant documents.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DataIoError;
use crate::seed;
use crate::types::{Dataset, RankList};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_queries: usize,
    /// Inclusive list length range.
    pub list_len_range: (usize, usize),
    pub feature_dim: usize,
    pub teacher_quality: f64,
    pub label_sparsity: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_queries: 100,
            list_len_range: (20, 20),
            feature_dim: 256,
            teacher_quality: 0.9,
            label_sparsity: 0.05,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), DataIoError> {
        let bad = |m: String| Err(DataIoError::InvalidSpec(m));
        let (lo, hi) = self.list_len_range;
        if self.n_queries == 0 {
            return bad("n_queries must be positive".into());
        }
        if lo == 0 || lo > hi {
            return bad(format!("list length range {lo}..={hi} is empty or starts at 0"));
        }
        if self.feature_dim < 2 {
            return bad(format!("feature_dim must be at least 2, got {}", self.feature_dim));
        }
        for (name, v) in [
            ("teacher_quality", self.teacher_quality),
            ("label_sparsity", self.label_sparsity),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

const INTERACTION: f64 = 0.6;

/// The fixed ground-truth utility. Needs at least two features.
pub fn utility(x: &[f64]) -> f64 {
    let linear = x.iter().sum::<f64>() / (x.len() as f64).sqrt();
    linear + INTERACTION * x[0] * x[1]
}

/// Standard deviation of [`utility`] under standard normal features; the
/// linear part has unit variance for every dimension.
pub fn utility_std() -> f64 {
    (1.0 + INTERACTION * INTERACTION).sqrt()
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset, DataIoError> {
    spec.validate()?;
    let d = spec.feature_dim;
    let sigma = utility_std();
    let q = spec.teacher_quality;
    let (lo, hi) = spec.list_len_range;
    let mut lists = Vec::with_capacity(spec.n_queries);
    let mut utilities: Vec<Vec<f64>> = Vec::with_capacity(spec.n_queries);
    for qi in 0..spec.n_queries {
        let mut rng = seed::rng(seed::derive_indexed(spec.seed, "synthetic", qi as u64));
        let n = rng.random_range(lo..=hi);
        let features: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let u: Vec<f64> = features.iter().map(|x| utility(x)).collect();
        let teacher = u
            .iter()
            .map(|&ui| {
                let eps: f64 = rng.sample(StandardNormal);
                q * ui + (1.0 - q) * sigma * eps
            })
            .collect();
        lists.push(RankList {
            query_id: format!("q{qi}"),
            doc_ids: (0..n).map(|i| format!("d{i}")).collect(),
            features: Some(features),
            relevance: None,
            teacher_scores: Some(teacher),
        });
        utilities.push(u);
    }

    let mut pooled: Vec<(f64, usize, usize)> = utilities
        .iter()
        .enumerate()
        .flat_map(|(l, u)| u.iter().enumerate().map(move |(i, &v)| (v, l, i)))
        .collect();
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = (spec.label_sparsity * pooled.len() as f64).round() as usize;
    let mut labels: Vec<Vec<f64>> = utilities.iter().map(|u| vec![0.0; u.len()]).collect();
    for (r, &(_, l, i)) in pooled.iter().take(positives).enumerate() {
        labels[l][i] = (4 - 4 * r / positives) as f64;
    }
    for (rl, y) in lists.iter_mut().zip(labels) {
        rl.relevance = Some(y);
    }
    Ok(Dataset::new(format!("synthetic-{}", spec.seed), d, lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_dataset;

    #[test]
    fn deterministic_and_valid() {
        let spec = SyntheticSpec {
            n_queries: 30,
            list_len_range: (5, 12),
            seed: 7,
            ..SyntheticSpec::default()
        };
        let a = generate_synthetic(&spec).unwrap();
        assert_eq!(a, generate_synthetic(&spec).unwrap());
        assert!(validate_dataset(&a).is_empty());
        assert!(a.lists.iter().all(|l| (5..=12).contains(&l.len())));
        let b = generate_synthetic(&SyntheticSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn label_fraction_and_grades() {
        let spec = SyntheticSpec {
            n_queries: 50,
            label_sparsity: 0.1,
            ..SyntheticSpec::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        let labels: Vec<f64> = ds.lists.iter().flat_map(|l| l.relevance.clone().unwrap()).collect();
        assert_eq!(labels.iter().filter(|&&y| y > 0.0).count(), 100);
        for g in 1..=4 {
            assert_eq!(labels.iter().filter(|&&y| y == g as f64).count(), 25);
        }
    }

    #[test]
    fn perfect_teacher_is_the_utility() {
        let spec = SyntheticSpec {
            n_queries: 3,
            teacher_quality: 1.0,
            ..SyntheticSpec::default()
        };
        let ds = generate_synthetic(&spec).unwrap();
        for l in &ds.lists {
            let f = l.features.as_ref().unwrap();
            for (x, t) in f.iter().zip(l.teacher_scores.as_ref().unwrap()) {
                assert_eq!(utility(x), *t);
            }
        }
    }

    #[test]
    fn rejects_degenerate_specs() {
        let base = SyntheticSpec::default();
        for spec in [
            SyntheticSpec { n_queries: 0, ..base.clone() },
            SyntheticSpec { list_len_range: (0, 3), ..base.clone() },
            SyntheticSpec { list_len_range: (4, 3), ..base.clone() },
            SyntheticSpec { feature_dim: 1, ..base.clone() },
            SyntheticSpec { teacher_quality: 1.5, ..base.clone() },
            SyntheticSpec { label_sparsity: -0.1, ..base.clone() },
        ] {
            assert!(matches!(generate_synthetic(&spec), Err(DataIoError::InvalidSpec(_))));
        }
    }
}
