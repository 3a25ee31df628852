//! Value-and-gradient ranking losses over a single list.
//!
//! Every loss takes a label vector and a score vector of the same length and
//! returns the loss value together with `∂loss/∂s_i`. The label vector is
//! either relevance labels or (transformed) teacher scores; the same code
//! serves both terms of the training objective.
//!
//! | Loss | Family | Translation invariant |
//! |------|--------|-----------------------|
//! | [`loss_mse`] | pointwise | no |
//! | [`loss_rd`] | pointwise, teacher top-K | no |
//! | [`loss_pair_logistic`] | pairwise | yes |
//! | [`loss_pair_mse`] | pairwise | yes |
//! | [`loss_lambda`] | pairwise, NDCG weighted | yes |
//! | [`loss_softmax`] | listwise | yes |
//! | [`loss_gumbel_ndcg`] | listwise, stochastic | yes (fixed noise) |
//! | [`loss_rankdistil`] | listwise, Plackett-Luce | yes (fixed samples) |

mod listwise;
mod pairwise;
mod plackett_luce;
mod pointwise;

pub use listwise::{
    draw_gumbel_noise, loss_gumbel_ndcg, loss_gumbel_ndcg_with_noise, loss_softmax, NoiseMode,
    NoiseSpec,
};
pub use pairwise::{lambda_weights, loss_lambda, loss_lambda_with_weights, loss_pair_logistic, loss_pair_mse};
pub use plackett_luce::{
    loss_rankdistil, loss_rankdistil_with_samples, plackett_luce_log_prob, sample_permutations,
    sample_top_k_permutation, sample_top_k_permutation_with, validate_simplex,
};
pub use pointwise::{loss_mse, loss_rd, teacher_order};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub value: f64,
    pub gradient: Vec<f64>,
}

impl LossResult {
    pub fn zero(n: usize) -> Self {
        Self {
            value: 0.0,
            gradient: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.gradient.iter().all(|g| g.is_finite())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("labels have length {labels}, scores have length {scores}")]
    LengthMismatch { labels: usize, scores: usize },
    #[error("empty list")]
    Empty,
    #[error("ideal DCG is not positive; the list has no relevant items")]
    NoRelevantItems,
    #[error("top_k = {k} exceeds list length {n}")]
    TopKTooLarge { k: usize, n: usize },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid probability vector: {0}")]
    InvalidSimplex(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl LossError {
    /// Errors that only say "this list carries no preference signal for the
    /// loss"; training treats them as a zero contribution.
    pub fn is_no_signal(&self) -> bool {
        matches!(self, LossError::NoRelevantItems)
    }
}

pub(crate) fn check_lengths(labels: &[f64], scores: &[f64]) -> Result<usize, LossError> {
    if labels.len() != scores.len() {
        return Err(LossError::LengthMismatch {
            labels: labels.len(),
            scores: scores.len(),
        });
    }
    if scores.is_empty() {
        return Err(LossError::Empty);
    }
    Ok(scores.len())
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `ln Σ exp(v)` with max subtraction. `-inf` for an empty iterator.
pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// NDCG gain `2^y − 1`.
pub(crate) fn gain(y: f64) -> f64 {
    y.exp2() - 1.0
}

/// `1 / log₂(1 + r)`.
pub(crate) fn discount(rank: f64) -> f64 {
    std::f64::consts::LN_2 / rank.ln_1p()
}

/// DCG of the label vector in its ideal (descending gain) order, no cutoff.
pub(crate) fn ideal_dcg(labels: &[f64]) -> f64 {
    let mut gains: Vec<f64> = labels.iter().map(|&y| gain(y)).collect();
    gains.sort_by(|a, b| b.total_cmp(a));
    gains
        .iter()
        .enumerate()
        .map(|(i, g)| g * discount((i + 1) as f64))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(v.iter().copied()) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((discount(1.0) - 1.0).abs() < 1e-15);
        assert!((ideal_dcg(&[0.0, 1.0]) - 1.0).abs() < 1e-15);
    }
}
