//! Teacher-score transformation and the weighted training objective
//! `α·l_rel(y, s) + (1 − α)·l_distill(yᵗ, s)`.

use thiserror::Error;

use crate::losses::{self, LossError, LossResult, NoiseMode, NoiseSpec};
use crate::types::{DistillConfig, DistillLoss, RelevanceLoss};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("temperature must be positive, got {0}")]
    BadTemperature(f64),
    #[error("teacher score {0} is not finite")]
    NonFiniteScore(f64),
    #[error("alpha must lie in [0, 1], got {0}")]
    AlphaOutOfRange(f64),
    #[error("{0} labels are required for alpha = {1}")]
    MissingLabels(&'static str, f64),
    #[error("alpha = {0} < 1 but no distillation loss is configured")]
    NoDistillLoss(f64),
    #[error("{term} loss: {source}")]
    Loss {
        term: &'static str,
        #[source]
        source: LossError,
    },
}

/// Softmax-with-temperature teacher transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSpec {
    pub enabled: bool,
    pub temperature: f64,
}

impl TransformSpec {
    pub const OFF: TransformSpec = TransformSpec {
        enabled: false,
        temperature: 1.0,
    };

    pub fn softmax(temperature: f64) -> Self {
        Self {
            enabled: true,
            temperature,
        }
    }
}

/// Maps one list's teacher scores to `softmax(t / T)` when enabled, identity
/// otherwise. The transform is per list and preserves order.
pub fn transform_teacher_scores(
    teacher_scores: &[f64],
    spec: TransformSpec,
) -> Result<Vec<f64>, ObjectiveError> {
    if let Some(&bad) = teacher_scores.iter().find(|t| !t.is_finite()) {
        return Err(ObjectiveError::NonFiniteScore(bad));
    }
    if !spec.enabled {
        return Ok(teacher_scores.to_vec());
    }
    if !(spec.temperature > 0.0) {
        return Err(ObjectiveError::BadTemperature(spec.temperature));
    }
    let max = teacher_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = teacher_scores
        .iter()
        .map(|t| ((t - max) / spec.temperature).exp())
        .collect();
    let total: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / total).collect())
}

/// Loss-specific knobs that are not part of the label/score pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    pub top_k: usize,
    pub rankdistil_samples: usize,
    /// Gumbel noise for GumbelNDCG; its seed is replaced by [`LossParams::seed`].
    pub noise: NoiseSpec,
    /// Seed for stochastic losses on this call.
    pub seed: u64,
}

impl Default for LossParams {
    fn default() -> Self {
        Self {
            top_k: 5,
            rankdistil_samples: 8,
            noise: NoiseSpec::default(),
            seed: 0,
        }
    }
}

impl LossParams {
    pub fn from_config(cfg: &DistillConfig) -> Self {
        Self {
            top_k: cfg.top_k,
            rankdistil_samples: cfg.num_permutation_samples,
            noise: NoiseSpec {
                num_samples: cfg.gumbel_samples,
                gumbel_scale: cfg.gumbel_scale,
                smoothing_tau: cfg.smoothing_tau,
                seed: cfg.seed,
                mode: NoiseMode::Gumbel,
            },
            seed: cfg.seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Evaluates one loss from the family on a label vector.
///
/// RD and RankDistil use at most `min(top_k, n)` teacher positions.
pub fn apply_loss(
    loss: DistillLoss,
    labels: &[f64],
    scores: &[f64],
    params: &LossParams,
) -> Result<LossResult, LossError> {
    let k = params.top_k.min(scores.len());
    match loss {
        DistillLoss::None => Ok(LossResult::zero(scores.len())),
        DistillLoss::Mse => losses::loss_mse(labels, scores),
        DistillLoss::PairLog => losses::loss_pair_logistic(labels, scores),
        DistillLoss::PairMse => losses::loss_pair_mse(labels, scores),
        DistillLoss::Softmax => losses::loss_softmax(labels, scores),
        DistillLoss::LambdaLoss => losses::loss_lambda(labels, scores),
        DistillLoss::GumbelNdcg => {
            let noise = NoiseSpec {
                seed: params.seed,
                ..params.noise
            };
            losses::loss_gumbel_ndcg(labels, scores, &noise)
        }
        DistillLoss::Rd => {
            if labels.len() != scores.len() {
                return Err(LossError::LengthMismatch {
                    labels: labels.len(),
                    scores: scores.len(),
                });
            }
            losses::loss_rd(&losses::teacher_order(labels), scores, k)
        }
        DistillLoss::RankDistil => {
            losses::loss_rankdistil(labels, scores, k, params.rankdistil_samples, params.seed)
        }
    }
}

/// `α·l_rel(y, s) + (1 − α)·l_distill(yᵗ, s)` and its score gradient.
///
/// A term with zero weight is skipped entirely, so its labels may be absent.
/// A list without relevant items for an NDCG-based term contributes zero for
/// that term.
pub fn combined_loss(
    relevance: Option<&[f64]>,
    teacher: Option<&[f64]>,
    scores: &[f64],
    alpha: f64,
    rel_loss: RelevanceLoss,
    distill_loss: DistillLoss,
    params: &LossParams,
) -> Result<LossResult, ObjectiveError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(ObjectiveError::AlphaOutOfRange(alpha));
    }
    let n = scores.len();
    let mut out = LossResult::zero(n);
    let mut add = |term: &'static str, weight: f64, result: Result<LossResult, LossError>| {
        match result {
            Ok(r) => {
                out.value += weight * r.value;
                for (o, g) in out.gradient.iter_mut().zip(r.gradient) {
                    *o += weight * g;
                }
                Ok(())
            }
            Err(e) if e.is_no_signal() => Ok(()),
            Err(source) => Err(ObjectiveError::Loss { term, source }),
        }
    };
    if alpha > 0.0 {
        let y = relevance.ok_or(ObjectiveError::MissingLabels("relevance", alpha))?;
        add("relevance", alpha, apply_loss(rel_loss.into(), y, scores, params))?;
    }
    if alpha < 1.0 {
        if distill_loss == DistillLoss::None {
            return Err(ObjectiveError::NoDistillLoss(alpha));
        }
        let yt = teacher.ok_or(ObjectiveError::MissingLabels("teacher", alpha))?;
        add("distillation", 1.0 - alpha, apply_loss(distill_loss, yt, scores, params))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn transform_examples() {
        let on = TransformSpec::softmax(1.0);
        assert!(close(
            &transform_teacher_scores(&[0.0, 0.0, 0.0], on).unwrap(),
            &[1.0 / 3.0; 3],
            1e-15
        ));
        assert!(close(
            &transform_teacher_scores(&[2f64.ln(), 0.0], on).unwrap(),
            &[2.0 / 3.0, 1.0 / 3.0],
            1e-15
        ));
        let hot = transform_teacher_scores(&[1.0, 0.0], TransformSpec::softmax(10.0)).unwrap();
        assert!(close(&hot, &[0.52498, 0.47502], 1e-5));
        let off = transform_teacher_scores(&[-3.0, 84.36], TransformSpec::OFF).unwrap();
        assert_eq!(off, vec![-3.0, 84.36]);
    }

    #[test]
    fn transform_errors() {
        assert!(matches!(
            transform_teacher_scores(&[f64::NAN], TransformSpec::softmax(1.0)),
            Err(ObjectiveError::NonFiniteScore(_))
        ));
        assert!(matches!(
            transform_teacher_scores(&[1.0], TransformSpec::softmax(0.0)),
            Err(ObjectiveError::BadTemperature(_))
        ));
    }

    #[test]
    fn degenerate_weights() {
        let y = [1.0, 0.0, 2.0];
        let yt = [0.5, -1.0, 3.0];
        let s = [0.2, 0.1, -0.4];
        let p = LossParams::default();
        let rel = losses::loss_softmax(&y, &s).unwrap();
        let only_rel =
            combined_loss(Some(&y), None, &s, 1.0, RelevanceLoss::Softmax, DistillLoss::Mse, &p).unwrap();
        assert_eq!(only_rel, rel);
        let dis = losses::loss_mse(&yt, &s).unwrap();
        let only_dis =
            combined_loss(None, Some(&yt), &s, 0.0, RelevanceLoss::Softmax, DistillLoss::Mse, &p).unwrap();
        assert_eq!(only_dis, dis);
        let half =
            combined_loss(Some(&y), Some(&yt), &s, 0.5, RelevanceLoss::Softmax, DistillLoss::Mse, &p)
                .unwrap();
        assert!((half.value - 0.5 * (rel.value + dis.value)).abs() < 1e-12);
    }

    #[test]
    fn missing_labels_and_bad_alpha() {
        let s = [0.0, 1.0];
        let p = LossParams::default();
        assert!(matches!(
            combined_loss(None, Some(&[1.0, 0.0]), &s, 0.5, RelevanceLoss::Softmax, DistillLoss::Mse, &p),
            Err(ObjectiveError::MissingLabels("relevance", _))
        ));
        assert!(matches!(
            combined_loss(Some(&[1.0, 0.0]), None, &s, 0.5, RelevanceLoss::Softmax, DistillLoss::Mse, &p),
            Err(ObjectiveError::MissingLabels("teacher", _))
        ));
        assert!(matches!(
            combined_loss(Some(&[1.0, 0.0]), None, &s, 1.2, RelevanceLoss::Softmax, DistillLoss::Mse, &p),
            Err(ObjectiveError::AlphaOutOfRange(_))
        ));
        assert!(matches!(
            combined_loss(Some(&[1.0, 0.0]), Some(&[1.0, 0.0]), &s, 0.5, RelevanceLoss::Softmax, DistillLoss::None, &p),
            Err(ObjectiveError::NoDistillLoss(_))
        ));
    }

    #[test]
    fn lists_without_relevant_items_contribute_nothing() {
        let p = LossParams::default();
        let r = combined_loss(
            Some(&[0.0, 0.0]),
            Some(&[0.7, 0.3]),
            &[0.4, 0.1],
            0.5,
            RelevanceLoss::LambdaLoss,
            DistillLoss::Softmax,
            &p,
        )
        .unwrap();
        let d = losses::loss_softmax(&[0.7, 0.3], &[0.4, 0.1]).unwrap();
        assert!((r.value - 0.5 * d.value).abs() < 1e-15);
    }

    #[test]
    fn rankdistil_requires_a_distribution() {
        let p = LossParams::default();
        let err = apply_loss(DistillLoss::RankDistil, &[3.0, -1.0], &[0.0, 0.0], &p).unwrap_err();
        assert!(matches!(err, LossError::InvalidSimplex(_)));
    }
}
