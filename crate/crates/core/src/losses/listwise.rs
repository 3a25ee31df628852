use rand_distr::{Distribution, Gumbel};

use super::{check_lengths, gain, ideal_dcg, log_sum_exp, sigmoid, LossError, LossResult};
use crate::seed;

/// Listwise softmax cross-entropy `−Σ_i y_i ln softmax_i(s)`.
///
/// Gradient is `(Σ y)·softmax(s) − y`. Labels are expected to be
/// non-negative; negative labels are accepted and simply follow the formula.
pub fn loss_softmax(labels: &[f64], scores: &[f64]) -> Result<LossResult, LossError> {
    let n = check_lengths(labels, scores)?;
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shifted: Vec<f64> = scores.iter().map(|s| s - m).collect();
    let log_z = log_sum_exp(shifted.iter().copied());
    let total: f64 = labels.iter().sum();
    let mut value = 0.0;
    let mut gradient = Vec::with_capacity(n);
    for (&y, &z) in labels.iter().zip(&shifted) {
        let log_p = z - log_z;
        value -= y * log_p;
        gradient.push(total * log_p.exp() - y);
    }
    Ok(LossResult { value, gradient })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    Gumbel,
    /// No perturbation; one deterministic pass. Used for testing.
    Disabled,
}

/// Gumbel perturbation and rank smoothing parameters for [`loss_gumbel_ndcg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub num_samples: usize,
    pub gumbel_scale: f64,
    pub smoothing_tau: f64,
    pub seed: u64,
    pub mode: NoiseMode,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            num_samples: 8,
            gumbel_scale: 1.0,
            smoothing_tau: 0.1,
            seed: 0,
            mode: NoiseMode::Gumbel,
        }
    }
}

impl NoiseSpec {
    pub fn disabled(smoothing_tau: f64) -> Self {
        Self {
            num_samples: 1,
            smoothing_tau,
            mode: NoiseMode::Disabled,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), LossError> {
        if self.num_samples == 0 {
            return Err(LossError::InvalidParameter("num_samples must be positive".into()));
        }
        if !(self.smoothing_tau > 0.0) {
            return Err(LossError::InvalidParameter(format!(
                "smoothing_tau must be positive, got {}",
                self.smoothing_tau
            )));
        }
        if self.mode == NoiseMode::Gumbel && !(self.gumbel_scale > 0.0) {
            return Err(LossError::InvalidParameter(format!(
                "gumbel_scale must be positive, got {}",
                self.gumbel_scale
            )));
        }
        Ok(())
    }
}

/// One noise vector of length `n` per sample, reproducible from `spec.seed`.
pub fn draw_gumbel_noise(n: usize, spec: &NoiseSpec) -> Result<Vec<Vec<f64>>, LossError> {
    spec.validate()?;
    match spec.mode {
        NoiseMode::Disabled => Ok(vec![vec![0.0; n]]),
        NoiseMode::Gumbel => {
            let dist = Gumbel::new(0.0, spec.gumbel_scale)
                .map_err(|e| LossError::InvalidParameter(e.to_string()))?;
            let mut rng = seed::rng(spec.seed);
            Ok((0..spec.num_samples)
                .map(|_| (0..n).map(|_| dist.sample(&mut rng)).collect())
                .collect())
        }
    }
}

/// Approximate-NDCG loss with a fixed noise realization.
///
/// For each noise vector `g`, scores are perturbed to `s̃ = s + g`, each item
/// gets the smooth rank `r_i = 1 + Σ_{j≠i} σ((s̃_j − s̃_i)/τ)`, and the loss is
/// `−(1/IDCG) Σ_i (2^{y_i} − 1) / log₂(1 + r_i)`. Value and gradient are
/// averaged over the noise vectors.
pub fn loss_gumbel_ndcg_with_noise(
    labels: &[f64],
    scores: &[f64],
    noise: &[Vec<f64>],
    smoothing_tau: f64,
) -> Result<LossResult, LossError> {
    let n = check_lengths(labels, scores)?;
    if noise.is_empty() || noise.iter().any(|g| g.len() != n) {
        return Err(LossError::InvalidParameter(
            "noise must hold at least one vector of the list length".into(),
        ));
    }
    if !(smoothing_tau > 0.0) {
        return Err(LossError::InvalidParameter(format!(
            "smoothing_tau must be positive, got {smoothing_tau}"
        )));
    }
    let idcg = ideal_dcg(labels);
    if !(idcg > 0.0) {
        return Err(LossError::NoRelevantItems);
    }
    let gains: Vec<f64> = labels.iter().map(|&y| gain(y)).collect();
    let ln2 = std::f64::consts::LN_2;
    let mut out = LossResult::zero(n);
    let mut perturbed = vec![0.0; n];
    let mut smooth = vec![0.0; n * n];
    for g in noise {
        for i in 0..n {
            perturbed[i] = scores[i] + g[i];
        }
        let mut rank = vec![1.0; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let a = sigmoid((perturbed[j] - perturbed[i]) / smoothing_tau);
                    smooth[i * n + j] = a;
                    rank[i] += a;
                }
            }
        }
        for i in 0..n {
            let log_r = rank[i].ln_1p();
            out.value -= gains[i] * ln2 / log_r / idcg;
            // ∂value/∂r_i
            let c = gains[i] * ln2 / ((1.0 + rank[i]) * log_r * log_r) / idcg;
            if c == 0.0 {
                continue;
            }
            for j in 0..n {
                if i != j {
                    let a = smooth[i * n + j];
                    let d = c * a * (1.0 - a) / smoothing_tau;
                    out.gradient[j] += d;
                    out.gradient[i] -= d;
                }
            }
        }
    }
    let k = noise.len() as f64;
    out.value /= k;
    out.gradient.iter_mut().for_each(|g| *g /= k);
    Ok(out)
}

/// Gumbel approximate-NDCG loss; noise drawn from `noise.seed`.
pub fn loss_gumbel_ndcg(labels: &[f64], scores: &[f64], noise: &NoiseSpec) -> Result<LossResult, LossError> {
    check_lengths(labels, scores)?;
    let draws = draw_gumbel_noise(scores.len(), noise)?;
    loss_gumbel_ndcg_with_noise(labels, scores, &draws, noise.smoothing_tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        let r = loss_softmax(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(r.gradient, vec![-0.5, 0.5]);
        for c in [-50.0, 0.0, 3.5, 700.0] {
            let r = loss_softmax(&[1.0, 0.0, 0.0, 0.0], &[c; 4]).unwrap();
            assert!((r.value - 4f64.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn softmax_all_zero_labels_is_silent() {
        let r = loss_softmax(&[0.0, 0.0, 0.0], &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.gradient.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gumbel_ndcg_noise_disabled_limits() {
        let spec = NoiseSpec::disabled(0.1);
        let r = loss_gumbel_ndcg(&[1.0, 0.0], &[10.0, -10.0], &spec).unwrap();
        assert!((r.value + 1.0).abs() < 1e-3);
        let r = loss_gumbel_ndcg(&[1.0, 0.0], &[-10.0, 10.0], &spec).unwrap();
        assert!((r.value + 1.0 / 3f64.log2()).abs() < 1e-3);
        assert!((r.value + 0.6309).abs() < 1e-3);
    }

    #[test]
    fn gumbel_ndcg_is_seed_deterministic() {
        let spec = NoiseSpec {
            seed: 99,
            ..NoiseSpec::default()
        };
        let y = [2.0, 0.0, 1.0, 0.0];
        let s = [0.1, 0.4, -0.3, 0.8];
        assert_eq!(loss_gumbel_ndcg(&y, &s, &spec), loss_gumbel_ndcg(&y, &s, &spec));
        let other = NoiseSpec { seed: 100, ..spec };
        assert_ne!(
            loss_gumbel_ndcg(&y, &s, &spec).unwrap().value,
            loss_gumbel_ndcg(&y, &s, &other).unwrap().value
        );
    }

    #[test]
    fn gumbel_ndcg_errors() {
        let spec = NoiseSpec::default();
        assert_eq!(
            loss_gumbel_ndcg(&[0.0, 0.0], &[1.0, 2.0], &spec),
            Err(LossError::NoRelevantItems)
        );
        let bad = NoiseSpec {
            smoothing_tau: 0.0,
            ..spec
        };
        assert!(matches!(
            loss_gumbel_ndcg(&[1.0, 0.0], &[1.0, 2.0], &bad),
            Err(LossError::InvalidParameter(_))
        ));
        let bad = NoiseSpec {
            gumbel_scale: -1.0,
            ..spec
        };
        assert!(loss_gumbel_ndcg(&[1.0, 0.0], &[1.0, 2.0], &bad).is_err());
    }
}
