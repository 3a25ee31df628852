//! Plackett-Luce permutation probabilities, top-K sampling and the
//! RankDistil loss built on them.

use rand::Rng;

use super::{log_sum_exp, LossError, LossResult};
use crate::seed;

/// Checks that `probs` is a probability vector (non-negative, sums to 1 within 1e-9).
pub fn validate_simplex(probs: &[f64]) -> Result<(), LossError> {
    if probs.is_empty() {
        return Err(LossError::Empty);
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(LossError::InvalidSimplex(format!("entry {p} is negative or not finite")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(LossError::InvalidSimplex(format!("entries sum to {total}")));
    }
    Ok(())
}

fn check_prefix(prefix: &[usize], n: usize) -> Result<(), LossError> {
    if prefix.len() > n {
        return Err(LossError::TopKTooLarge { k: prefix.len(), n });
    }
    let mut seen = vec![false; n];
    for &i in prefix {
        if i >= n || seen[i] {
            return Err(LossError::InvalidPermutation(format!(
                "index {i} out of range or repeated"
            )));
        }
        seen[i] = true;
    }
    Ok(())
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|k| (k as f64).ln()).sum()
}

/// Log-probability of a length-K ranking prefix under Plackett-Luce with
/// student scores over a list of length `L = scores.len()`:
///
/// ```text
/// ln P = −ln((L−K)!) + Σ_{j=1..K} [ s_π(j) − ln Σ_{l≥j} exp(s_π(l)) ]
/// ```
///
/// The denominator at position `j` runs over every item not placed before
/// `j`; unsampled items fill the tail in ascending index order, which leaves
/// the value unchanged because the sum is over a set.
pub fn plackett_luce_log_prob(prefix: &[usize], scores: &[f64]) -> Result<f64, LossError> {
    let n = scores.len();
    if n == 0 {
        return Err(LossError::Empty);
    }
    check_prefix(prefix, n)?;
    let mut remaining = vec![true; n];
    let mut log_p = -ln_factorial(n - prefix.len());
    for &item in prefix {
        let denom = log_sum_exp(
            scores
                .iter()
                .zip(&remaining)
                .filter(|(_, &r)| r)
                .map(|(&s, _)| s),
        );
        log_p += scores[item] - denom;
        remaining[item] = false;
    }
    Ok(log_p)
}

/// Draws `top_k` distinct indices sequentially, each proportional to the
/// remaining probability mass. Once the remaining mass is zero the draw is
/// uniform over the remaining items.
pub fn sample_top_k_permutation_with<R: Rng + ?Sized>(
    probs: &[f64],
    top_k: usize,
    rng: &mut R,
) -> Result<Vec<usize>, LossError> {
    validate_simplex(probs)?;
    let n = probs.len();
    if top_k > n {
        return Err(LossError::TopKTooLarge { k: top_k, n });
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(top_k);
    for _ in 0..top_k {
        let mass: f64 = remaining.iter().map(|&i| probs[i]).sum();
        let pos = if mass > 0.0 {
            let u = rng.random::<f64>() * mass;
            let mut acc = 0.0;
            let mut chosen = None;
            for (pos, &i) in remaining.iter().enumerate() {
                if probs[i] > 0.0 {
                    acc += probs[i];
                    chosen = Some(pos);
                    if u < acc {
                        break;
                    }
                }
            }
            chosen.expect("positive mass implies a positive entry")
        } else {
            rng.random_range(0..remaining.len())
        };
        out.push(remaining.remove(pos));
    }
    Ok(out)
}

/// Seeded form of [`sample_top_k_permutation_with`].
pub fn sample_top_k_permutation(probs: &[f64], top_k: usize, seed: u64) -> Result<Vec<usize>, LossError> {
    sample_top_k_permutation_with(probs, top_k, &mut seed::rng(seed))
}

/// `num_samples` independent top-K permutations from one seeded stream.
pub fn sample_permutations(
    probs: &[f64],
    top_k: usize,
    num_samples: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, LossError> {
    if num_samples == 0 {
        return Err(LossError::InvalidParameter("num_samples must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    (0..num_samples)
        .map(|_| sample_top_k_permutation_with(probs, top_k, &mut rng))
        .collect()
}

/// Mean negative Plackett-Luce log-likelihood of fixed permutation samples.
///
/// Gradient of one sample at item `m` is `Σ_j (p_j(m) − 1[m = π(j)])`, where
/// `p_j` is the student softmax over the items still unplaced at step `j`.
pub fn loss_rankdistil_with_samples(samples: &[Vec<usize>], scores: &[f64]) -> Result<LossResult, LossError> {
    let n = scores.len();
    if n == 0 {
        return Err(LossError::Empty);
    }
    if samples.is_empty() {
        return Err(LossError::InvalidParameter("at least one sample is required".into()));
    }
    let mut out = LossResult::zero(n);
    for prefix in samples {
        out.value -= plackett_luce_log_prob(prefix, scores)?;
        let mut remaining = vec![true; n];
        for &item in prefix {
            let denom = log_sum_exp(
                scores
                    .iter()
                    .zip(&remaining)
                    .filter(|(_, &r)| r)
                    .map(|(&s, _)| s),
            );
            for m in 0..n {
                if remaining[m] {
                    out.gradient[m] += (scores[m] - denom).exp();
                }
            }
            out.gradient[item] -= 1.0;
            remaining[item] = false;
        }
    }
    let k = samples.len() as f64;
    out.value /= k;
    out.gradient.iter_mut().for_each(|g| *g /= k);
    Ok(out)
}

/// RankDistil: expected negative Plackett-Luce log-likelihood of top-K
/// permutations sampled from the teacher distribution `teacher_probs`.
pub fn loss_rankdistil(
    teacher_probs: &[f64],
    scores: &[f64],
    top_k: usize,
    num_samples: usize,
    seed: u64,
) -> Result<LossResult, LossError> {
    if teacher_probs.len() != scores.len() {
        return Err(LossError::LengthMismatch {
            labels: teacher_probs.len(),
            scores: scores.len(),
        });
    }
    let samples = sample_permutations(teacher_probs, top_k, num_samples, seed)?;
    loss_rankdistil_with_samples(&samples, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_scores() {
        let half = 0.5f64.ln();
        assert!((plackett_luce_log_prob(&[0, 1], &[0.0, 0.0]).unwrap() - half).abs() < 1e-15);
        assert!((plackett_luce_log_prob(&[1, 0], &[0.0, 0.0]).unwrap() - half).abs() < 1e-15);
        assert!((plackett_luce_log_prob(&[0], &[0.0, 0.0]).unwrap() - half).abs() < 1e-15);
    }

    #[test]
    fn factorial_term_is_kept() {
        // K=1, L=4: −ln(3!) + ln(1/4)
        let lp = plackett_luce_log_prob(&[2], &[0.0; 4]).unwrap();
        assert!((lp - (-(6f64).ln() + 0.25f64.ln())).abs() < 1e-14);
    }

    #[test]
    fn prefix_errors() {
        assert!(matches!(
            plackett_luce_log_prob(&[0, 0], &[0.0, 0.0]),
            Err(LossError::InvalidPermutation(_))
        ));
        assert!(matches!(
            plackett_luce_log_prob(&[0, 1, 2], &[0.0, 0.0]),
            Err(LossError::TopKTooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_mass_sampling() {
        for seed in 0..50 {
            let p = sample_top_k_permutation(&[1.0, 0.0, 0.0], 2, seed).unwrap();
            assert_eq!(p[0], 0);
            assert!(p[1] == 1 || p[1] == 2);
        }
        assert_eq!(
            sample_top_k_permutation(&[0.2, 0.3, 0.5], 3, 11),
            sample_top_k_permutation(&[0.2, 0.3, 0.5], 3, 11)
        );
    }

    #[test]
    fn sampler_rejects_bad_input() {
        assert!(matches!(
            sample_top_k_permutation(&[0.5, 0.6], 1, 0),
            Err(LossError::InvalidSimplex(_))
        ));
        assert!(matches!(
            sample_top_k_permutation(&[0.5, 0.5], 3, 0),
            Err(LossError::TopKTooLarge { .. })
        ));
    }

    #[test]
    fn rankdistil_examples() {
        let r = loss_rankdistil(&[0.3, 0.7], &[0.0, 0.0], 2, 5, 3).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        let samples = sample_permutations(&[0.1, 0.2, 0.3, 0.4], 2, 1, 5).unwrap();
        let s = [0.3, -0.2, 1.0, 0.1];
        let r = loss_rankdistil_with_samples(&samples, &s).unwrap();
        assert!((r.value + plackett_luce_log_prob(&samples[0], &s).unwrap()).abs() < 1e-15);
    }
}
