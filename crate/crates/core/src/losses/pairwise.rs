use super::{check_lengths, discount, gain, ideal_dcg, sigmoid, softplus, LossError, LossResult};
use crate::ranking::ranks_desc;

/// RankNet pairwise logistic loss `−Σ_{i≠j} 1[y_i>y_j] ln σ(s_i − s_j)`.
pub fn loss_pair_logistic(labels: &[f64], scores: &[f64]) -> Result<LossResult, LossError> {
    let n = check_lengths(labels, scores)?;
    let mut out = LossResult::zero(n);
    for i in 0..n {
        for j in 0..n {
            if labels[i] > labels[j] {
                let d = scores[i] - scores[j];
                out.value += softplus(-d);
                let g = sigmoid(-d);
                out.gradient[i] -= g;
                out.gradient[j] += g;
            }
        }
    }
    Ok(out)
}

/// Squared error on score differences over ordered pairs,
/// `Σ_{i≠j} ((s_i − s_j) − (y_i − y_j))²`.
///
/// With residuals `r = s − y` this equals `2n Σ (r_i − r̄)²`, and the gradient
/// is `4n (r_i − r̄)`; centering keeps it exact under large translations.
pub fn loss_pair_mse(labels: &[f64], scores: &[f64]) -> Result<LossResult, LossError> {
    let n = check_lengths(labels, scores)?;
    let residual: Vec<f64> = scores.iter().zip(labels).map(|(s, y)| s - y).collect();
    let mean = residual.iter().sum::<f64>() / n as f64;
    let nf = n as f64;
    let mut value = 0.0;
    let gradient = residual
        .iter()
        .map(|r| {
            let c = r - mean;
            value += c * c;
            4.0 * nf * c
        })
        .collect();
    Ok(LossResult {
        value: 2.0 * nf * value,
        gradient,
    })
}

/// NDCG-swap pair weights `Δ_ij = |G_i − G_j| · |D(rank_i) − D(rank_j)| / IDCG`
/// with gain `G = 2^y − 1`, discount `D(r) = 1/log₂(1+r)` and ranks from the
/// current scores (descending, ties by index). Returned row-major `n × n`.
pub fn lambda_weights(labels: &[f64], scores: &[f64]) -> Result<Vec<f64>, LossError> {
    let n = check_lengths(labels, scores)?;
    let idcg = ideal_dcg(labels);
    if !(idcg > 0.0) {
        return Err(LossError::NoRelevantItems);
    }
    let ranks = ranks_desc(scores);
    let gains: Vec<f64> = labels.iter().map(|&y| gain(y)).collect();
    let disc: Vec<f64> = ranks.iter().map(|&r| discount(r as f64)).collect();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            w[i * n + j] = (gains[i] - gains[j]).abs() * (disc[i] - disc[j]).abs() / idcg;
        }
    }
    Ok(w)
}

/// LambdaLoss with caller-supplied pair weights, held constant when
/// differentiating.
pub fn loss_lambda_with_weights(
    labels: &[f64],
    scores: &[f64],
    weights: &[f64],
) -> Result<LossResult, LossError> {
    let n = check_lengths(labels, scores)?;
    if weights.len() != n * n {
        return Err(LossError::InvalidParameter(format!(
            "expected {} pair weights, got {}",
            n * n,
            weights.len()
        )));
    }
    let mut out = LossResult::zero(n);
    for i in 0..n {
        for j in 0..n {
            if labels[i] > labels[j] {
                let w = weights[i * n + j];
                let d = scores[i] - scores[j];
                out.value += w * softplus(-d);
                let g = w * sigmoid(-d);
                out.gradient[i] -= g;
                out.gradient[j] += g;
            }
        }
    }
    Ok(out)
}

/// LambdaLoss `−Σ_{i≠j} 1[y_i>y_j] Δ_ij ln σ(s_i − s_j)`, see [`lambda_weights`].
pub fn loss_lambda(labels: &[f64], scores: &[f64]) -> Result<LossResult, LossError> {
    let w = lambda_weights(labels, scores)?;
    loss_lambda_with_weights(labels, scores, &w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_logistic_examples() {
        let r = loss_pair_logistic(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((r.value - 2f64.ln()).abs() < 1e-15);
        let r = loss_pair_logistic(&[1.0, 1.0], &[0.3, -2.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.gradient, vec![0.0, 0.0]);
    }

    #[test]
    fn pair_logistic_matches_pair_enumeration() {
        let y = [2.0, 1.0, 0.0];
        let s: [f64; 3] = [0.3, -0.1, 0.5];
        // three ordered preference pairs: (0,1), (0,2), (1,2)
        let expected: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| -(1.0 / (1.0 + (-(s[i] - s[j])).exp())).ln())
            .sum();
        let r = loss_pair_logistic(&y, &s).unwrap();
        assert!((r.value - expected).abs() < 1e-14);
    }

    #[test]
    fn pair_mse_examples() {
        assert_eq!(loss_pair_mse(&[1.0, 0.0], &[1.0, 0.0]).unwrap().value, 0.0);
        assert!((loss_pair_mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap().value - 2.0).abs() < 1e-15);
        let a = loss_pair_mse(&[1.0, 0.5, 3.0], &[0.2, 0.9, -1.0]).unwrap();
        let b = loss_pair_mse(&[8.0, 7.5, 10.0], &[0.2, 0.9, -1.0]).unwrap();
        assert!((a.value - b.value).abs() < 1e-9);
    }

    #[test]
    fn pair_mse_equals_ordered_pair_sum() {
        let y = [0.3, 1.7, -0.4, 2.2];
        let s = [1.1, -0.6, 0.25, 0.9];
        let mut brute = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let e: f64 = (s[i] - s[j]) - (y[i] - y[j]);
                    brute += e * e;
                }
            }
        }
        assert!((loss_pair_mse(&y, &s).unwrap().value - brute).abs() < 1e-12);
    }

    #[test]
    fn lambda_two_item_example() {
        let r = loss_lambda(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let delta = 1.0 - 1.0 / 3f64.log2();
        assert!((delta - 0.36907).abs() < 1e-5);
        assert!((r.value - delta * 2f64.ln()).abs() < 1e-14);
        assert!((r.value - 0.25583).abs() < 1e-5);
    }

    #[test]
    fn lambda_degenerate_labels() {
        let r = loss_lambda(&[1.0, 1.0, 1.0], &[0.2, -0.3, 1.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.gradient.iter().all(|&g| g == 0.0));
        assert_eq!(loss_lambda(&[0.0, 0.0], &[0.2, 0.1]), Err(LossError::NoRelevantItems));
    }
}
