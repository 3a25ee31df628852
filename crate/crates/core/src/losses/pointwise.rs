use super::{check_lengths, sigmoid, softplus, LossError, LossResult};
use crate::ranking::argsort_desc;

/// Squared error `Σ (s_i − y_i)²`.
pub fn loss_mse(labels: &[f64], scores: &[f64]) -> Result<LossResult, LossError> {
    check_lengths(labels, scores)?;
    let mut value = 0.0;
    let gradient = labels
        .iter()
        .zip(scores)
        .map(|(&y, &s)| {
            let r = s - y;
            value += r * r;
            2.0 * r
        })
        .collect();
    Ok(LossResult { value, gradient })
}

/// Teacher-induced ordering: indices by descending teacher score, ties by index.
pub fn teacher_order(teacher_scores: &[f64]) -> Vec<usize> {
    argsort_desc(teacher_scores)
}

/// Sigmoid cross-entropy on the teacher's top-K items, treated as positives:
/// `−Σ_{i≤K} ln σ(s_{π(i)})`. Items outside the top K get zero gradient.
pub fn loss_rd(teacher_order: &[usize], scores: &[f64], top_k: usize) -> Result<LossResult, LossError> {
    let n = scores.len();
    if n == 0 {
        return Err(LossError::Empty);
    }
    if teacher_order.len() != n {
        return Err(LossError::InvalidPermutation(format!(
            "ordering has {} entries for {n} scores",
            teacher_order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in teacher_order {
        if i >= n || seen[i] {
            return Err(LossError::InvalidPermutation(format!(
                "index {i} out of range or repeated"
            )));
        }
        seen[i] = true;
    }
    if top_k > n {
        return Err(LossError::TopKTooLarge { k: top_k, n });
    }
    let mut out = LossResult::zero(n);
    for &i in &teacher_order[..top_k] {
        out.value += softplus(-scores[i]);
        out.gradient[i] = -sigmoid(-scores[i]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        let r = loss_mse(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.gradient, vec![0.0, 0.0]);
        let r = loss_mse(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.gradient, vec![-2.0, 0.0]);
        assert!(matches!(
            loss_mse(&[1.0], &[0.0, 0.0]),
            Err(LossError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn rd_examples() {
        let ln2 = 2f64.ln();
        // teacher prefers item 1; its student score is 0
        let order = teacher_order(&[0.1, 0.9, 0.5]);
        assert_eq!(order, vec![1, 2, 0]);
        let r = loss_rd(&order, &[3.0, 0.0, -2.0], 1).unwrap();
        assert!((r.value - ln2).abs() < 1e-15);
        assert_eq!(r.gradient[0], 0.0);
        assert_eq!(r.gradient[2], 0.0);
        assert!((r.gradient[1] + 0.5).abs() < 1e-15);

        let r = loss_rd(&[0, 1], &[0.0, 0.0], 2).unwrap();
        assert!((r.value - 2.0 * ln2).abs() < 1e-15);
    }

    #[test]
    fn rd_errors() {
        assert!(matches!(loss_rd(&[0, 1], &[0.0, 0.0], 3), Err(LossError::TopKTooLarge { .. })));
        assert!(matches!(loss_rd(&[0, 0], &[0.0, 0.0], 1), Err(LossError::InvalidPermutation(_))));
        assert!(matches!(loss_rd(&[0, 2], &[0.0, 0.0], 1), Err(LossError::InvalidPermutation(_))));
    }
}
