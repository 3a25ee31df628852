//! Ordering helpers shared by losses and metrics.

use std::cmp::Ordering;

/// Indices sorted by descending score; ties keep ascending index order.
pub fn argsort_desc(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// 1-based rank of every item under [`argsort_desc`].
pub fn ranks_desc(scores: &[f64]) -> Vec<usize> {
    let mut ranks = vec![0; scores.len()];
    for (pos, &i) in argsort_desc(scores).iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}
