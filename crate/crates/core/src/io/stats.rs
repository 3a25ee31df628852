use serde::{Deserialize, Serialize};

use super::DataIoError;
use crate::types::Dataset;

/// Summary of pooled scores. Percentiles interpolate linearly between order
/// statistics; `std` is the population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Statistics of a non-empty slice; `None` when empty.
pub fn score_stats(values: &[f64]) -> Option<ScoreStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some(ScoreStats {
        mean,
        std: var.sqrt(),
        min: sorted[0],
        p25: percentile(&sorted, 0.25),
        p50: percentile(&sorted, 0.5),
        p75: percentile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Statistics of teacher scores pooled over every document of every list.
pub fn teacher_score_stats(ds: &Dataset) -> Result<ScoreStats, DataIoError> {
    let pooled: Vec<f64> = ds
        .lists
        .iter()
        .filter_map(|l| l.teacher_scores.as_deref())
        .flatten()
        .copied()
        .collect();
    score_stats(&pooled).ok_or_else(|| DataIoError::NoTeacherScores(ds.name.clone()))
}
