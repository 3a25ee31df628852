use statrs::distribution::{ContinuousCDF, StudentsT};

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    /// Two-tailed p-value.
    pub p: f64,
    pub significant_at_001: bool,
}

/// Paired two-tailed Student's t-test on `a − b` with `n − 1` degrees of
/// freedom.
///
/// Constant differences have zero variance: a zero difference gives
/// `t = 0, p = 1`; a nonzero one gives `t = ±∞, p = 0`.
pub fn paired_ttest(a: &[f64], b: &[f64]) -> Result<TTest, HarnessError> {
    if a.len() != b.len() {
        return Err(HarnessError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(HarnessError::TooFewPairs(n));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if d.iter().all(|&v| v == d[0]) {
        return Ok(if d[0] == 0.0 {
            TTest { t: 0.0, p: 1.0, significant_at_001: false }
        } else {
            TTest { t: f64::INFINITY.copysign(d[0]), p: 0.0, significant_at_001: true }
        });
    }
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t, p, significant_at_001: p < 0.01 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_vectors() {
        let a = [0.3, 0.5, 0.9];
        let r = paired_ttest(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert!(!r.significant_at_001);
    }

    #[test]
    fn constant_nonzero_difference() {
        let r = paired_ttest(&[1.0, 2.0, 3.0], &[0.5, 1.5, 2.5]).unwrap();
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
        assert!(r.significant_at_001);
    }

    #[test]
    fn swap_negates_t() {
        let a = [0.1, 0.7, 0.4, 0.9, 0.3];
        let b = [0.2, 0.5, 0.1, 0.6, 0.35];
        let x = paired_ttest(&a, &b).unwrap();
        let y = paired_ttest(&b, &a).unwrap();
        assert_eq!(x.t, -y.t);
        assert_eq!(x.p, y.p);
    }

    #[test]
    fn known_value() {
        // d = [1, 2, 3, 4]: mean 2.5, sd √(5/3), t = 2.5 / (sd / 2) ≈ 3.872983
        let r = paired_ttest(&[1.0, 2.0, 3.0, 4.0], &[0.0; 4]).unwrap();
        assert!((r.t - 3.872983346207417).abs() < 1e-12);
        assert!((r.p - 0.030466).abs() < 1e-5);
    }

    #[test]
    fn errors() {
        assert!(matches!(paired_ttest(&[1.0], &[2.0]), Err(HarnessError::TooFewPairs(1))));
        assert!(matches!(
            paired_ttest(&[1.0, 2.0], &[2.0]),
            Err(HarnessError::LengthMismatch { .. })
        ));
    }
}
