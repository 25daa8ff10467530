//! Small Monte Carlo summaries.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: f64::NAN, se: f64::NAN, n };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, se, n }
    }

    /// `|mean - target| <= z * se`; a zero standard error demands agreement
    /// to rounding.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        let diff = (self.mean - target).abs();
        if self.se > 0.0 {
            diff <= z * self.se
        } else {
            diff <= 1e-14 * target.abs().max(1.0)
        }
    }
}

/// Two-sided normal quantile: `confidence = 0.9973` gives `z ≈ 3`.
pub fn z_for_confidence(confidence: f64) -> f64 {
    let c = confidence.clamp(1e-12, 1.0 - 1e-16);
    Normal::standard().inverse_cdf(0.5 + 0.5 * c)
}

/// The two-sided confidence level of a `z`-sigma band.
pub fn confidence_for_z(z: f64) -> f64 {
    2.0 * Normal::standard().cdf(z) - 1.0
}

/// Sample skewness and excess kurtosis (moment estimators).
pub fn skewness_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_sigma_confidence() {
        let c = confidence_for_z(3.0);
        assert!((c - 0.99730020393674).abs() < 1e-10);
        assert!((z_for_confidence(c) - 3.0).abs() < 1e-8);
    }

    #[test]
    fn mean_and_se() {
        let e = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert!(MeanEstimate::from_samples(&[0.0, 0.0]).agrees_with(0.0, 3.0));
    }

    #[test]
    fn slope_and_quantile() {
        assert!((fit_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(quantile(&[0.0, 10.0], 0.99), 9.9);
    }
}
