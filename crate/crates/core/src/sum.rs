//! Order-fixed reductions.
//!
//! All Monte Carlo reductions go through [`pairwise_sum`] on a vector whose
//! order is fixed by sample index, never by thread scheduling, so results are
//! bit-identical at any level of parallelism.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const BLOCK: usize = 16;

/// Pairwise (cascade) summation. Error grows as O(log n) instead of O(n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= BLOCK {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

pub fn pairwise_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Mean and standard error (unbiased variance) of i.i.d. replicates.
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        let value = pairwise_mean(xs);
        if n < 2 {
            return Self { value, stderr: f64::NAN };
        }
        let dev: Vec<f64> = xs.iter().map(|&x| (x - value) * (x - value)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Self { value, stderr: (var / n as f64).sqrt() }
    }

    /// Difference of two independent estimates.
    pub fn minus(self, other: Estimate) -> Self {
        Self {
            value: self.value - other.value,
            stderr: self.stderr.hypot(other.stderr),
        }
    }

    /// `|value - target| <= k * stderr + slack`.
    pub fn agrees_with(self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr + slack
    }
}

/// Ratio of means `sum(a) / sum(b)` over paired replicates with a
/// delta-method standard error.
pub fn ratio_estimate(num: &[f64], den: &[f64]) -> Estimate {
    assert_eq!(num.len(), den.len());
    let a = pairwise_mean(num);
    let b = pairwise_mean(den);
    let r = a / b;
    let n = num.len();
    if n < 2 {
        return Estimate { value: r, stderr: f64::NAN };
    }
    let resid: Vec<f64> = num.iter().zip(den).map(|(&x, &y)| x - r * y).collect();
    let mean_resid = pairwise_mean(&resid);
    let dev: Vec<f64> = resid.iter().map(|&e| (e - mean_resid).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    Estimate { value: r, stderr: (var / n as f64).sqrt() / b.abs() }
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    if v.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
