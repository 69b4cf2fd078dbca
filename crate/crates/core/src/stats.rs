//! Distribution checks for the CLT experiment.

use rayon::prelude::*;

use crate::rng::CounterRng;
use crate::sum::quantile;

/// CDF of the Rayleigh law with scale `sigma`.
pub fn rayleigh_cdf(x: f64, sigma: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-x * x / (2.0 * sigma * sigma)).exp_m1()
    }
}

/// Scale of the modulus of a standard complex normal (`E|Z|^2 = 1`).
pub const UNIT_COMPLEX_NORMAL_SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Two-sided Kolmogorov-Smirnov distance between the empirical law of
/// `samples` and a continuous CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs())
    })
}

/// Draws `n` Rayleigh variates by inversion from a counter stream.
pub fn rayleigh_sample(rng: CounterRng, n: usize, sigma: f64) -> Vec<f64> {
    (0..n as u64)
        .map(|k| {
            let u = rng.f64_at(k);
            sigma * (-2.0 * (-u).ln_1p()).sqrt()
        })
        .collect()
}

/// `q`-quantile of the KS distance of genuine Rayleigh samples of size `n`
/// over `runs` independent calibration runs.
pub fn calibrate_ks_threshold(n: usize, runs: usize, q: f64, sigma: f64, rng: CounterRng) -> f64 {
    let dists: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let xs = rayleigh_sample(rng.child(r), n, sigma);
            ks_distance(&xs, |x| rayleigh_cdf(x, sigma))
        })
        .collect();
    quantile(&dists, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rayleigh_moments() {
        let xs = rayleigh_sample(CounterRng::new(3), 200_000, UNIT_COMPLEX_NORMAL_SCALE);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        assert!((mean - std::f64::consts::PI.sqrt() / 2.0).abs() < 0.005);
        assert!((m2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn ks_of_exact_quantiles_is_half_step() {
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                (-(1.0 - p).ln()).sqrt()
            })
            .collect();
        let d = ks_distance(&xs, |x| rayleigh_cdf(x, UNIT_COMPLEX_NORMAL_SCALE));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn calibration_is_near_asymptotic_critical_value() {
        // Asymptotic 99% point of sqrt(n) D is about 1.628.
        let n = 10_000;
        let thr = calibrate_ks_threshold(n, 100, 0.99, UNIT_COMPLEX_NORMAL_SCALE, CounterRng::new(9));
        let scaled = thr * (n as f64).sqrt();
        assert!(scaled > 1.2 && scaled < 2.1, "{scaled}");
    }
}
