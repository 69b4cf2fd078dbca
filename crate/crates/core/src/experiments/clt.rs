use std::time::Instant;

use rayon::prelude::*;

use super::mean_abs::replicate_exponents;
use super::{sqrt_pi_over_2, CircleRule, ExperimentReport};
use crate::construction::{build_heights, ConstructionParams};
use crate::error::{Error, Result};
use crate::polyeval::{eval_stage_at, CircleGrid, StageModel};
use crate::rng::{streams, CounterRng};
use crate::stats::{calibrate_ks_threshold, ks_distance, rayleigh_cdf, UNIT_COMPLEX_NORMAL_SCALE};
use crate::sum::Estimate;

pub const CALIBRATION_RUNS: usize = 100;
pub const CALIBRATION_QUANTILE: f64 = 0.99;

/// Draws `(omega, z)` pairs, forms `X = P_j(z) - E_Omega P_j(z)` and compares
/// `|X|` with the Rayleigh law of a standard complex Gaussian.
///
/// The gate uses the raw modulus. The variance of `X` at `z` is
/// `(m - 1)(1 - |K(z)|^2)/m`, slightly below one, so the modulus divided by
/// its conditional standard deviation is reported alongside.
pub fn clt_distribution_test(
    params: &ConstructionParams,
    stage: usize,
    n_samples: usize,
    seed: u64,
    grid: &CircleGrid,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if n_samples < 2 {
        return Err(Error::InvalidConfig("need at least 2 samples".into()));
    }
    params.check_stage(stage)?;
    let heights = build_heights(params)?;
    let model = StageModel::new(params, &heights, stage)?;
    let m = model.m as f64;
    let points = CounterRng::new(seed).child(streams::CIRCLE);

    // (|X|, |X| / s(z))
    let samples: Vec<(f64, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let exps = replicate_exponents(params, &heights, seed, streams::OMEGA, i, stage)?;
            let l = points.below_at(i, grid.size());
            let x = eval_stage_at(&exps, grid, l) - model.mean_at(grid, l);
            let k = model.kernel_at(grid, l).norm_sqr();
            let s = ((m - 1.0) * (1.0 - k) / m).max(0.0).sqrt();
            let r = x.norm();
            Ok((r, if s > 0.0 { r / s } else { 0.0 }))
        })
        .collect::<Result<_>>()?;

    let raw: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let standardized: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let sigma = UNIT_COMPLEX_NORMAL_SCALE;
    let cdf = |x: f64| rayleigh_cdf(x, sigma);
    let ks_raw = ks_distance(&raw, cdf);
    let ks_std = ks_distance(&standardized, cdf);
    let threshold = calibrate_ks_threshold(
        n_samples,
        CALIBRATION_RUNS,
        CALIBRATION_QUANTILE,
        sigma,
        CounterRng::new(seed).child(streams::CALIBRATION),
    );
    let mean_abs = Estimate::from_samples(&raw);
    let sq: Vec<f64> = raw.iter().map(|r| r * r).collect();
    let second = Estimate::from_samples(&sq);
    let target_second = model.centered_variance();

    let rule = CircleRule::Sampled { grid: grid.clone(), points: 1 };
    let mut report = ExperimentReport::new("clt", params, seed, Some(&rule), n_samples as u64);
    report
        .push_exact("ks_distance", ks_raw)
        .push_exact("ks_threshold", threshold)
        .push_exact("ks_distance_standardized", ks_std)
        .push("mean_abs", mean_abs)
        .push_exact("rayleigh_mean", sqrt_pi_over_2())
        .push("second_moment", second)
        .push_exact("target_second_moment", target_second)
        .push_exact("stage", stage as f64);
    report.gate(
        "ks_below_calibrated_threshold",
        ks_raw <= threshold,
        format!("KS {ks_raw:.5} vs threshold {threshold:.5} (standardized {ks_std:.5})"),
    );
    report.gate(
        "second_moment_matches_variance",
        second.agrees_with(target_second, 3.0, 0.0),
        format!("{:.6} vs {:.6} +- 3 x {:.2e}", second.value, target_second, second.stderr),
    );
    Ok(report.finish(started))
}
