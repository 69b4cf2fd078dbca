use std::time::Instant;

use rayon::prelude::*;

use super::mean_abs::replicate_exponents;
use super::{push_quantiles, CircleRule, ExperimentReport, MonteCarlo};
use crate::construction::{build_heights, product_degree_bound, ConstructionParams, ExponentSet};
use crate::error::{Error, Result};
use crate::polyeval::{eval_stage_at, eval_stage_polynomial, l1_norm};
use crate::riesz::{integrate_circle, PartialProduct, Power};
use crate::rng::streams;
use crate::sum::{pairwise_mean, pairwise_sum, ratio_estimate, Estimate};

/// Per-replicate `(a_N, f_N)` for `N = 1..=n`: `a_N = integral R_N` and
/// `f_N = integral |P_N|`.
pub(crate) fn partial_l1_profile(
    exps: &[ExponentSet],
    rule: &CircleRule,
    seed: u64,
    stream: u64,
    index: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = exps.len();
    let (mut a, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
    match rule {
        CircleRule::Full(grid) => {
            let mut pp = PartialProduct::empty(grid);
            for e in exps {
                let v = eval_stage_polynomial(e, grid)?;
                f.push(l1_norm(&v, grid)?);
                pp.multiply(&v);
                a.push(integrate_circle(&pp, grid, Power::One)?);
            }
        }
        CircleRule::Sampled { grid, .. } => {
            let pts = rule.points(seed, stream, index);
            let mut r = vec![1.0; pts.len()];
            for e in exps {
                let moduli: Vec<f64> = pts.iter().map(|&l| eval_stage_at(e, grid, l).norm()).collect();
                for (ri, mi) in r.iter_mut().zip(&moduli) {
                    *ri *= mi;
                }
                f.push(pairwise_mean(&moduli));
                a.push(pairwise_mean(&r));
            }
        }
    }
    Ok((a, f))
}

/// Least-squares slope of `ln y` against `x`.
fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `hat I_N = E_omega integral R_N d lambda` for `N = 0..=n_max`.
pub fn decay_experiment(params: &ConstructionParams, n_max: usize, mc: &MonteCarlo) -> Result<ExperimentReport> {
    let started = Instant::now();
    mc.check()?;
    if n_max == 0 || n_max > params.stages {
        return Err(Error::InvalidConfig(format!(
            "N_max must be in 1..={}, got {n_max}",
            params.stages
        )));
    }
    let heights = build_heights(params)?;
    mc.rule.grid().require_exact(product_degree_bound(params, &heights, n_max))?;

    let profiles: Vec<(Vec<f64>, Vec<f64>)> = (0..mc.n_omega as u64)
        .into_par_iter()
        .map(|i| {
            let exps = (1..=n_max)
                .map(|j| replicate_exponents(params, &heights, mc.seed, streams::OMEGA, i, j))
                .collect::<Result<Vec<_>>>()?;
            partial_l1_profile(&exps, &mc.rule, mc.seed, streams::OMEGA, i)
        })
        .collect::<Result<_>>()?;

    let column = |n: usize| -> Vec<f64> { profiles.iter().map(|p| p.0[n - 1]).collect() };
    let factor = |n: usize| -> Vec<f64> { profiles.iter().map(|p| p.1[n - 1]).collect() };
    let mean_l1: Vec<Estimate> = (1..=n_max).map(|n| Estimate::from_samples(&column(n))).collect();

    let mut report = ExperimentReport::new("decay", params, mc.seed, Some(&mc.rule), mc.n_omega as u64);
    report.push_series(
        "mean_partial_l1",
        std::iter::once((0, Estimate::exact(1.0)))
            .chain(mean_l1.iter().enumerate().map(|(i, e)| (i as i64 + 1, *e))),
    );
    report.push_series(
        "stage_factor",
        (1..=n_max).map(|n| (n as i64, Estimate::from_samples(&factor(n)))),
    );
    report.push_series(
        "step_ratio",
        (2..=n_max).map(|n| (n as i64, ratio_estimate(&column(n), &column(n - 1)))),
    );

    if n_max >= 2 {
        // Jackknife over omega replicates for the slope's standard error.
        let xs: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
        let ys: Vec<f64> = mean_l1.iter().map(|e| e.value).collect();
        let slope = log_slope(&xs, &ys);
        let sums: Vec<f64> = (1..=n_max).map(|n| pairwise_sum(&column(n))).collect();
        let k = mc.n_omega as f64;
        let loo: Vec<f64> = (0..mc.n_omega)
            .map(|i| {
                let y: Vec<f64> = sums.iter().enumerate().map(|(n, s)| (s - profiles[i].0[n]) / (k - 1.0)).collect();
                log_slope(&xs, &y)
            })
            .collect();
        let loo_mean = pairwise_mean(&loo);
        let dev: Vec<f64> = loo.iter().map(|v| (v - loo_mean) * (v - loo_mean)).collect();
        let se = ((k - 1.0) / k * pairwise_sum(&dev)).sqrt();
        report.push("log_slope", Estimate { value: slope, stderr: se });
    }
    if matches!(mc.rule, CircleRule::Full(_)) {
        push_quantiles(&mut report, "omega_final", &column(n_max));
    }

    let decreasing = mean_l1.windows(2).all(|w| w[1].value < w[0].value);
    report.gate(
        "strictly_decreasing",
        decreasing,
        mean_l1.iter().map(|e| format!("{:.5}", e.value)).collect::<Vec<_>>().join(" > "),
    );
    Ok(report.finish(started))
}
