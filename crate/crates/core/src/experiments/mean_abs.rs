use std::time::Instant;

use rayon::prelude::*;

use super::{push_quantiles, sqrt_pi_over_2, CircleRule, ExperimentReport, MonteCarlo};
use crate::construction::{build_heights, ConstructionParams, ExponentSet, HeightSequence};
use crate::error::Result;
use crate::polyeval::{eval_stage_at, eval_stage_polynomial, l1_norm};
use crate::rng::streams;
use crate::sum::{pairwise_mean, Estimate};

/// Stage `j` exponents of the `index`-th replicate drawn from `stream`.
pub(crate) fn replicate_exponents(
    params: &ConstructionParams,
    heights: &HeightSequence,
    seed: u64,
    stream: u64,
    index: u64,
    stage: usize,
) -> Result<ExponentSet> {
    let s = crate::construction::replicate_seed(seed, stream, index);
    let spacers = crate::construction::draw_stage_spacers(params, s, stage);
    crate::construction::exponents_for_spacers(params, heights, stage, &spacers)
}

/// `integral |P_j|` for one replicate under `rule`.
pub(crate) fn stage_l1(exps: &ExponentSet, rule: &CircleRule, seed: u64, stream: u64, index: u64) -> Result<f64> {
    match rule {
        CircleRule::Full(grid) => l1_norm(&eval_stage_polynomial(exps, grid)?, grid),
        CircleRule::Sampled { grid, .. } => {
            let vals: Vec<f64> = rule
                .points(seed, stream, index)
                .into_iter()
                .map(|l| eval_stage_at(exps, grid, l).norm())
                .collect();
            Ok(pairwise_mean(&vals))
        }
    }
}

/// Monte Carlo estimate of `E_Omega integral |P_j| d lambda`.
pub fn estimate_mean_abs(params: &ConstructionParams, stage: usize, mc: &MonteCarlo) -> Result<ExperimentReport> {
    let started = Instant::now();
    mc.check()?;
    params.check_stage(stage)?;
    let heights = build_heights(params)?;

    let per_omega: Vec<f64> = (0..mc.n_omega as u64)
        .into_par_iter()
        .map(|i| {
            let exps = replicate_exponents(params, &heights, mc.seed, streams::OMEGA, i, stage)?;
            stage_l1(&exps, &mc.rule, mc.seed, streams::OMEGA, i)
        })
        .collect::<Result<_>>()?;

    let est = Estimate::from_samples(&per_omega);
    let limit = sqrt_pi_over_2();
    let deviation = est.minus(Estimate::exact(limit));
    let mut report = ExperimentReport::new("mean-abs", params, mc.seed, Some(&mc.rule), mc.n_omega as u64);
    report
        .push("mean_abs", est)
        .push_exact("limit", limit)
        .push("deviation", deviation)
        .push_exact("stage", stage as f64);
    if matches!(mc.rule, CircleRule::Full(_)) {
        push_quantiles(&mut report, "omega", &per_omega);
    }
    report.gate(
        "within_3_stderr_of_limit",
        deviation.value.abs() <= 3.0 * est.stderr,
        format!("|{:.6} - {:.6}| vs 3 x {:.2e}", est.value, limit, est.stderr),
    );
    Ok(report.finish(started))
}
