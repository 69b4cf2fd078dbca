use std::time::Instant;

use rayon::prelude::*;

use super::mean_abs::replicate_exponents;
use super::{CircleRule, ExperimentReport, MonteCarlo};
use crate::construction::{build_heights, ConstructionParams};
use crate::error::Result;
use crate::polyeval::{eval_mean_polynomial, eval_stage_at, eval_stage_polynomial, l1_norm, StageModel};
use crate::rng::streams;
use crate::sum::{pairwise_mean, Estimate};

/// Compares `P_j` with its centered version `P_j - E_Omega P_j`:
/// `Delta = E_Omega integral ||P_j| - |P_j - E P_j|| d lambda`.
///
/// The reverse triangle inequality bounds `Delta` by `||E P_j||_1`, hence by
/// `||E P_j||_2`. Both that exact bound and the support bound `1/sqrt(S)` are
/// reported and gated.
pub fn centered_comparison(params: &ConstructionParams, stage: usize, mc: &MonteCarlo) -> Result<ExperimentReport> {
    let started = Instant::now();
    mc.check()?;
    params.check_stage(stage)?;
    let heights = build_heights(params)?;
    let model = StageModel::new(params, &heights, stage)?;

    let mean_on_grid = match &mc.rule {
        CircleRule::Full(grid) => Some(eval_mean_polynomial(params, &heights, stage, grid)?),
        CircleRule::Sampled { .. } => None,
    };

    // (Delta_omega, integral |E P| over the same points)
    let per_omega: Vec<(f64, f64)> = (0..mc.n_omega as u64)
        .into_par_iter()
        .map(|i| {
            let exps = replicate_exponents(params, &heights, mc.seed, streams::OMEGA, i, stage)?;
            match &mc.rule {
                CircleRule::Full(grid) => {
                    let p = eval_stage_polynomial(&exps, grid)?;
                    let ep = mean_on_grid.as_ref().expect("mean evaluated for full grids");
                    let diffs: Vec<f64> = p
                        .values
                        .iter()
                        .zip(&ep.values)
                        .map(|(a, b)| (a.norm() - (a - b).norm()).abs())
                        .collect();
                    Ok((grid.average(&diffs), 0.0))
                }
                CircleRule::Sampled { grid, .. } => {
                    let pts = mc.rule.points(mc.seed, streams::OMEGA, i);
                    let mut diffs = Vec::with_capacity(pts.len());
                    let mut means = Vec::with_capacity(pts.len());
                    for l in pts {
                        let a = eval_stage_at(&exps, grid, l);
                        let b = model.mean_at(grid, l);
                        diffs.push((a.norm() - (a - b).norm()).abs());
                        means.push(b.norm());
                    }
                    Ok((pairwise_mean(&diffs), pairwise_mean(&means)))
                }
            }
        })
        .collect::<Result<_>>()?;

    let deltas: Vec<f64> = per_omega.iter().map(|p| p.0).collect();
    let delta = Estimate::from_samples(&deltas);
    let mean_l1 = match (&mc.rule, &mean_on_grid) {
        (CircleRule::Full(grid), Some(ep)) => Estimate::exact(l1_norm(ep, grid)?),
        _ => Estimate::from_samples(&per_omega.iter().map(|p| p.1).collect::<Vec<_>>()),
    };
    let support_bound = 1.0 / (model.support_size() as f64).sqrt();
    let exact_bound = model.mean_l2_sq().sqrt();

    let mut report = ExperimentReport::new("bound", params, mc.seed, Some(&mc.rule), mc.n_omega as u64);
    report
        .push("delta", delta)
        .push_exact("support_bound", support_bound)
        .push_exact("mean_l2_norm", exact_bound)
        .push("mean_l1_norm", mean_l1)
        .push_exact("support_size", model.support_size() as f64)
        .push_exact("stage", stage as f64);
    report.gate(
        "delta_within_support_bound",
        delta.value <= support_bound + 3.0 * delta.stderr,
        format!("{:.6} <= {:.6} + 3 x {:.2e}", delta.value, support_bound, delta.stderr),
    );
    report.gate(
        "delta_within_mean_norm",
        delta.value <= exact_bound + 3.0 * delta.stderr,
        format!("{:.6} <= {:.6} + 3 x {:.2e}", delta.value, exact_bound, delta.stderr),
    );
    Ok(report.finish(started))
}
