use std::time::Instant;

use rayon::prelude::*;

use super::decay::partial_l1_profile;
use super::mean_abs::replicate_exponents;
use super::{CircleRule, ExperimentReport, MonteCarlo};
use crate::construction::{build_heights, draw_stage_spacers, exponents_for_spacers, ConstructionParams, ExponentSet};
use crate::error::{Error, Result};
use crate::polyeval::{eval_stage_at, eval_stage_polynomial};
use crate::rng::{streams, CounterRng};
use crate::sum::{pairwise_mean, Estimate};

/// Independent spacer draws per stage used for the inner means on the
/// right-hand side.
pub const DEFAULT_INNER_DRAWS: usize = 4;

/// Compares `E integral prod_j |P_j|` (joint omega) with
/// `integral prod_j E|P_j|` (stage means estimated from separate draws).
///
/// Each right-hand replicate averages `inner` independent draws per stage at
/// every circle point and multiplies the stage averages. Draws of different
/// stages are independent, so the product is unbiased for the product of
/// means and the two sides agree in expectation exactly when the stages are
/// independent.
pub fn fubini_check(params: &ConstructionParams, n: usize, mc: &MonteCarlo, inner: usize) -> Result<ExperimentReport> {
    let started = Instant::now();
    mc.check()?;
    if n == 0 || n > params.stages {
        return Err(Error::InvalidConfig(format!("N must be in 1..={}, got {n}", params.stages)));
    }
    if inner == 0 {
        return Err(Error::InvalidConfig("need at least one inner draw".into()));
    }
    let heights = build_heights(params)?;

    let lhs: Vec<f64> = (0..mc.n_omega as u64)
        .into_par_iter()
        .map(|i| {
            let exps = (1..=n)
                .map(|j| replicate_exponents(params, &heights, mc.seed, streams::FUBINI_LHS, i, j))
                .collect::<Result<Vec<_>>>()?;
            Ok(*partial_l1_profile(&exps, &mc.rule, mc.seed, streams::FUBINI_LHS, i)?.0.last().unwrap())
        })
        .collect::<Result<_>>()?;

    let rhs_root = CounterRng::new(mc.seed).child(streams::FUBINI_RHS);
    let rhs: Vec<f64> = (0..mc.n_omega as u64)
        .into_par_iter()
        .map(|r| {
            let draws: Vec<Vec<ExponentSet>> = (1..=n)
                .map(|j| {
                    (0..inner as u64)
                        .map(|q| {
                            let s = rhs_root.child(r).child(j as u64).child(q).key();
                            exponents_for_spacers(params, &heights, j, &draw_stage_spacers(params, s, j))
                        })
                        .collect()
                })
                .collect::<Result<_>>()?;
            let stage_mean = |vals: Vec<Vec<f64>>| -> Vec<f64> {
                let len = vals[0].len();
                (0..len).map(|l| vals.iter().map(|v| v[l]).sum::<f64>() / inner as f64).collect()
            };
            let mut product: Vec<f64> = Vec::new();
            match &mc.rule {
                CircleRule::Full(grid) => {
                    for stage in &draws {
                        let moduli = stage
                            .iter()
                            .map(|e| Ok(eval_stage_polynomial(e, grid)?.moduli()))
                            .collect::<Result<Vec<_>>>()?;
                        multiply_into(&mut product, stage_mean(moduli));
                    }
                    Ok(grid.average(&product))
                }
                CircleRule::Sampled { grid, .. } => {
                    let pts = mc.rule.points(mc.seed, streams::FUBINI_RHS, r);
                    for stage in &draws {
                        let moduli = stage
                            .iter()
                            .map(|e| pts.iter().map(|&l| eval_stage_at(e, grid, l).norm()).collect())
                            .collect::<Vec<Vec<f64>>>();
                        multiply_into(&mut product, stage_mean(moduli));
                    }
                    Ok(pairwise_mean(&product))
                }
            }
        })
        .collect::<Result<_>>()?;

    let l = Estimate::from_samples(&lhs);
    let r = Estimate::from_samples(&rhs);
    let diff = l.minus(r);
    let mut report = ExperimentReport::new("fubini", params, mc.seed, Some(&mc.rule), mc.n_omega as u64);
    report
        .push("joint", l)
        .push("product_of_means", r)
        .push("difference", diff)
        .push_exact("stages", n as f64)
        .push_exact("inner_draws", inner as f64);
    report.gate(
        "sides_agree",
        diff.value.abs() <= 3.0 * diff.stderr,
        format!("|{:.6} - {:.6}| vs 3 x {:.2e}", l.value, r.value, diff.stderr),
    );
    Ok(report.finish(started))
}

fn multiply_into(acc: &mut Vec<f64>, factor: Vec<f64>) {
    if acc.is_empty() {
        *acc = factor;
    } else {
        for (a, f) in acc.iter_mut().zip(factor) {
            *a *= f;
        }
    }
}
