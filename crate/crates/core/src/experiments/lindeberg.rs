use std::time::Instant;

use rayon::prelude::*;

use super::mean_abs::replicate_exponents;
use super::{CircleRule, ExperimentReport};
use crate::construction::{build_heights, ConstructionParams};
use crate::error::{Error, Result};
use crate::polyeval::{CircleGrid, StageModel};
use crate::rng::{streams, CounterRng};
use crate::sum::Estimate;

struct Ratio {
    value: Estimate,
    variance: f64,
    cutoff: f64,
    summand_bound: f64,
}

fn ratio(params: &ConstructionParams, stage: usize, eps: f64, n_samples: usize, seed: u64, grid: &CircleGrid) -> Result<Ratio> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::InvalidConfig(format!("epsilon must be positive, got {eps}")));
    }
    if n_samples < 2 {
        return Err(Error::InvalidConfig("need at least 2 samples".into()));
    }
    params.check_stage(stage)?;
    let heights = build_heights(params)?;
    let model = StageModel::new(params, &heights, stage)?;
    let variance = model.centered_variance();
    let cutoff = eps * variance.sqrt();
    let inv_m = 1.0 / model.m as f64;
    let points = CounterRng::new(seed).child(streams::CIRCLE);

    let per_sample: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let exps = replicate_exponents(params, &heights, seed, streams::OMEGA, i, stage)?;
            let l = points.below_at(i, grid.size());
            let kernel = model.kernel_at(grid, l);
            let mut tail = 0.0;
            for (k, &n) in exps.n.iter().enumerate().skip(1) {
                let column = grid.power_at(k as i128 * model.step as i128, l);
                let y2 = (grid.power_at(n as i128, l) - column * kernel).norm_sqr() * inv_m;
                if y2.sqrt() > cutoff {
                    tail += y2;
                }
            }
            Ok(tail / variance)
        })
        .collect::<Result<_>>()?;

    Ok(Ratio {
        value: Estimate::from_samples(&per_sample),
        variance,
        cutoff,
        summand_bound: 2.0 / (model.m as f64).sqrt(),
    })
}

/// Lindeberg ratio `L(eps) = s^{-2} sum_k E |Y_k|^2 1{|Y_k| > eps s}` of the
/// centered summands `Y_k = (z^{n_k} - E z^{n_k}) / sqrt(m)`, averaged over a
/// uniform circle point.
pub fn lindeberg_ratio(
    params: &ConstructionParams,
    stage: usize,
    eps: f64,
    n_samples: usize,
    seed: u64,
    grid: &CircleGrid,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let r = ratio(params, stage, eps, n_samples, seed, grid)?;
    let rule = CircleRule::Sampled { grid: grid.clone(), points: 1 };
    let mut report = ExperimentReport::new("lindeberg", params, seed, Some(&rule), n_samples as u64);
    report
        .push("lindeberg_ratio", r.value)
        .push_exact("epsilon", eps)
        .push_exact("total_variance", r.variance)
        .push_exact("cutoff", r.cutoff)
        .push_exact("summand_bound", r.summand_bound);
    let bounded = r.summand_bound <= r.cutoff;
    report.gate(
        "vanishes_below_summand_bound",
        !bounded || r.value.value == 0.0,
        format!("max |Y_k| <= {:.4}, cutoff {:.4}, L = {:.3e}", r.summand_bound, r.cutoff, r.value.value),
    );
    Ok(report.finish(started))
}

/// `L(eps)` for each `m` in `ladder`, with the stage's `m` replaced.
pub fn lindeberg_ladder(
    base: &ConstructionParams,
    stage: usize,
    ladder: &[usize],
    eps: f64,
    n_samples: usize,
    seed: u64,
    grid: &CircleGrid,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    if ladder.len() < 2 {
        return Err(Error::InvalidConfig("a ladder needs at least two values of m".into()));
    }
    base.check_stage(stage)?;
    let mut values = Vec::with_capacity(ladder.len());
    for &m in ladder {
        let mut p = base.clone();
        p.m[stage - 1] = m;
        p.validate()?;
        values.push((m, ratio(&p, stage, eps, n_samples, seed, grid)?));
    }

    let rule = CircleRule::Sampled { grid: grid.clone(), points: 1 };
    let mut report = ExperimentReport::new("lindeberg", base, seed, Some(&rule), n_samples as u64);
    report.push_exact("epsilon", eps);
    report.push_series("lindeberg_ratio", values.iter().map(|(m, r)| (*m as i64, r.value)));
    report.push_series("cutoff", values.iter().map(|(m, r)| (*m as i64, Estimate::exact(r.cutoff))));

    let monotone = values.windows(2).all(|w| {
        let (a, b) = (w[0].1.value, w[1].1.value);
        b.value <= a.value + 3.0 * a.stderr.hypot(b.stderr)
    });
    report.gate(
        "non_increasing_in_m",
        monotone,
        values.iter().map(|(m, r)| format!("m={m}: {:.4e}", r.value.value)).collect::<Vec<_>>().join(", "),
    );
    let (first, last) = (values[0].1.value.value, values[values.len() - 1].1.value.value);
    report.gate("decays_along_ladder", last < first, format!("{first:.4e} -> {last:.4e}"));
    Ok(report.finish(started))
}
