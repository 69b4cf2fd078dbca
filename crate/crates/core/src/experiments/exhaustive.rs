//! Exact expectations over omega for constructions small enough to enumerate.

use crate::construction::{
    build_heights, exponents_for_spacers, ConstructionParams, ExponentSet, HeightSequence, OmegaSample,
};
use crate::error::{Error, Result};
use crate::polyeval::{eval_mean_polynomial, eval_stage_polynomial, l1_norm, CircleGrid};
use crate::riesz::{integrate_circle, PartialProduct, Power};
use crate::sum::pairwise_mean;

/// Largest number of omega configurations enumerated.
pub const EXHAUSTIVE_LIMIT: u64 = 1 << 16;

/// Number of equiprobable omega configurations of stages `1..=stages`.
pub fn omega_count(params: &ConstructionParams, stages: usize) -> Option<u64> {
    (1..=stages).try_fold(1u64, |acc, j| {
        let s = params.spacer_support.size(params.t_at(j));
        let row = s.checked_pow(u32::try_from(params.m_at(j) - 1).ok()?)?;
        acc.checked_mul(row)
    })
}

/// All spacer rows of one stage in lexicographic order.
pub fn stage_rows(params: &ConstructionParams, stage: usize) -> Result<Vec<Vec<i64>>> {
    params.check_stage(stage)?;
    let (lo, hi) = params.spacer_support.bounds(params.t_at(stage));
    let len = params.m_at(stage) - 1;
    let count = omega_count(&stage_only(params, stage), 1).filter(|&c| c <= EXHAUSTIVE_LIMIT);
    if count.is_none() {
        return Err(Error::InvalidConfig(format!("stage {stage} has too many omega rows to enumerate")));
    }
    let mut rows = vec![Vec::with_capacity(len)];
    for _ in 0..len {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                (lo..=hi).map(move |w| {
                    let mut next = r.clone();
                    next.push(w);
                    next
                })
            })
            .collect();
    }
    Ok(rows)
}

fn stage_only(params: &ConstructionParams, stage: usize) -> ConstructionParams {
    ConstructionParams {
        m: vec![params.m_at(stage)],
        t: vec![params.t_at(stage)],
        h1: params.h1,
        spacer_support: params.spacer_support,
        stages: 1,
    }
}

/// Every omega configuration of stages `1..=stages`.
pub fn enumerate_omegas(params: &ConstructionParams, stages: usize) -> Result<Vec<OmegaSample>> {
    match omega_count(params, stages) {
        Some(c) if c <= EXHAUSTIVE_LIMIT => {}
        _ => return Err(Error::InvalidConfig("too many omega configurations to enumerate".into())),
    }
    let mut all: Vec<Vec<Vec<i64>>> = vec![Vec::new()];
    for j in 1..=stages {
        let rows = stage_rows(params, j)?;
        all = all
            .into_iter()
            .flat_map(|prefix| {
                rows.iter().map(move |row| {
                    let mut next = prefix.clone();
                    next.push(row.clone());
                    next
                })
            })
            .collect();
    }
    all.into_iter().map(|s| OmegaSample::from_spacers(params, s)).collect()
}

fn stage_sets(params: &ConstructionParams, heights: &HeightSequence, stage: usize) -> Result<Vec<ExponentSet>> {
    stage_rows(params, stage)?
        .iter()
        .map(|row| exponents_for_spacers(params, heights, stage, row))
        .collect()
}

/// `E_Omega integral |P_j|` on `grid`.
pub fn exhaustive_mean_abs(params: &ConstructionParams, stage: usize, grid: &CircleGrid) -> Result<f64> {
    let heights = build_heights(params)?;
    let vals = stage_sets(params, &heights, stage)?
        .iter()
        .map(|e| l1_norm(&eval_stage_polynomial(e, grid)?, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&vals))
}

/// `E_Omega integral ||P_j| - |P_j - E P_j||` on `grid`.
pub fn exhaustive_centered_delta(params: &ConstructionParams, stage: usize, grid: &CircleGrid) -> Result<f64> {
    let heights = build_heights(params)?;
    let ep = eval_mean_polynomial(params, &heights, stage, grid)?;
    let vals = stage_sets(params, &heights, stage)?
        .iter()
        .map(|e| {
            let p = eval_stage_polynomial(e, grid)?;
            let d: Vec<f64> = p
                .values
                .iter()
                .zip(&ep.values)
                .map(|(a, b)| (a.norm() - (a - b).norm()).abs())
                .collect();
            Ok(grid.average(&d))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&vals))
}

/// `E_Omega integral R_n` on `grid`.
pub fn exhaustive_partial_l1(params: &ConstructionParams, n: usize, grid: &CircleGrid) -> Result<f64> {
    let heights = build_heights(params)?;
    let vals = enumerate_omegas(params, n)?
        .iter()
        .map(|omega| {
            let pp = crate::riesz::partial_abs_product(params, &heights, omega, n, grid)?;
            integrate_circle(&pp, grid, Power::One)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_mean(&vals))
}

/// `integral prod_{j<=n} E_Omega |P_j|` on `grid`.
pub fn exhaustive_product_of_means(params: &ConstructionParams, n: usize, grid: &CircleGrid) -> Result<f64> {
    let heights = build_heights(params)?;
    let mut product = PartialProduct::empty(grid);
    for j in 1..=n {
        let sets = stage_sets(params, &heights, j)?;
        let moduli = sets
            .iter()
            .map(|e| Ok(eval_stage_polynomial(e, grid)?.moduli()))
            .collect::<Result<Vec<_>>>()?;
        let len = grid.size() as usize;
        let mean: Vec<num_complex::Complex64> = (0..len)
            .map(|l| {
                let col: Vec<f64> = moduli.iter().map(|m| m[l]).collect();
                num_complex::Complex64::new(pairwise_mean(&col), 0.0)
            })
            .collect();
        product.multiply(&crate::polyeval::StageValues { stage: j, degree: 0, values: mean });
    }
    integrate_circle(&product, grid, Power::One)
}
