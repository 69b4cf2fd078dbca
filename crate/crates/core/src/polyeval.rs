//! Stage polynomials `P_j(z) = m_j^{-1/2} sum_k z^{n_{j,k}}` and their
//! Omega-means on equispaced circle grids.
//!
//! Exponents are reduced modulo the grid size in integer arithmetic before
//! anything touches floating point, so `z_l^n` is exact up to one rounding of
//! the final angle even for exponents near `2^62`.

use std::f64::consts::TAU;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::construction::{ConstructionParams, ExponentSet, HeightSequence};
use crate::error::{Error, Result};
use crate::sum::pairwise_sum;

/// Largest grid whose points (and root table) are materialised.
pub const ENUMERATION_LIMIT: u64 = 1 << 24;

/// Grid used when only randomly drawn points are evaluated.
pub const SAMPLING_GRID_SIZE: u64 = 1 << 62;

const BLOCK: usize = 1024;

/// `M` equispaced points `z_l = exp(2 pi i l / M)` with weight `1/M` each.
#[derive(Debug, Clone)]
pub struct CircleGrid {
    size: u64,
    roots: Arc<OnceLock<Vec<Complex64>>>,
}

impl PartialEq for CircleGrid {
    fn eq(&self, other: &Self) -> bool {
        self.size == other.size
    }
}

impl CircleGrid {
    pub fn new(size: u64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidParams(format!("grid needs at least 2 points, got {size}")));
        }
        Ok(Self { size, roots: Arc::new(OnceLock::new()) })
    }

    /// Smallest power of two that is at least `4 * degree` (and at least 16).
    pub fn oversampled(degree: u64) -> Result<Self> {
        let target = degree
            .checked_mul(4)
            .and_then(|x| x.max(16).checked_next_power_of_two())
            .ok_or_else(|| Error::Overflow(format!("no power-of-two grid covers degree {degree}")))?;
        Self::new(target)
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn is_enumerable(&self) -> bool {
        self.size <= ENUMERATION_LIMIT
    }

    /// The rectangle rule integrates `|F|^2` exactly when every frequency
    /// difference of `F` is nonzero mod `M`; `M > 2 deg` is the sufficient
    /// condition used throughout.
    pub fn is_exact_for(&self, degree: u64) -> bool {
        degree.checked_mul(2).is_some_and(|d| d < self.size)
    }

    pub fn require_exact(&self, degree: u64) -> Result<()> {
        if self.is_exact_for(degree) {
            Ok(())
        } else {
            Err(Error::GridTooCoarse { size: self.size, required: degree.saturating_mul(2) })
        }
    }

    /// `n mod M` for a signed exponent.
    #[inline]
    pub fn reduce(&self, n: i128) -> u64 {
        if self.size.is_power_of_two() {
            (n as u64) & (self.size - 1)
        } else {
            n.rem_euclid(self.size as i128) as u64
        }
    }

    /// `(n * l) mod M` for an already reduced exponent.
    #[inline]
    pub fn phase(&self, reduced: u64, l: u64) -> u64 {
        if self.size.is_power_of_two() {
            reduced.wrapping_mul(l) & (self.size - 1)
        } else {
            ((reduced as u128 * l as u128) % self.size as u128) as u64
        }
    }

    #[inline]
    pub fn angle_point(&self, phase: u64) -> Complex64 {
        let (s, c) = (TAU * (phase as f64 / self.size as f64)).sin_cos();
        Complex64::new(c, s)
    }

    /// `z_l`.
    pub fn point(&self, l: u64) -> Complex64 {
        self.angle_point(l % self.size)
    }

    /// `z_l^n` with exact exponent reduction.
    #[inline]
    pub fn power_at(&self, n: i128, l: u64) -> Complex64 {
        self.angle_point(self.phase(self.reduce(n), l))
    }

    /// Table of all `M` roots of unity; fails for grids past the enumeration limit.
    pub fn roots(&self) -> Result<&[Complex64]> {
        if !self.is_enumerable() {
            return Err(Error::GridTooLarge { size: self.size, limit: ENUMERATION_LIMIT });
        }
        Ok(self.roots.get_or_init(|| {
            (0..self.size).into_par_iter().map(|l| self.angle_point(l)).collect()
        }))
    }

    /// Grid average of real values, `(1/M) sum_l f_l`.
    pub fn average(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len() as u64, self.size);
        pairwise_sum(values) / self.size as f64
    }
}

/// A polynomial (stage polynomial, mean polynomial or factor) on a full grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StageValues {
    pub stage: usize,
    /// Spread `max - min` of the exponents present.
    pub degree: u64,
    pub values: Vec<Complex64>,
}

impl StageValues {
    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// Evaluates `scale * sum_e z^e` at every grid point. Each point sums its
/// terms in the given order, so the output does not depend on threading.
fn sparse_on_grid(exponents: &[i128], scale: f64, grid: &CircleGrid) -> Result<Vec<Complex64>> {
    let roots = grid.roots()?;
    let size = grid.size;
    let reduced: Vec<u64> = exponents.iter().map(|&e| grid.reduce(e)).collect();
    let mut out = vec![Complex64::new(0.0, 0.0); size as usize];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        let l0 = (b * BLOCK) as u64;
        for &r in &reduced {
            let mut idx = grid.phase(r, l0);
            for acc in chunk.iter_mut() {
                *acc += roots[idx as usize];
                idx += r;
                if idx >= size {
                    idx -= size;
                }
            }
        }
        for acc in chunk.iter_mut() {
            *acc *= scale;
        }
    });
    Ok(out)
}

fn sparse_at(exponents: impl IntoIterator<Item = i128>, scale: f64, grid: &CircleGrid, l: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for e in exponents {
        acc += grid.power_at(e, l);
    }
    acc * scale
}

/// `P_j` on every grid point.
pub fn eval_stage_polynomial(exps: &ExponentSet, grid: &CircleGrid) -> Result<StageValues> {
    let e: Vec<i128> = exps.n.iter().map(|&n| n as i128).collect();
    let scale = 1.0 / (exps.len() as f64).sqrt();
    Ok(StageValues {
        stage: exps.stage,
        degree: exps.max_exponent(),
        values: sparse_on_grid(&e, scale, grid)?,
    })
}

/// `P_j(z_l)` at a single grid point.
pub fn eval_stage_at(exps: &ExponentSet, grid: &CircleGrid, l: u64) -> Complex64 {
    let scale = 1.0 / (exps.len() as f64).sqrt();
    sparse_at(exps.n.iter().map(|&n| n as i128), scale, grid, l)
}

/// Deterministic data of one stage: everything the Omega-mean depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageModel {
    pub stage: usize,
    pub m: usize,
    /// Column step `h_j + t_j`.
    pub step: u64,
    pub spacer_lo: i64,
    pub spacer_hi: i64,
}

impl StageModel {
    pub fn new(params: &ConstructionParams, heights: &HeightSequence, stage: usize) -> Result<Self> {
        params.check_stage(stage)?;
        let t = params.t_at(stage);
        let (spacer_lo, spacer_hi) = params.spacer_support.bounds(t);
        Ok(Self {
            stage,
            m: params.m_at(stage),
            step: heights.at(stage) + t,
            spacer_lo,
            spacer_hi,
        })
    }

    pub fn support_size(&self) -> u64 {
        (self.spacer_hi - self.spacer_lo + 1) as u64
    }

    fn kernel_exponents(&self) -> impl Iterator<Item = i128> {
        (self.spacer_lo..=self.spacer_hi).map(|s| s as i128)
    }

    fn geometric_exponents(&self) -> impl Iterator<Item = i128> + '_ {
        (0..self.m as u64).map(move |p| p as i128 * self.step as i128)
    }

    /// Mean of a single spacer phase: `E z^omega`.
    pub fn kernel_at(&self, grid: &CircleGrid, l: u64) -> Complex64 {
        sparse_at(self.kernel_exponents(), 1.0 / self.support_size() as f64, grid, l)
    }

    /// `m^{-1/2} sum_{k>=1} z^{k (h + t)}`.
    fn shifted_geometric_at(&self, grid: &CircleGrid, l: u64) -> Complex64 {
        let scale = 1.0 / (self.m as f64).sqrt();
        sparse_at(self.geometric_exponents().skip(1), scale, grid, l)
    }

    /// `E_Omega P_j(z_l) = m^{-1/2} (1 + K(z) sum_{k>=1} z^{k(h+t)})`.
    pub fn mean_at(&self, grid: &CircleGrid, l: u64) -> Complex64 {
        let inv = 1.0 / (self.m as f64).sqrt();
        Complex64::new(inv, 0.0) + self.kernel_at(grid, l) * self.shifted_geometric_at(grid, l)
    }

    /// `||E_Omega P_j||_2^2 = (1 + (m - 1)/S) / m`, valid whenever the kernel
    /// spread `2 (hi - lo)` is smaller than the column step.
    pub fn mean_l2_sq(&self) -> f64 {
        let m = self.m as f64;
        (1.0 + (m - 1.0) / self.support_size() as f64) / m
    }

    /// `E|z^{n_k} - E z^{n_k}|^2` summed over `k` and integrated in `z`,
    /// divided by `m`: the total variance `(m - 1)(1 - 1/S)/m`.
    pub fn centered_variance(&self) -> f64 {
        1.0 - self.mean_l2_sq()
    }

    /// Exponent spread of the mean polynomial.
    pub fn mean_degree(&self) -> u64 {
        (self.m as u64 - 1) * self.step + (self.spacer_hi - self.spacer_lo.min(0)) as u64
    }
}

/// The two factors of the factorised Omega-mean: the geometric sum
/// `m^{-1/2} sum_{p<m} z^{p(h+t)}` and the spacer kernel `E z^omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFactors {
    pub geometric: StageValues,
    pub kernel: StageValues,
}

impl MeanFactors {
    /// Pointwise product of the two factors.
    pub fn product(&self) -> StageValues {
        StageValues {
            stage: self.geometric.stage,
            degree: self.geometric.degree + self.kernel.degree,
            values: self
                .geometric
                .values
                .iter()
                .zip(&self.kernel.values)
                .map(|(g, k)| g * k)
                .collect(),
        }
    }
}

pub fn eval_mean_factors(
    params: &ConstructionParams,
    heights: &HeightSequence,
    stage: usize,
    grid: &CircleGrid,
) -> Result<MeanFactors> {
    let model = StageModel::new(params, heights, stage)?;
    let geo: Vec<i128> = model.geometric_exponents().collect();
    let ker: Vec<i128> = model.kernel_exponents().collect();
    Ok(MeanFactors {
        geometric: StageValues {
            stage,
            degree: (model.m as u64 - 1) * model.step,
            values: sparse_on_grid(&geo, 1.0 / (model.m as f64).sqrt(), grid)?,
        },
        kernel: StageValues {
            stage,
            degree: (model.spacer_hi - model.spacer_lo) as u64,
            values: sparse_on_grid(&ker, 1.0 / model.support_size() as f64, grid)?,
        },
    })
}

/// Exact Omega-mean of `P_j` on the grid. The `k = 0` column carries no
/// spacer, so the mean is `m^{-1/2} + K(z) (G(z) - m^{-1/2})` where `G` and
/// `K` are the two [`MeanFactors`].
pub fn eval_mean_polynomial(
    params: &ConstructionParams,
    heights: &HeightSequence,
    stage: usize,
    grid: &CircleGrid,
) -> Result<StageValues> {
    let model = StageModel::new(params, heights, stage)?;
    let f = eval_mean_factors(params, heights, stage, grid)?;
    let inv = 1.0 / (model.m as f64).sqrt();
    let values = f
        .geometric
        .values
        .iter()
        .zip(&f.kernel.values)
        .map(|(&g, &k)| inv + k * (g - inv))
        .collect();
    Ok(StageValues {
        stage,
        degree: model.mean_degree(),
        values,
    })
}

/// Grid `L^2` norm `sqrt((1/M) sum_l |v_l|^2)`. With `exact`, refuses grids
/// too coarse to integrate `|v|^2` without aliasing.
pub fn l2_norm(values: &StageValues, grid: &CircleGrid, exact: bool) -> Result<f64> {
    check_len(values, grid)?;
    if exact {
        grid.require_exact(values.degree)?;
    }
    let sq: Vec<f64> = values.values.iter().map(|v| v.norm_sqr()).collect();
    Ok(grid.average(&sq).sqrt())
}

/// Grid `L^1` norm `(1/M) sum_l |v_l|`.
pub fn l1_norm(values: &StageValues, grid: &CircleGrid) -> Result<f64> {
    check_len(values, grid)?;
    Ok(grid.average(&values.moduli()))
}

fn check_len(values: &StageValues, grid: &CircleGrid) -> Result<()> {
    if values.values.len() as u64 != grid.size() {
        return Err(Error::InvalidParams(format!(
            "values have {} points but the grid has {}",
            values.values.len(),
            grid.size()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{build_heights, SpacerSupport};

    fn set(stage: usize, n: &[u64]) -> ExponentSet {
        ExponentSet { stage, n: n.to_vec() }
    }

    #[test]
    fn grid_quadrature_of_monomials() {
        for size in [6u64, 7, 16] {
            let grid = CircleGrid::new(size).unwrap();
            for n in -20i128..=20 {
                let vals: Vec<Complex64> = (0..size).map(|l| grid.power_at(n, l)).collect();
                let mean = crate::sum::pairwise_sum_complex(&vals) / size as f64;
                let expected = if n.rem_euclid(size as i128) == 0 { 1.0 } else { 0.0 };
                assert!((mean.re - expected).abs() < 1e-13 && mean.im.abs() < 1e-13, "M={size} n={n}");
            }
        }
        assert!(CircleGrid::new(1).is_err());
    }

    #[test]
    fn stage_polynomial_at_one_is_sqrt_m() {
        let grid = CircleGrid::new(64).unwrap();
        let e = set(1, &[0, 9, 17, 30]);
        let v = eval_stage_polynomial(&e, &grid).unwrap();
        assert!((v.values[0].re - 2.0).abs() < 1e-15);
        assert_eq!(v.values[0].im, 0.0);
    }

    #[test]
    fn two_terms_cancel_at_half_turn() {
        let grid = CircleGrid::new(6).unwrap();
        let v = eval_stage_polynomial(&set(1, &[0, 3]), &grid).unwrap();
        assert!(v.values[1].norm() < 1e-15);
    }

    #[test]
    fn point_and_grid_evaluation_agree() {
        let grid = CircleGrid::new(1000).unwrap();
        let e = set(1, &[0, 130, 271, 399, 1_000_000_007]);
        let v = eval_stage_polynomial(&e, &grid).unwrap();
        for l in [0u64, 1, 17, 500, 999] {
            assert!((v.values[l as usize] - eval_stage_at(&e, &grid, l)).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_for_distinct_exponents() {
        let e = set(1, &[0, 5, 11, 12, 40]);
        let grid = CircleGrid::oversampled(e.max_exponent()).unwrap();
        let v = eval_stage_polynomial(&e, &grid).unwrap();
        assert!((l2_norm(&v, &grid, true).unwrap() - 1.0).abs() < 1e-12);
        let coarse = CircleGrid::new(64).unwrap();
        let vc = eval_stage_polynomial(&e, &coarse).unwrap();
        assert!(matches!(l2_norm(&vc, &coarse, true), Err(Error::GridTooCoarse { .. })));
        // Constant polynomial.
        let one = eval_stage_polynomial(&set(1, &[0]), &grid).unwrap();
        assert!((l2_norm(&one, &grid, true).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mean_factor_norms() {
        let p = ConstructionParams {
            m: vec![6],
            t: vec![3],
            h1: 4,
            spacer_support: SpacerSupport::NonNegative,
            stages: 1,
        };
        let h = build_heights(&p).unwrap();
        let grid = CircleGrid::new(256).unwrap();
        let f = eval_mean_factors(&p, &h, 1, &grid).unwrap();
        assert!((l2_norm(&f.kernel, &grid, true).unwrap() - 0.5).abs() < 1e-12);
        assert!((l2_norm(&f.geometric, &grid, true).unwrap() - 1.0).abs() < 1e-12);
        assert!((l2_norm(&f.product(), &grid, true).unwrap() - 0.5).abs() < 1e-12);

        let mean = eval_mean_polynomial(&p, &h, 1, &grid).unwrap();
        assert!((mean.values[0].re - 6f64.sqrt()).abs() < 1e-12);
        let model = StageModel::new(&p, &h, 1).unwrap();
        assert!((l2_norm(&mean, &grid, true).unwrap().powi(2) - model.mean_l2_sq()).abs() < 1e-12);
        for l in [1u64, 77, 200] {
            assert!((mean.values[l as usize] - model.mean_at(&grid, l)).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_kernel_is_real() {
        let p = ConstructionParams {
            m: vec![4],
            t: vec![2],
            h1: 5,
            spacer_support: SpacerSupport::Symmetric,
            stages: 1,
        };
        let h = build_heights(&p).unwrap();
        let grid = CircleGrid::new(128).unwrap();
        let f = eval_mean_factors(&p, &h, 1, &grid).unwrap();
        assert!(f.kernel.values.iter().all(|k| k.im.abs() < 1e-14));
        assert!((l2_norm(&f.kernel, &grid, true).unwrap() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn huge_exponents_reduce_exactly() {
        let grid = CircleGrid::new(1 << 20).unwrap();
        let n = (1u64 << 61) + 12345;
        let direct = grid.power_at(n as i128, 3);
        let reduced = grid.power_at(((n as u128 * 3) % (1 << 20)) as i128, 1);
        assert!((direct - reduced).norm() < 1e-15);
    }
}
