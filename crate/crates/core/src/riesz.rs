//! Partial Riesz products `R_N = prod_{j<=N} |P_j|` and the densities
//! `R_N^2 d lambda` whose weak-star limit is the spectral type.
//!
//! Products are accumulated as sums of logarithms with an explicit mask for
//! grid points where some factor vanishes exactly, so neither underflow nor
//! `-inf` arithmetic can leak into the integrals.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::construction::{all_exponents, ConstructionParams, ExponentSet, HeightSequence, OmegaSample};
use crate::error::{Error, Result};
use crate::polyeval::{eval_stage_polynomial, CircleGrid, StageValues};
use crate::sum::{pairwise_sum, pairwise_sum_complex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    One,
    Two,
}

impl Power {
    fn factor(self) -> f64 {
        match self {
            Power::One => 1.0,
            Power::Two => 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialProduct {
    /// Number of stages multiplied in.
    pub stages: usize,
    /// Sum of the exponent spreads of the factors; `R_N^2` has frequencies in
    /// `[-degree, degree]`.
    pub degree: u64,
    pub log_values: Vec<f64>,
    pub zero_mask: Vec<bool>,
}

impl PartialProduct {
    /// `R_0 = 1`.
    pub fn empty(grid: &CircleGrid) -> Self {
        let len = grid.size() as usize;
        Self { stages: 0, degree: 0, log_values: vec![0.0; len], zero_mask: vec![false; len] }
    }

    pub fn multiply(&mut self, factor: &StageValues) {
        assert_eq!(factor.values.len(), self.log_values.len(), "grid mismatch");
        self.log_values
            .par_iter_mut()
            .zip(self.zero_mask.par_iter_mut())
            .zip(factor.values.par_iter())
            .for_each(|((log, zero), v)| {
                let r = v.norm();
                if r == 0.0 {
                    *zero = true;
                } else {
                    *log += r.ln();
                }
            });
        self.stages += 1;
        self.degree += factor.degree;
    }

    pub fn from_factors<'a>(grid: &CircleGrid, factors: impl IntoIterator<Item = &'a StageValues>) -> Self {
        let mut pp = Self::empty(grid);
        for f in factors {
            pp.multiply(f);
        }
        pp
    }

    /// `R_N(z_l)^power`.
    #[inline]
    pub fn value_at(&self, l: usize, power: Power) -> f64 {
        if self.zero_mask[l] {
            0.0
        } else {
            (power.factor() * self.log_values[l]).exp()
        }
    }

    pub fn values(&self, power: Power) -> Vec<f64> {
        (0..self.log_values.len()).into_par_iter().map(|l| self.value_at(l, power)).collect()
    }
}

/// Stage polynomials of `omega` for stages `1..=n` on the grid.
pub fn stage_values(
    params: &ConstructionParams,
    heights: &HeightSequence,
    omega: &OmegaSample,
    n: usize,
    grid: &CircleGrid,
) -> Result<Vec<StageValues>> {
    all_exponents(params, heights, omega, n)?
        .iter()
        .map(|e| eval_stage_polynomial(e, grid))
        .collect()
}

pub fn partial_abs_product(
    params: &ConstructionParams,
    heights: &HeightSequence,
    omega: &OmegaSample,
    n: usize,
    grid: &CircleGrid,
) -> Result<PartialProduct> {
    if n > params.stages {
        return Err(Error::InvalidParams(format!("N = {n} exceeds {} stages", params.stages)));
    }
    let factors = stage_values(params, heights, omega, n, grid)?;
    Ok(PartialProduct::from_factors(grid, &factors))
}

/// `(1/M) sum_l R_N(z_l)^power`. Squared integrals must be alias-free.
pub fn integrate_circle(pp: &PartialProduct, grid: &CircleGrid, power: Power) -> Result<f64> {
    if pp.log_values.len() as u64 != grid.size() {
        return Err(Error::InvalidParams("partial product was built on another grid".into()));
    }
    if power == Power::Two {
        grid.require_exact(pp.degree)?;
    }
    Ok(grid.average(&pp.values(power)))
}

/// `(1/M) sum_l R_N(z_l)^2 prod_j |F_j(z_l)|^2`: the finite form of
/// `mu = R_N^2 d mu_N` used to test the factorisation identity.
pub fn integrate_density_times(
    pp: &PartialProduct,
    extra: &[StageValues],
    grid: &CircleGrid,
) -> Result<f64> {
    let degree = pp.degree + extra.iter().map(|f| f.degree).sum::<u64>();
    grid.require_exact(degree)?;
    let vals: Vec<f64> = (0..pp.log_values.len())
        .into_par_iter()
        .map(|l| {
            extra
                .iter()
                .fold(pp.value_at(l, Power::Two), |acc, f| acc * f.values[l].norm_sqr())
        })
        .collect();
    Ok(grid.average(&vals))
}

/// `hat(mu_N)(n) = (1/M) sum_l R_N(z_l)^2 z_l^{-n}`.
pub fn fourier_coefficient(pp: &PartialProduct, n: i64, grid: &CircleGrid) -> Result<Complex64> {
    if pp.log_values.len() as u64 != grid.size() {
        return Err(Error::InvalidParams("partial product was built on another grid".into()));
    }
    if n.unsigned_abs() >= grid.size() / 2 {
        return Err(Error::GridTooCoarse { size: grid.size(), required: 2 * n.unsigned_abs() + 1 });
    }
    grid.require_exact(pp.degree)?;
    let r = grid.reduce(-(n as i128));
    let terms: Vec<Complex64> = (0..pp.log_values.len())
        .into_par_iter()
        .map(|l| {
            let w = pp.value_at(l, Power::Two);
            if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                grid.angle_point(grid.phase(r, l as u64)) * w
            }
        })
        .collect();
    Ok(pairwise_sum_complex(&terms) / grid.size() as f64)
}

/// Coefficients `hat(mu_N)(n)` for `-n_max <= n <= n_max`.
pub fn fourier_window(pp: &PartialProduct, n_max: i64, grid: &CircleGrid) -> Result<Vec<(i64, Complex64)>> {
    (-n_max..=n_max).map(|n| Ok((n, fourier_coefficient(pp, n, grid)?))).collect()
}

/// Exact `n`-th Fourier coefficient of `prod_j |P_j|^2` computed in
/// coefficient space, with no grid at all.
///
/// The coefficient is the weighted count of difference tuples
/// `d_j = n_{j,a} - n_{j,b}` with `sum_j d_j = n`, each pair weighted `1/m_j`.
/// Stages are processed from the top down, and a partial sum is kept only
/// while the lower stages can still reach the target, so dissociated
/// constructions of any degree stay cheap.
pub fn density_coefficient(stages: &[ExponentSet], n: i64) -> f64 {
    // reach[i] = largest |sum of differences| available from stages[..i].
    let mut reach = Vec::with_capacity(stages.len() + 1);
    reach.push(0i128);
    for s in stages {
        let last = *reach.last().unwrap();
        reach.push(last + s.max_exponent() as i128);
    }
    let target = n as i128;
    let mut states: BTreeMap<i128, f64> = BTreeMap::new();
    states.insert(0, 1.0);
    for (i, s) in stages.iter().enumerate().rev() {
        let below = reach[i];
        let weight = 1.0 / s.len() as f64;
        let exps: Vec<i128> = s.n.iter().map(|&x| x as i128).collect();
        let mut next: BTreeMap<i128, f64> = BTreeMap::new();
        for (&partial, &w) in &states {
            // Need d with |target - partial - d| <= below.
            let (d_lo, d_hi) = (target - partial - below, target - partial + below);
            for &na in &exps {
                // d = na - nb in [d_lo, d_hi]  <=>  nb in [na - d_hi, na - d_lo]
                let lo = exps.partition_point(|&nb| nb < na - d_hi);
                let hi = exps.partition_point(|&nb| nb <= na - d_lo);
                for &nb in &exps[lo..hi] {
                    *next.entry(partial + na - nb).or_insert(0.0) += w * weight;
                }
            }
        }
        states = next;
        if states.is_empty() {
            return 0.0;
        }
    }
    states.get(&target).copied().unwrap_or(0.0)
}

/// `integral R_N^2 d lambda`, exactly, for any degree.
pub fn exact_mass(stages: &[ExponentSet]) -> f64 {
    density_coefficient(stages, 0)
}

/// Grid average of `|values|^power` for a single polynomial.
pub fn integrate_abs(values: &StageValues, grid: &CircleGrid, power: Power) -> Result<f64> {
    if power == Power::Two {
        grid.require_exact(values.degree)?;
    }
    let v: Vec<f64> = values.values.iter().map(|z| z.norm().powf(power.factor())).collect();
    Ok(pairwise_sum(&v) / grid.size() as f64)
}
