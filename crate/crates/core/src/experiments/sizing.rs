//! Choosing a circle rule for `L^1` integrals.
//!
//! `|P|` is not a trigonometric polynomial, so no finite grid integrates it
//! exactly. Grids are doubled until a probe integral moves by less than
//! [`QUADRATURE_TOLERANCE`]; past [`FULL_GRID_AUTO_LIMIT`] points the rule
//! switches to sampling the fine grid, which is unbiased at any degree.

use serde::{Deserialize, Serialize};

use super::{CircleRule, QUADRATURE_TOLERANCE};
use crate::construction::{
    build_heights, draw_stage_spacers, exponents_for_spacers, replicate_seed, stage_degree_bound,
    ConstructionParams,
};
use crate::error::{Error, Result};
use crate::polyeval::{eval_stage_polynomial, CircleGrid, ENUMERATION_LIMIT, SAMPLING_GRID_SIZE};
use crate::riesz::{integrate_circle, PartialProduct, Power};
use crate::rng::streams;

/// Largest full grid the automatic rule will enumerate.
pub const FULL_GRID_AUTO_LIMIT: u64 = 1 << 22;

/// Circle points per omega replicate when sampling.
pub const DEFAULT_Z_POINTS: u64 = 32;

/// User-facing grid choice: `"auto"` or an explicit size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub enum GridSpec {
    #[default]
    Auto,
    Size(u64),
}

/// JSON form of [`GridSpec`]: the string `"auto"` or a bare integer.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GridRepr {
    Size(u64),
    Text(String),
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;

    fn try_from(r: GridRepr) -> Result<Self> {
        match r {
            GridRepr::Size(n) => Ok(GridSpec::Size(n)),
            GridRepr::Text(s) => s.parse(),
        }
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        match g {
            GridSpec::Auto => GridRepr::Text("auto".into()),
            GridSpec::Size(n) => GridRepr::Size(n),
        }
    }
}

impl std::str::FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GridSpec::Auto);
        }
        s.parse::<u64>()
            .map(GridSpec::Size)
            .map_err(|_| Error::InvalidConfig(format!("grid must be `auto` or a size, got `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridChoice {
    pub rule: CircleRule,
    /// Last change of the probe integral when the grid was doubled.
    pub doubling_delta: Option<f64>,
}

impl GridChoice {
    /// Explicit grid: enumerated when small enough, sampled otherwise.
    pub fn explicit(size: u64, z_points: Option<u64>) -> Result<Self> {
        let grid = CircleGrid::new(size)?;
        let rule = match z_points {
            Some(points) => CircleRule::Sampled { grid, points },
            None if size <= ENUMERATION_LIMIT => CircleRule::Full(grid),
            None => CircleRule::Sampled { grid, points: DEFAULT_Z_POINTS },
        };
        Ok(Self { rule, doubling_delta: None })
    }

    pub fn sampled(z_points: Option<u64>) -> Result<Self> {
        Ok(Self {
            rule: CircleRule::Sampled {
                grid: CircleGrid::new(SAMPLING_GRID_SIZE)?,
                points: z_points.unwrap_or(DEFAULT_Z_POINTS),
            },
            doubling_delta: None,
        })
    }
}

/// Rule for `integral prod_{j in stages} |P_j|`, probed on one omega draw.
pub fn auto_rule_l1(params: &ConstructionParams, stages: &[usize], seed: u64) -> Result<GridChoice> {
    let heights = build_heights(params)?;
    for &j in stages {
        params.check_stage(j)?;
    }
    let degree: u64 = stages.iter().map(|&j| stage_degree_bound(params, &heights, j)).sum();
    let start = CircleGrid::oversampled(degree)?;
    if start.size() > FULL_GRID_AUTO_LIMIT {
        return GridChoice::sampled(None);
    }
    let probe_seed = replicate_seed(seed, streams::PROBE, 0);
    let exps = stages
        .iter()
        .map(|&j| exponents_for_spacers(params, &heights, j, &draw_stage_spacers(params, probe_seed, j)))
        .collect::<Result<Vec<_>>>()?;
    let probe = |grid: &CircleGrid| -> Result<f64> {
        let mut pp = PartialProduct::empty(grid);
        for e in &exps {
            pp.multiply(&eval_stage_polynomial(e, grid)?);
        }
        integrate_circle(&pp, grid, Power::One)
    };

    let mut grid = start;
    let mut current = probe(&grid)?;
    while grid.size() * 2 <= FULL_GRID_AUTO_LIMIT {
        let finer = CircleGrid::new(grid.size() * 2)?;
        let next = probe(&finer)?;
        let delta = (next - current).abs();
        if delta < QUADRATURE_TOLERANCE {
            return Ok(GridChoice { rule: CircleRule::Full(grid), doubling_delta: Some(delta) });
        }
        grid = finer;
        current = next;
    }
    GridChoice::sampled(None)
}
