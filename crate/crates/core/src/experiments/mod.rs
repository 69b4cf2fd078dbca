//! Seeded Monte Carlo drivers.
//!
//! Every driver is a pure function of `(params, seed, sizes)`: replicate `i`
//! draws its spacers and circle points from counter streams keyed by `i`, the
//! per-replicate results are collected in index order and reduced with
//! pairwise summation. Thread count never changes a single bit of a report.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::construction::ConstructionParams;
use crate::error::{Error, Result};
use crate::polyeval::CircleGrid;
use crate::rng::CounterRng;
use crate::sum::Estimate;

mod centered;
mod clt;
mod decay;
pub mod exhaustive;
mod fubini;
mod lindeberg;
mod mean_abs;
mod sizing;
pub mod verify;

pub use centered::centered_comparison;
pub use clt::clt_distribution_test;
pub use decay::decay_experiment;
pub use fubini::{fubini_check, DEFAULT_INNER_DRAWS};
pub use lindeberg::{lindeberg_ladder, lindeberg_ratio};
pub use mean_abs::estimate_mean_abs;
pub use sizing::{auto_rule_l1, GridChoice, GridSpec, DEFAULT_Z_POINTS, FULL_GRID_AUTO_LIMIT};
pub use verify::{verify, VerifyOptions};

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance for deterministic quadrature: the grid-doubling criterion.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;

/// How the circle integral is evaluated for each omega replicate.
#[derive(Debug, Clone, PartialEq)]
pub enum CircleRule {
    /// Rectangle rule over every point of the grid.
    Full(CircleGrid),
    /// Uniformly drawn grid points, fresh for every replicate.
    Sampled { grid: CircleGrid, points: u64 },
}

impl CircleRule {
    pub fn grid(&self) -> &CircleGrid {
        match self {
            CircleRule::Full(g) => g,
            CircleRule::Sampled { grid, .. } => grid,
        }
    }

    pub fn z_points(&self) -> Option<u64> {
        match self {
            CircleRule::Full(_) => None,
            CircleRule::Sampled { points, .. } => Some(*points),
        }
    }

    /// Circle points of replicate `index` in `stream` (sampled rules only).
    pub(crate) fn points(&self, seed: u64, stream: u64, index: u64) -> Vec<u64> {
        match self {
            CircleRule::Full(_) => Vec::new(),
            CircleRule::Sampled { grid, points } => {
                let rng = CounterRng::new(seed).child(stream).child(CIRCLE_TAG).child(index);
                (0..*points).map(|q| rng.below_at(q, grid.size())).collect()
            }
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        match self {
            CircleRule::Full(g) => {
                g.roots()?;
            }
            CircleRule::Sampled { points, .. } => {
                if *points == 0 {
                    return Err(Error::InvalidConfig("sampled rule needs at least one point".into()));
                }
            }
        }
        Ok(())
    }
}

const CIRCLE_TAG: u64 = 0xC1C1E;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarlo {
    pub n_omega: usize,
    pub rule: CircleRule,
    pub seed: u64,
}

impl MonteCarlo {
    pub fn new(n_omega: usize, rule: CircleRule, seed: u64) -> Self {
        Self { n_omega, rule, seed }
    }

    pub(crate) fn check(&self) -> Result<()> {
        if self.n_omega < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 omega replicates for a standard error, got {}",
                self.n_omega
            )));
        }
        self.rule.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub label: String,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub index: i64,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Wall-clock data, kept under one key so the rest of a report is
/// reproducible byte for byte.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
    pub finished_unix_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub name: String,
    pub params: ConstructionParams,
    pub seed: u64,
    pub grid_size: u64,
    /// Circle points per replicate for sampled rules; absent for full grids.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_points: Option<u64>,
    pub samples: u64,
    pub results: Vec<ResultEntry>,
    pub series: Vec<Series>,
    pub gates: Vec<Gate>,
    pub timing: Timing,
}

impl ExperimentReport {
    pub fn new(name: &str, params: &ConstructionParams, seed: u64, rule: Option<&CircleRule>, samples: u64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            name: name.to_string(),
            params: params.clone(),
            seed,
            grid_size: rule.map_or(0, |r| r.grid().size()),
            z_points: rule.and_then(CircleRule::z_points),
            samples,
            results: Vec::new(),
            series: Vec::new(),
            gates: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn push(&mut self, label: &str, est: Estimate) -> &mut Self {
        self.results.push(ResultEntry { label: label.into(), value: est.value, stderr: est.stderr });
        self
    }

    pub fn push_exact(&mut self, label: &str, value: f64) -> &mut Self {
        self.push(label, Estimate::exact(value))
    }

    pub fn push_series(&mut self, name: &str, points: impl IntoIterator<Item = (i64, Estimate)>) -> &mut Self {
        self.series.push(Series {
            name: name.into(),
            points: points
                .into_iter()
                .map(|(index, e)| SeriesPoint { index, value: e.value, stderr: e.stderr })
                .collect(),
        });
        self
    }

    pub fn gate(&mut self, name: &str, passed: bool, detail: impl Into<String>) -> &mut Self {
        self.gates.push(Gate { name: name.into(), passed, detail: detail.into() });
        self
    }

    pub fn result(&self, label: &str) -> Option<&ResultEntry> {
        self.results.iter().find(|r| r.label == label)
    }

    pub fn value(&self, label: &str) -> Option<f64> {
        self.result(label).map(|r| r.value)
    }

    pub fn estimate(&self, label: &str) -> Option<Estimate> {
        self.result(label).map(|r| Estimate { value: r.value, stderr: r.stderr })
    }

    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn gate_named(&self, name: &str) -> Option<&Gate> {
        self.gates.iter().find(|g| g.name == name)
    }

    pub fn passed(&self) -> bool {
        self.gates.iter().all(|g| g.passed)
    }

    pub fn finish(mut self, started: Instant) -> Self {
        self.timing = Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
            finished_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0),
        };
        self
    }

    /// The report with its timing key cleared.
    pub fn without_timing(&self) -> Self {
        Self { timing: Timing::default(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Empirical quantiles of per-omega values, recorded as exact entries.
pub(crate) fn push_quantiles(report: &mut ExperimentReport, prefix: &str, values: &[f64]) {
    for (q, tag) in [(0.05, "q05"), (0.5, "q50"), (0.95, "q95")] {
        report.push_exact(&format!("{prefix}_{tag}"), crate::sum::quantile(values, q));
    }
}

pub(crate) fn sqrt_pi_over_2() -> f64 {
    std::f64::consts::PI.sqrt() / 2.0
}
