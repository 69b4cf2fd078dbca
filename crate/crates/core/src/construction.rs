//! The random rank-one construction: parameter sequences, tower heights,
//! spacer draws and the per-stage exponent sets
//! `n_{j,k} = k (h_j + t_j) + omega_{j,k}` (with `n_{j,0} = 0`).
//!
//! Stage indices are 1-based everywhere in the public API.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{streams, CounterRng};

/// Law of a single spacer coordinate `omega_{j,k}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacerSupport {
    /// Uniform on `{-t, ..., t}`.
    #[default]
    Symmetric,
    /// Uniform on `{0, ..., t}`.
    NonNegative,
}

impl SpacerSupport {
    pub fn bounds(self, t: u64) -> (i64, i64) {
        let t = t as i64;
        match self {
            SpacerSupport::Symmetric => (-t, t),
            SpacerSupport::NonNegative => (0, t),
        }
    }

    /// Number of equiprobable spacer values.
    pub fn size(self, t: u64) -> u64 {
        match self {
            SpacerSupport::Symmetric => 2 * t + 1,
            SpacerSupport::NonNegative => t + 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionParams {
    /// Number of columns cut at each stage (`m_j >= 2`).
    pub m: Vec<usize>,
    /// Spacer amplitude at each stage (`t_j >= 1`).
    pub t: Vec<u64>,
    /// Height of the initial tower.
    pub h1: u64,
    #[serde(default)]
    pub spacer_support: SpacerSupport,
    pub stages: usize,
}

/// Largest exponent this crate will represent; keeps `k (h + t) + t` and the
/// sums of stage degrees inside `i64`.
pub const MAX_EXPONENT: u64 = 1 << 62;

impl ConstructionParams {
    pub fn new(m: Vec<usize>, t: Vec<u64>, h1: u64, spacer_support: SpacerSupport) -> Result<Self> {
        let stages = m.len();
        let params = Self { m, t, h1, spacer_support, stages };
        params.validate()?;
        Ok(params)
    }

    /// Shape checks that do not need the height recursion.
    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::InvalidParams("stages must be at least 1".into()));
        }
        if self.m.len() < self.stages || self.t.len() < self.stages {
            return Err(Error::InvalidParams(format!(
                "m and t need at least {} entries (got {} and {})",
                self.stages,
                self.m.len(),
                self.t.len()
            )));
        }
        if self.h1 == 0 {
            return Err(Error::InvalidParams("h1 must be at least 1".into()));
        }
        for j in 0..self.stages {
            if self.m[j] < 2 {
                return Err(Error::InvalidParams(format!(
                    "m_{} = {} but every stage needs at least 2 columns",
                    j + 1,
                    self.m[j]
                )));
            }
            if self.t[j] == 0 {
                return Err(Error::InvalidParams(format!("t_{} must be at least 1", j + 1)));
            }
        }
        Ok(())
    }

    pub fn m_at(&self, stage: usize) -> usize {
        self.m[stage - 1]
    }

    pub fn t_at(&self, stage: usize) -> u64 {
        self.t[stage - 1]
    }

    pub(crate) fn check_stage(&self, stage: usize) -> Result<()> {
        if stage == 0 || stage > self.stages {
            return Err(Error::InvalidParams(format!(
                "stage {stage} outside 1..={}",
                self.stages
            )));
        }
        Ok(())
    }

    /// The same construction truncated to its first `stages` stages.
    pub fn truncated(&self, stages: usize) -> Result<Self> {
        self.check_stage(stages)?;
        Ok(Self {
            m: self.m[..stages].to_vec(),
            t: self.t[..stages].to_vec(),
            stages,
            ..self.clone()
        })
    }
}

/// Tower heights `h_1, ..., h_{J+1}` with `h_{j+1} = m_j (h_j + t_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeightSequence {
    h: Vec<u64>,
}

impl HeightSequence {
    /// Runs the recursion with overflow checks but without the symmetric
    /// `h_j > t_j` guard.
    pub fn recursion(params: &ConstructionParams) -> Result<Self> {
        params.validate()?;
        let mut h = Vec::with_capacity(params.stages + 1);
        h.push(params.h1);
        for j in 0..params.stages {
            let next = h[j]
                .checked_add(params.t[j])
                .and_then(|x| x.checked_mul(params.m[j] as u64))
                .filter(|&x| x <= MAX_EXPONENT)
                .ok_or_else(|| {
                    Error::Overflow(format!("h_{} exceeds 2^62", j + 2))
                })?;
            h.push(next);
        }
        Ok(Self { h })
    }

    /// `h_j`, for `1 <= stage <= J + 1`.
    pub fn at(&self, stage: usize) -> u64 {
        self.h[stage - 1]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.h
    }
}

pub fn build_heights(params: &ConstructionParams) -> Result<HeightSequence> {
    let heights = HeightSequence::recursion(params)?;
    if params.spacer_support == SpacerSupport::Symmetric {
        for j in 1..=params.stages {
            if heights.at(j) <= params.t_at(j) {
                return Err(Error::InvalidParams(format!(
                    "symmetric spacers need h_{j} > t_{j} (h = {}, t = {})",
                    heights.at(j),
                    params.t_at(j)
                )));
            }
        }
    }
    Ok(heights)
}

/// One draw of the spacer coordinates for stages `1..=spacers.len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaSample {
    pub seed: u64,
    /// `spacers[j - 1][k - 1] = omega_{j,k}` for `1 <= k < m_j`.
    pub spacers: Vec<Vec<i64>>,
}

impl OmegaSample {
    /// Wraps explicit spacer vectors (used for exhaustive enumeration).
    pub fn from_spacers(params: &ConstructionParams, spacers: Vec<Vec<i64>>) -> Result<Self> {
        if spacers.len() > params.stages {
            return Err(Error::InvalidParams("more spacer stages than construction stages".into()));
        }
        for (i, row) in spacers.iter().enumerate() {
            let j = i + 1;
            if row.len() != params.m_at(j) - 1 {
                return Err(Error::InvalidParams(format!(
                    "stage {j} needs {} spacers, got {}",
                    params.m_at(j) - 1,
                    row.len()
                )));
            }
            let (lo, hi) = params.spacer_support.bounds(params.t_at(j));
            if let Some(bad) = row.iter().find(|&&w| w < lo || w > hi) {
                return Err(Error::InvalidParams(format!(
                    "spacer {bad} at stage {j} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { seed: 0, spacers })
    }

    pub fn stages(&self) -> usize {
        self.spacers.len()
    }

    pub fn stage(&self, stage: usize) -> &[i64] {
        &self.spacers[stage - 1]
    }
}

/// Spacers of a single stage. `omega_{j,k}` depends only on `(seed, j, k)`.
pub fn draw_stage_spacers(params: &ConstructionParams, seed: u64, stage: usize) -> Vec<i64> {
    let rng = CounterRng::new(seed).child(streams::OMEGA).child(stage as u64);
    let (lo, hi) = params.spacer_support.bounds(params.t_at(stage));
    (1..params.m_at(stage) as u64).map(|k| rng.range_at(k, lo, hi)).collect()
}

pub fn sample_omega(params: &ConstructionParams, seed: u64, stages: usize) -> Result<OmegaSample> {
    params.validate()?;
    if stages > params.stages {
        return Err(Error::InvalidParams(format!(
            "asked for {stages} stages but the construction has {}",
            params.stages
        )));
    }
    let spacers = (1..=stages).map(|j| draw_stage_spacers(params, seed, j)).collect();
    Ok(OmegaSample { seed, spacers })
}

/// Seed of the `index`-th omega replicate of an experiment seeded with `seed`.
pub fn replicate_seed(seed: u64, stream: u64, index: u64) -> u64 {
    CounterRng::new(seed).child(stream).child(index).key()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub stage: usize,
    pub n: Vec<u64>,
}

impl ExponentSet {
    pub fn max_exponent(&self) -> u64 {
        *self.n.last().expect("exponent sets are never empty")
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }
}

fn exponents_from_spacers(stage: usize, step: u64, spacers: &[i64]) -> Result<ExponentSet> {
    let mut n = Vec::with_capacity(spacers.len() + 1);
    n.push(0u64);
    for (i, &w) in spacers.iter().enumerate() {
        let k = (i + 1) as i128;
        let v = k * step as i128 + w as i128;
        if v <= 0 || v > MAX_EXPONENT as i128 {
            return Err(Error::Internal(format!("exponent {v} out of range at stage {stage}")));
        }
        n.push(v as u64);
    }
    if n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Internal(format!(
            "exponents of stage {stage} are not strictly increasing"
        )));
    }
    Ok(ExponentSet { stage, n })
}

pub fn stage_exponents(
    params: &ConstructionParams,
    heights: &HeightSequence,
    omega: &OmegaSample,
    stage: usize,
) -> Result<ExponentSet> {
    params.check_stage(stage)?;
    if stage > omega.stages() {
        return Err(Error::InvalidParams(format!(
            "omega only covers {} stages, asked for stage {stage}",
            omega.stages()
        )));
    }
    let step = heights.at(stage) + params.t_at(stage);
    exponents_from_spacers(stage, step, omega.stage(stage))
}

/// Exponents of stage `j` for an explicit spacer row, without building a
/// whole [`OmegaSample`].
pub fn exponents_for_spacers(
    params: &ConstructionParams,
    heights: &HeightSequence,
    stage: usize,
    spacers: &[i64],
) -> Result<ExponentSet> {
    params.check_stage(stage)?;
    if spacers.len() != params.m_at(stage) - 1 {
        return Err(Error::InvalidParams(format!(
            "stage {stage} needs {} spacers, got {}",
            params.m_at(stage) - 1,
            spacers.len()
        )));
    }
    let step = heights.at(stage) + params.t_at(stage);
    exponents_from_spacers(stage, step, spacers)
}

/// Exponent sets of stages `1..=stages`.
pub fn all_exponents(
    params: &ConstructionParams,
    heights: &HeightSequence,
    omega: &OmegaSample,
    stages: usize,
) -> Result<Vec<ExponentSet>> {
    (1..=stages).map(|j| stage_exponents(params, heights, omega, j)).collect()
}

/// Worst-case largest exponent of stage `j`: `(m_j - 1)(h_j + t_j) + t_j`.
pub fn stage_degree_bound(params: &ConstructionParams, heights: &HeightSequence, stage: usize) -> u64 {
    let m = params.m_at(stage) as u64;
    let t = params.t_at(stage);
    (m - 1) * (heights.at(stage) + t) + t
}

/// Worst-case degree of `prod_{j <= stages} P_j`.
pub fn product_degree_bound(params: &ConstructionParams, heights: &HeightSequence, stages: usize) -> u64 {
    (1..=stages).map(|j| stage_degree_bound(params, heights, j)).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageDissociation {
    pub stage: usize,
    /// Smallest nonzero `|n_{j,a} - n_{j,b}|` over every admissible omega.
    pub min_gap: i128,
    /// Largest `|sum_{i<j} d_i|` reachable by lower-stage differences.
    pub lower_reach: i128,
    pub dissociated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DissociationReport {
    pub stages: Vec<StageDissociation>,
    pub dissociated: bool,
}

impl DissociationReport {
    /// True when stages `1..=n` are all collision-free.
    pub fn dissociated_through(&self, n: usize) -> bool {
        self.stages.iter().take(n).all(|s| s.dissociated)
    }
}

/// Decides, for every admissible omega at once, whether the only way to write
/// `0 = sum_j (n_{j,a_j} - n_{j,b_j})` is `a_j = b_j` for all `j`. Then every
/// partial density `prod_{j<=N} |P_j|^2` has constant term exactly 1.
///
/// Stage `j` passes when its smallest nonzero exponent gap exceeds the sum of
/// the largest exponents of all lower stages; the arithmetic is exact.
pub fn check_dissociation(params: &ConstructionParams, heights: &HeightSequence) -> DissociationReport {
    let mut stages = Vec::with_capacity(params.stages);
    let mut lower_reach: i128 = 0;
    for j in 1..=params.stages {
        let h = heights.at(j) as i128;
        let t = params.t_at(j) as i128;
        let m = params.m_at(j) as i128;
        let min_gap = match params.spacer_support {
            SpacerSupport::Symmetric => h - t,
            SpacerSupport::NonNegative => h,
        };
        let dissociated = min_gap >= 1 && min_gap > lower_reach;
        stages.push(StageDissociation { stage: j, min_gap, lower_reach, dissociated });
        lower_reach += (m - 1) * (h + t) + t;
    }
    let dissociated = stages.iter().all(|s| s.dissociated);
    DissociationReport { stages, dissociated }
}
