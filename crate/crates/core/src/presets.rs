//! Named parameter sets shipped with the library.

use crate::construction::{ConstructionParams, SpacerSupport};
use crate::error::{Error, Result};

pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset { name: "small-exhaustive", summary: "m=(2,2), t=(1,1), h1=8: all 9 omega configurations enumerable" },
    Preset { name: "clt", summary: "single stage, m=256, t=64" },
    Preset { name: "decay", summary: "5 stages, m_j=256, t=(16,24,32,48,63), h1=64" },
    Preset { name: "bound-t9-sym", summary: "single stage, m=256, t=9, symmetric spacers" },
    Preset { name: "bound-t9-nonneg", summary: "single stage, m=256, t=9, non-negative spacers" },
    Preset { name: "bound-t99-sym", summary: "single stage, m=256, t=99, symmetric spacers" },
    Preset { name: "bound-t99-nonneg", summary: "single stage, m=256, t=99, non-negative spacers" },
    Preset { name: "lindeberg", summary: "single stage, t=4, base of the m ladder 4..1024" },
];

/// Values of `m` swept by the Lindeberg ladder.
pub const LINDEBERG_LADDER: &[usize] = &[4, 16, 64, 256, 1024];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.name).collect()
}

pub fn preset(name: &str) -> Result<ConstructionParams> {
    use SpacerSupport::{NonNegative, Symmetric};
    let bound = |t: u64, support| ConstructionParams::new(vec![256], vec![t], t + 1, support);
    match name {
        "small-exhaustive" => ConstructionParams::new(vec![2, 2], vec![1, 1], 8, Symmetric),
        "clt" => ConstructionParams::new(vec![256], vec![64], 65, Symmetric),
        "decay" => ConstructionParams::new(vec![256; 5], vec![16, 24, 32, 48, 63], 64, Symmetric),
        "bound-t9-sym" => bound(9, Symmetric),
        "bound-t9-nonneg" => bound(9, NonNegative),
        "bound-t99-sym" => bound(99, Symmetric),
        "bound-t99-nonneg" => bound(99, NonNegative),
        "lindeberg" => ConstructionParams::new(vec![4], vec![4], 5, Symmetric),
        _ => Err(Error::InvalidConfig(format!(
            "unknown preset `{name}`; valid presets: {}",
            preset_names().join(", ")
        ))),
    }
}
