//! Stateless counter-based random numbers.
//!
//! Every draw is a pure function of a key and a counter, so Monte Carlo work
//! items can be evaluated in any order (or on any number of threads) and still
//! see exactly the same numbers. A key is derived by hashing a seed together
//! with stream tags; the `k`-th output of a key is the SplitMix64 sequence
//! evaluated at position `k`.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self { key: mix64(seed ^ 0x6A09_E667_F3BC_C909) }
    }

    /// Derives an independent key for a sub-stream.
    pub fn child(self, tag: u64) -> Self {
        Self {
            key: mix64(self.key ^ mix64(tag.wrapping_add(GOLDEN_GAMMA))),
        }
    }

    pub fn key(self) -> u64 {
        self.key
    }

    #[inline]
    pub fn u64_at(self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn f64_at(self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, span)` by multiply-shift; the bias is below `span / 2^64`.
    #[inline]
    pub fn below_at(self, counter: u64, span: u64) -> u64 {
        debug_assert!(span > 0);
        ((self.u64_at(counter) as u128 * span as u128) >> 64) as u64
    }

    /// Uniform integer in the closed range `[lo, hi]`.
    #[inline]
    pub fn range_at(self, counter: u64, lo: i64, hi: i64) -> i64 {
        debug_assert!(lo <= hi);
        let span = (hi - lo) as u64 + 1;
        lo + self.below_at(counter, span) as i64
    }
}

/// Stream tags used across the crate. Distinct tags keep the spacer draws of
/// one experiment independent from its circle-point draws.
pub mod streams {
    pub const OMEGA: u64 = 1;
    pub const CIRCLE: u64 = 2;
    pub const FUBINI_LHS: u64 = 3;
    pub const FUBINI_RHS: u64 = 4;
    pub const CALIBRATION: u64 = 5;
    pub const PROBE: u64 = 6;
}
