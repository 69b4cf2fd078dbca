//! Numerical laboratory for Ornstein-type random rank-one constructions and
//! their generalized Riesz products.
//!
//! The crate builds the random stage polynomials
//! `P_j(z) = m_j^{-1/2} sum_k z^{n_{j,k}(omega)}`, forms partial products
//! `R_N = prod_{j<=N} |P_j|`, and runs seeded, thread-count independent Monte
//! Carlo experiments on the quantities that drive the singularity argument:
//! the per-stage limit `E|P_j| -> sqrt(pi)/2`, the decay of `E int R_N`, the
//! Fubini/independence step, the centred-polynomial bound and the CLT.

pub mod cli;
pub mod construction;
pub mod error;
pub mod experiments;
pub mod polyeval;
pub mod presets;
pub mod riesz;
pub mod rng;
pub mod stats;
pub mod sum;

pub use construction::{
    build_heights, check_dissociation, sample_omega, stage_exponents, ConstructionParams,
    DissociationReport, ExponentSet, HeightSequence, OmegaSample, SpacerSupport,
};
pub use error::{Error, Result};
pub use experiments::{CircleRule, ExperimentReport, MonteCarlo};
pub use polyeval::{eval_mean_polynomial, eval_stage_polynomial, l2_norm, CircleGrid, StageValues};
pub use riesz::{fourier_coefficient, integrate_circle, partial_abs_product, PartialProduct, Power};
