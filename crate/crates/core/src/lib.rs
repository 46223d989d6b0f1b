//! Weighted-sum-rate maximization for IRS-aided multicell MIMO downlink.
//!
//! The crate is organised along the optimisation pipeline:
//!
//! - [`scenario`]: geometry, path loss, Rayleigh/Rician fading and seeded
//!   channel synthesis.
//! - [`system`]: equivalent channels, interference covariances, rates, MSE
//!   matrices and the weighted sum rate of an iterate.
//! - [`wmmse`]: closed-form decoder and weight updates and the surrogate
//!   objective they maximise.
//! - [`precoder`]: the per-BS Lagrangian precoder with bisection on the
//!   multiplier, including rank-deficient and block-coupled constraints.
//! - [`phasing`]: the unit-modulus quadratic program for the reflection
//!   phases and its two solvers (majorization-minimization and gradient
//!   descent on the complex circle manifold).
//! - [`solver`]: block coordinate descent, baselines and network MIMO.
//! - [`experiment`]: seeded Monte-Carlo sweeps written as CSV.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

// `!(x > 0.0)` is used on purpose so that NaN fails the domain checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod linalg;
pub mod phasing;
pub mod precoder;
pub mod scenario;
pub mod solver;
pub mod system;
pub mod wmmse;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
pub use scenario::{ChannelSet, ScenarioConfig};
pub use solver::{PhaseMethod, SolveOptions, SolveReport, Termination};
pub use system::{DecoderSet, PhaseVector, PrecoderSet, UserGrid, WeightSet};
