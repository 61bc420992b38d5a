//! Robust sparse linear regression via median-of-means.
//!
//! The centerpiece is a square-root-LASSO-type estimator that fits the
//! coefficient vector and the noise scale *simultaneously* by approximating
//! the saddle point of a convex-concave criterion. The criterion is a median
//! of per-block averages, which makes the fit insensitive to a bounded number
//! of arbitrarily corrupted samples, and its square-root structure makes the
//! penalty level independent of the unknown noise scale (it is *pivotal*).
//!
//! Layout:
//! - [`mom`] — seeded block partitions and order-statistic quantiles;
//! - [`criterion`] — the per-sample pairing functional, block criteria,
//!   the penalized objective and its exact gradients;
//! - [`solver`] — proximal gradient descent-ascent on the median block;
//! - [`estimators`] — user-facing fits: fixed sparsity, data-driven noise
//!   bound, sparsity-adaptive aggregation, plus two non-robust baselines;
//! - [`datagen`] — reproducible synthetic datasets with contamination;
//! - [`linalg`] — the handful of dense kernels everything relies on.
//!
//! Every random choice in the crate flows through a ChaCha8 generator seeded
//! explicitly by the caller, so all outputs are reproducible bit-for-bit.

pub mod criterion;
pub mod datagen;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod mom;
pub mod solver;

pub use error::{Error, Result};

/// SplitMix64 step, used to derive independent sub-seeds from a master seed.
/// Public because the CLI derives per-trial seeds with the same chain.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
