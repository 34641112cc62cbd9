//! zblb: a block-based lossy floating-point codec in the style of ZFP's
//! fixed-precision mode, together with closed-form error-bias predictors,
//! bias-corrected rounding variants, and a Monte Carlo statistics harness.
//!
//! The pipeline compresses `4^d` blocks (d = 1, 2, 3) in eight steps:
//! partition, block floating-point conversion, a lossy integer lifting
//! transform, total-sequency permutation, negabinary conversion, and
//! bit-plane truncation that keeps the `beta` most significant planes.
//! Truncating negabinary planes biases the reconstruction; [`bias`]
//! predicts that bias in closed form and [`codec`] offers two rounding
//! modes that cancel it.

pub mod bias;
pub mod bitplane;
pub mod codec;
pub mod container;
pub mod harness;
pub mod transform;

pub use codec::{CodecConfig, Rounding};

/// Exact dyadic rational used by the lossless reference paths.
pub type Rat = num_rational::Ratio<i128>;
