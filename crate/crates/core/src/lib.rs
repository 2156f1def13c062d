//! Exact, enumeration-based information measures for equivariant
//! self-supervised learning toy problems.
//!
//! Everything here works on finite alphabets. A [`JointTable`] holds a dense
//! joint distribution over named variables and every information quantity is
//! computed from it exactly (in nats). On top of that sit the collider models,
//! encoder sweeps, the additive toy model, a small transformation zoo over
//! enumerable images, V-information over restricted predictive families and
//! a gradient-descent variational estimator.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![cfg_attr(docsrs, feature(doc_cfg))]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod additive;
pub mod causal;
pub mod encoder;
mod error;
pub mod estimator;
pub mod info;
pub mod instances;
pub mod math;
pub mod table;
pub mod vinfo;
pub mod zoo;

pub use error::{Error, Result};
pub use info::{
    conditional_entropy, conditional_mutual_information, entropy, interaction_information,
    mutual_information,
};
pub use table::{Alphabet, JointTable};

/// Canonical variable names used by the collider models and reports.
pub mod vars {
    /// Class.
    pub const CLASS: &str = "C";
    /// Style.
    pub const STYLE: &str = "S";
    /// Intrinsic pose of the raw input.
    pub const POSE: &str = "Abar";
    /// Raw input.
    pub const RAW: &str = "Xbar";
    /// Augmentation (the equivariance target).
    pub const ACTION: &str = "A";
    /// Augmented input.
    pub const OBSERVED: &str = "X";
    /// Representation.
    pub const REPR: &str = "Z";
    /// Class feature appended to a representation.
    pub const CLASS_FEATURE: &str = "Zc";
}

/// Tolerance used when validating that a distribution sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Negative information values above `-CLAMP_TOL` are treated as rounding
/// noise and clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Threshold above which a conditional mutual information counts as
/// strictly positive.
pub const POSITIVE_TOL: f64 = 1e-9;
