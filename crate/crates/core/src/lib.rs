//! Differentially private stochastic convex optimization with heavy-tailed data.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`], [`stats`], [`rng`]: datasets, small numeric helpers and the
//!   path-derived random stream contract every randomized routine uses.
//! * [`privacy`]: additive noise mechanisms, zCDP/pure-DP accounting and
//!   conversions between privacy notions.
//! * [`meanest`]: heavy-tailed mean estimators (clipped median-of-means and the
//!   noise-smoothed Catoni estimator) and their private variants.
//! * [`sco`]: the projected-gradient framework driven by a mean-estimation
//!   oracle and the three end-to-end private drivers.
//! * [`instances`]: heavy-tailed generators, losses, packing constructions and
//!   the CDP Fano bound.
//!
//! Inner loops run on rayon when the `parallel` feature is enabled (default);
//! results are bit-identical to the sequential build.

// Negated comparisons are how NaN inputs get rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
mod error;
pub mod instances;
pub mod meanest;
pub mod par;
pub mod privacy;
pub mod quad;
pub mod rng;
pub mod sco;
pub mod stats;

pub use data::{Dataset, MomentSpec};
pub use error::{Error, Result};
pub use rng::RngStream;
