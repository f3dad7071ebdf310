//! Heavy-tailed mean estimators and their private variants.
//!
//! * [`hdme`]: coordinate-wise clipped median-of-means, with zCDP
//!   ([`cdp_hdme`]) and pure-DP ([`dp_hdme`]) adaptions.
//! * [`nsme`]: the noise-smoothed Catoni estimator, with a zCDP adaption
//!   ([`cdp_nsme`]) offered under two noise calibrations.

mod catoni;
mod hdme;
mod nsme;
mod tau;

pub use catoni::{catoni_phi, smoothed_phi, smoothed_phi_quadrature, PHI_BOUND};
pub use hdme::{cdp_hdme, dp_hdme, hdme, hdme_sensitivity, HdmeConfig};
pub use nsme::{cdp_nsme, nsme, nsme_sensitivity, Calibration, NsmeConfig};
pub use tau::{recommended_tau, TauChoice, TauInputs, TauMode, MIN_TAU};

use crate::privacy::PrivacyBudget;

/// Noise added by a private estimator, per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    None,
    Gaussian { sigma: f64 },
    Laplace { scale: f64 },
}

impl Noise {
    /// Per-coordinate standard deviation of the added noise.
    pub fn sigma(&self) -> f64 {
        match *self {
            Noise::None => 0.0,
            Noise::Gaussian { sigma } => sigma,
            Noise::Laplace { scale } => std::f64::consts::SQRT_2 * scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanEstimate {
    pub value: Vec<f64>,
    pub tau: f64,
    /// Batch count for median-of-means estimators.
    pub batches: Option<usize>,
    pub budget: Option<PrivacyBudget>,
    pub noise: Noise,
    pub calibration: Option<Calibration>,
}

impl MeanEstimate {
    pub fn noise_sigma(&self) -> f64 {
        self.noise.sigma()
    }
}
