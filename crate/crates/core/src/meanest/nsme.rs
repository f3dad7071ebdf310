use rand::Rng;

use super::catoni::{smoothed_phi_with_root, PHI_BOUND};
use super::{MeanEstimate, Noise};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par;
use crate::privacy::{gaussian_mechanism, PrivacyBudget, Sensitivity};

#[derive(Debug, Clone, PartialEq)]
pub struct NsmeConfig {
    pub tau: f64,
    /// Variance of the multiplicative smoothing noise.
    pub c: f64,
    /// Nodes for quadrature cross-checks; the estimator itself uses the
    /// closed form.
    pub quadrature_nodes: usize,
}

impl NsmeConfig {
    pub fn new(tau: f64) -> Result<Self> {
        Self::with_smoothing(tau, 1.0)
    }

    pub fn with_smoothing(tau: f64, c: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!("tau must be positive, got {tau}")));
        }
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!(
                "smoothing variance c must be positive, got {c}"
            )));
        }
        Ok(NsmeConfig {
            tau,
            c,
            quadrature_nodes: 64,
        })
    }
}

/// How [`cdp_nsme`] sizes its Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Calibration {
    /// Per-coordinate variance `tau^2 d / (rho n^2)`, the published value.
    Paper,
    /// Gaussian mechanism on the exact L2 sensitivity
    /// `2 sup|phi| tau sqrt(d) / n`; strictly `rho`-zCDP.
    Exact,
}

impl std::str::FromStr for Calibration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Calibration::Paper),
            "exact" => Ok(Calibration::Exact),
            other => Err(Error::invalid(format!(
                "unknown calibration mode {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for Calibration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Calibration::Paper => "paper",
            Calibration::Exact => "exact",
        })
    }
}

// Rows handed to one worker when evaluating the smoothed influence function.
const ROW_CHUNK: usize = 4096;

/// Noise-smoothed Catoni estimate:
/// `mu_j = (tau / n) sum_i E[phi(x_ij (1 + N) / tau)]`, `N ~ N(0, c)`.
pub fn nsme(dataset: &Dataset, cfg: &NsmeConfig) -> Result<MeanEstimate> {
    let (n, d) = (dataset.n(), dataset.d());
    let inv_tau = 1.0 / cfg.tau;
    let root_c = cfg.c.sqrt();
    let src = dataset.as_slice();
    // Per-chunk partial sums, combined in chunk order: the result does not
    // depend on how chunks are scheduled.
    let chunks = n.div_ceil(ROW_CHUNK);
    let partials = par::map_indexed(chunks, |ci| {
        let rows = &src[ci * ROW_CHUNK * d..((ci + 1) * ROW_CHUNK).min(n) * d];
        let mut acc = vec![0.0; d];
        for row in rows.chunks_exact(d) {
            for (a, x) in acc.iter_mut().zip(row) {
                *a += smoothed_phi_with_root(x * inv_tau, root_c);
            }
        }
        acc
    });
    let mut sums = vec![0.0; d];
    for part in &partials {
        for (s, v) in sums.iter_mut().zip(part) {
            *s += v;
        }
    }
    let scale = cfg.tau / n as f64;
    Ok(MeanEstimate {
        value: sums.into_iter().map(|s| s * scale).collect(),
        tau: cfg.tau,
        batches: None,
        budget: None,
        noise: Noise::None,
        calibration: None,
    })
}

/// Exact sensitivities of [`nsme`]: one sample moves each coordinate by at
/// most `2 sup|phi| tau / n`.
pub fn nsme_sensitivity(cfg: &NsmeConfig, n: usize, d: usize) -> Sensitivity {
    let per_coord = 2.0 * PHI_BOUND * cfg.tau / n as f64;
    Sensitivity {
        l1: per_coord * d as f64,
        l2: per_coord * (d as f64).sqrt(),
    }
}

/// `rho`-zCDP noise-smoothed estimate; see [`Calibration`] for the two ways
/// the noise can be sized.
pub fn cdp_nsme<R: Rng + ?Sized>(
    dataset: &Dataset,
    cfg: &NsmeConfig,
    rho: f64,
    calibration: Calibration,
    rng: &mut R,
) -> Result<MeanEstimate> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    let mut est = nsme(dataset, cfg)?;
    let (n, d) = (dataset.n() as f64, dataset.d() as f64);
    // Gaussian mechanism with delta2 yields variance delta2^2 / (2 rho).
    let delta2 = match calibration {
        Calibration::Paper => cfg.tau * (2.0 * d).sqrt() / n,
        Calibration::Exact => nsme_sensitivity(cfg, dataset.n(), dataset.d()).l2,
    };
    est.value = gaussian_mechanism(&est.value, delta2, rho, rng)?;
    est.noise = Noise::Gaussian {
        sigma: delta2 / (2.0 * rho).sqrt(),
    };
    est.budget = Some(PrivacyBudget::zcdp(rho)?);
    est.calibration = Some(calibration);
    Ok(est)
}
