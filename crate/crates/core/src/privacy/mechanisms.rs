use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal};

use crate::error::{Error, Result};

/// L1 and L2 sensitivities of a vector-valued statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivity {
    pub l1: f64,
    pub l2: f64,
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "{name} must be finite and nonnegative, got {v}"
        )))
    }
}

/// One draw from a zero-mean Laplace distribution with scale `b`.
pub fn sample_laplace<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    if u < 0.5 {
        b * (2.0 * u).ln()
    } else {
        -b * (2.0 * (1.0 - u)).ln()
    }
}

/// Adds i.i.d. `Lap(delta1 / epsilon)` noise to every coordinate; the release
/// is `(epsilon, 0)`-DP when `delta1` bounds the L1 sensitivity.
pub fn laplace_mechanism<R: Rng + ?Sized>(
    v: &[f64],
    delta1: f64,
    epsilon: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::invalid(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    check_scale("L1 sensitivity", delta1)?;
    let b = delta1 / epsilon;
    if b == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(v.iter().map(|x| x + sample_laplace(b, rng)).collect())
}

/// Adds i.i.d. `N(0, delta2^2 / (2 rho))` noise to every coordinate; the
/// release is `rho`-zCDP when `delta2` bounds the L2 sensitivity.
pub fn gaussian_mechanism<R: Rng + ?Sized>(
    v: &[f64],
    delta2: f64,
    rho: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::invalid(format!("rho must be positive, got {rho}")));
    }
    check_scale("L2 sensitivity", delta2)?;
    let sigma = delta2 / (2.0 * rho).sqrt();
    if sigma == 0.0 {
        return Ok(v.to_vec());
    }
    Ok(v.iter()
        .map(|x| {
            let z: f64 = StandardNormal.sample(rng);
            x + sigma * z
        })
        .collect())
}
