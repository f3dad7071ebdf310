use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::quad::GaussLegendre;
use crate::stats::{normal_cdf, normal_pdf, normal_sf};

/// `sup |phi| = 2 sqrt(2) / 3`.
pub const PHI_BOUND: f64 = 2.0 * SQRT_2 / 3.0;

/// Catoni-type influence function: `x - x^3/6` on `[-sqrt 2, sqrt 2]`,
/// constant `±2 sqrt(2)/3` outside. Odd, nondecreasing and continuous.
pub fn catoni_phi(x: f64) -> f64 {
    if x > SQRT_2 {
        PHI_BOUND
    } else if x < -SQRT_2 {
        -PHI_BOUND
    } else {
        x - x * x * x / 6.0
    }
}

/// Standard normal mass on `[lo, hi]`, evaluated on whichever side keeps the
/// subtraction small.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        normal_sf(lo) - normal_sf(hi)
    } else if hi <= 0.0 {
        normal_sf(-hi) - normal_sf(-lo)
    } else {
        1.0 - normal_sf(hi) - normal_cdf(lo)
    }
}

// Beyond this many standard deviations the excluded Gaussian mass is below
// 1e-23 and a single branch of phi is exact to double precision.
const FAST_PATH_SIGMAS: f64 = 10.0;

const BAND_NODES: usize = 48;

/// `E[phi(x (1 + N) / tau)]` with `N ~ N(0, c)`, in closed form.
///
/// With `a = x / tau`, the argument is `Y ~ N(a, a^2 c)`. The expectation
/// splits into the cubic piece on `[-sqrt 2, sqrt 2]`, evaluated from partial
/// Gaussian moments, plus the two saturated tails.
pub fn smoothed_phi(x: f64, tau: f64, c: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if !(c.is_finite() && c >= 0.0) {
        return Err(Error::invalid(format!(
            "smoothing variance must be nonnegative, got {c}"
        )));
    }
    Ok(smoothed_phi_unchecked(x / tau, c))
}

pub(crate) fn smoothed_phi_unchecked(a: f64, c: f64) -> f64 {
    smoothed_phi_with_root(a, c.sqrt())
}

/// [`smoothed_phi_unchecked`] with `sqrt(c)` precomputed.
#[inline]
pub(crate) fn smoothed_phi_with_root(a: f64, root_c: f64) -> f64 {
    // phi is odd and the smoothing noise is symmetric.
    let m = a.abs();
    let s = m * root_c;
    if m + FAST_PATH_SIGMAS * s < SQRT_2 {
        // E[Y - Y^3/6] with E[Y^3] = a^3 + 3 a s^2.
        return (m - (m * m * m + 3.0 * m * s * s) / 6.0).copysign(a);
    }
    positive_branch(m, s).copysign(a)
}

#[inline(never)]
fn positive_branch(a: f64, s: f64) -> f64 {
    if s == 0.0 {
        return catoni_phi(a);
    }
    if a - FAST_PATH_SIGMAS * s > SQRT_2 {
        return PHI_BOUND;
    }

    let (lo, hi) = (-SQRT_2, SQRT_2);
    let za = (lo - a) / s;
    let zb = (hi - a) / s;
    let upper = normal_sf(zb);
    let lower = normal_cdf(za);
    let saturated = PHI_BOUND * (upper - lower);

    if s > SQRT_2 {
        // The band is narrow against the spread and the moment recurrence
        // below would cancel; the Gaussian is smooth across the band, so a
        // fixed Gauss-Legendre rule is exact to rounding.
        let band = GaussLegendre::cached(BAND_NODES).integrate(lo, hi, |y| {
            (y - y * y * y / 6.0) * normal_pdf((y - a) / s) / s
        });
        return band + saturated;
    }
    let (pa, pb) = (normal_pdf(za), normal_pdf(zb));

    // Partial moments M_r = E[Y^r; lo < Y < hi] via
    // M_r = a M_{r-1} + s^2 (r-1) M_{r-2} + s (lo^{r-1} p(za) - hi^{r-1} p(zb)).
    let m0 = normal_mass(za, zb);
    let m1 = a * m0 + s * (pa - pb);
    let m2 = a * m1 + s * s * m0 + s * (lo * pa - hi * pb);
    let m3 = a * m2 + 2.0 * s * s * m1 + s * (lo * lo * pa - hi * hi * pb);

    m1 - m3 / 6.0 + saturated
}

/// Independent evaluation of [`smoothed_phi`] by numerical integration over
/// the smoothing noise: Gauss–Legendre with `nodes` points on each piece
/// between the kinks of `phi`, truncated at `±12 sqrt(c)`.
pub fn smoothed_phi_quadrature(x: f64, tau: f64, c: f64, nodes: usize) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!("tau must be positive, got {tau}")));
    }
    if !(c.is_finite() && c >= 0.0) || nodes == 0 {
        return Err(Error::invalid(
            "smoothing variance must be >= 0 and nodes >= 1",
        ));
    }
    let a = x / tau;
    if c == 0.0 || a == 0.0 {
        return Ok(catoni_phi(a));
    }
    let sd = c.sqrt();
    let (lo, hi) = (-12.0 * sd, 12.0 * sd);
    let mut edges = vec![lo, hi];
    for kink in [SQRT_2 / a - 1.0, -SQRT_2 / a - 1.0] {
        if kink > lo && kink < hi {
            edges.push(kink);
        }
    }
    edges.sort_by(f64::total_cmp);
    let rule = GaussLegendre::cached(nodes);
    Ok(rule.integrate_pieces(&edges, |noise| {
        catoni_phi(a * (1.0 + noise)) * normal_pdf(noise / sd) / sd
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values() {
        assert_eq!(catoni_phi(0.0), 0.0);
        assert!((catoni_phi(SQRT_2) - 0.942809).abs() < 1e-6);
        assert!((catoni_phi(SQRT_2) - PHI_BOUND).abs() < 1e-15);
        assert_eq!(catoni_phi(-10.0), -PHI_BOUND);
        assert_eq!(catoni_phi(1.0), 1.0 - 1.0 / 6.0);
    }

    #[test]
    fn smoothing_degenerate_cases() {
        for c in [0.0, 0.5, 1.0, 4.0] {
            assert_eq!(smoothed_phi(0.0, 7.0, c).unwrap(), 0.0);
        }
        for x in [-30.0, -3.0, 0.4, 12.0, 55.0] {
            assert_eq!(smoothed_phi(x, 10.0, 0.0).unwrap(), catoni_phi(x / 10.0));
        }
        assert!(smoothed_phi(1.0, 0.0, 1.0).is_err());
        assert!(smoothed_phi(1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature_at_tau() {
        let closed = smoothed_phi(10.0, 10.0, 1.0).unwrap();
        let quad = smoothed_phi_quadrature(10.0, 10.0, 1.0, 128).unwrap();
        assert!((closed - quad).abs() < 1e-9, "{closed} vs {quad}");
    }

    #[test]
    fn closed_form_matches_quadrature_across_regimes() {
        for &c in &[0.01, 0.25, 1.0, 3.0] {
            for &a in &[
                -1000.0, -37.0, -2.0, -1.3, -0.2, 1e-4, 0.05, 0.9, 1.41, 1.5, 6.0, 250.0, 1000.0,
            ] {
                let closed = smoothed_phi(a, 1.0, c).unwrap();
                let quad = smoothed_phi_quadrature(a, 1.0, c, 128).unwrap();
                assert!(
                    (closed - quad).abs() < 1e-9,
                    "a = {a}, c = {c}: {closed} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn smoothed_phi_is_odd_and_bounded() {
        for &x in &[0.3, 1.0, 2.0, 9.0, 400.0] {
            let p = smoothed_phi(x, 1.0, 1.0).unwrap();
            let m = smoothed_phi(-x, 1.0, 1.0).unwrap();
            assert_eq!(p, -m);
            assert!(p.abs() <= PHI_BOUND);
        }
    }
}
