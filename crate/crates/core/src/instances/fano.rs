use super::packing::Divergence;
use crate::error::{Error, Result};

/// Inputs to the private Fano bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FanoParams {
    /// Loss separation between any two packing members.
    pub r: f64,
    /// Packing size.
    pub m_count: usize,
    /// Pairwise total-variation bound.
    pub alpha: f64,
    /// Pairwise KL bound.
    pub beta_kl: Divergence,
    pub rho: f64,
    pub n: usize,
}

/// `(r/2) max{1 - (beta + ln 2)/ln M, 1 - (rho (n^2 alpha^2 + n alpha (1 - alpha)) + ln 2)/ln M}`,
/// floored at zero.
pub fn fano_bound(p: &FanoParams) -> Result<f64> {
    if p.m_count < 2 {
        return Err(Error::invalid(format!(
            "packing size must be at least 2, got {}",
            p.m_count
        )));
    }
    let nonneg = |name: &str, v: f64| {
        if v.is_finite() && v >= 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{name} must be finite and nonnegative, got {v}"
            )))
        }
    };
    nonneg("r", p.r)?;
    nonneg("alpha", p.alpha)?;
    nonneg("rho", p.rho)?;
    if p.alpha > 1.0 {
        return Err(Error::invalid(format!(
            "alpha is a TV bound and must be at most 1, got {}",
            p.alpha
        )));
    }
    let log_m = (p.m_count as f64).ln();
    let ln2 = std::f64::consts::LN_2;
    let statistical = match p.beta_kl {
        Divergence::Finite(b) => {
            nonneg("beta", b)?;
            1.0 - (b + ln2) / log_m
        }
        Divergence::Infinite => f64::NEG_INFINITY,
    };
    let n = p.n as f64;
    let a = p.alpha;
    let private = 1.0 - (p.rho * (n * n * a * a + n * a * (1.0 - a)) + ln2) / log_m;
    Ok((0.5 * p.r * statistical.max(private)).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m_count: usize) -> FanoParams {
        FanoParams {
            r: 1.0,
            m_count,
            alpha: 0.05,
            beta_kl: Divergence::Finite(0.5),
            rho: 1.0,
            n: 10,
        }
    }

    #[test]
    fn reference_value() {
        // ln 16 = 2.772589; first term 1 - 1.193147/2.772589 = 0.569663,
        // second 1 - (0.725 + 0.693147)/2.772589 = 0.488512.
        let v = fano_bound(&params(16)).unwrap();
        assert!((v - 0.284832).abs() < 1e-6, "{v}");
    }

    #[test]
    fn two_point_packing_is_vacuous() {
        let mut p = params(2);
        p.beta_kl = Divergence::Finite(0.0);
        p.alpha = 0.0;
        assert_eq!(fano_bound(&p).unwrap(), 0.0);
    }

    #[test]
    fn infinite_kl_leaves_private_term() {
        let mut p = params(16);
        p.beta_kl = Divergence::Infinite;
        let v = fano_bound(&p).unwrap();
        assert!((v - 0.5 * 0.488512).abs() < 1e-6);
        assert!(fano_bound(&params(1)).is_err());
    }
}
