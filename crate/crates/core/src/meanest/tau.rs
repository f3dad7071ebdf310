use crate::error::{Error, Result};

/// Smallest truncation scale for which the estimator guarantees hold.
pub const MIN_TAU: f64 = 10.0;

/// Which parameter schedule to take the truncation scale from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauMode {
    /// `(sqrt(rho) n / sqrt(d))^(1/k)`
    CdpHdme,
    /// `(epsilon n / d)^(1/k)`
    DpHdme,
    /// `(sqrt(rho) n / (M d^(3/2)))^(1/k)`
    ScoConvexHdme,
    /// `(sqrt(rho) n / (M d^q))^(1/2)`
    ScoConvexNsme,
    /// `(sqrt(rho) n / (sqrt(d) T^(3/2)))^(1/k)`
    ScoStronglyConvex,
}

/// Inputs to [`recommended_tau`]. Fields a mode does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauInputs {
    /// `rho` for zCDP modes, `epsilon` for [`TauMode::DpHdme`].
    pub budget: f64,
    pub n: usize,
    pub d: usize,
    pub k: f64,
    /// Constraint-set diameter `M`.
    pub diameter: f64,
    pub q: f64,
    /// Iteration count `T`.
    pub iterations: usize,
}

impl TauInputs {
    pub fn new(budget: f64, n: usize, d: usize, k: f64) -> Self {
        TauInputs {
            budget,
            n,
            d,
            k,
            diameter: 1.0,
            q: 1.0,
            iterations: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauChoice {
    pub tau: f64,
    /// Formula value before flooring.
    pub raw: f64,
    pub floored: bool,
}

impl TauChoice {
    pub fn warning(&self) -> Option<String> {
        self.floored
            .then(|| format!("tau floored from {:.6} to {MIN_TAU}", self.raw))
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::invalid(msg()))
    }
}

/// Truncation scale from the mode's schedule, floored at [`MIN_TAU`].
pub fn recommended_tau(mode: TauMode, p: &TauInputs) -> Result<TauChoice> {
    require(p.budget.is_finite() && p.budget > 0.0, || {
        format!("privacy budget must be positive, got {}", p.budget)
    })?;
    require(p.n >= 1 && p.d >= 1, || "n and d must be at least 1".into())?;
    require(p.k.is_finite() && p.k >= 2.0, || {
        format!("moment order k must be >= 2, got {}", p.k)
    })?;

    let n = p.n as f64;
    let d = p.d as f64;
    let root = p.budget.sqrt();
    let raw = match mode {
        TauMode::CdpHdme => (root * n / d.sqrt()).powf(1.0 / p.k),
        TauMode::DpHdme => (p.budget * n / d).powf(1.0 / p.k),
        TauMode::ScoConvexHdme => {
            require(p.diameter > 0.0, || "diameter must be positive".into())?;
            (root * n / (p.diameter * d.powf(1.5))).powf(1.0 / p.k)
        }
        TauMode::ScoConvexNsme => {
            require(p.diameter > 0.0, || "diameter must be positive".into())?;
            require((0.5..=2.0).contains(&p.q), || {
                format!("q must lie in [0.5, 2], got {}", p.q)
            })?;
            (root * n / (p.diameter * d.powf(p.q))).sqrt()
        }
        TauMode::ScoStronglyConvex => {
            require(p.iterations >= 1, || {
                "iteration count must be at least 1".into()
            })?;
            (root * n / (d.sqrt() * (p.iterations as f64).powf(1.5))).powf(1.0 / p.k)
        }
    };
    let floored = !(raw >= MIN_TAU);
    if floored {
        log::warn!("{mode:?}: tau formula gives {raw:.4}; flooring to {MIN_TAU}");
    }
    Ok(TauChoice {
        tau: if floored { MIN_TAU } else { raw },
        raw,
        floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corollary_schedules() {
        let t =
            recommended_tau(TauMode::CdpHdme, &TauInputs::new(1.0, 1_000_000, 100, 2.0)).unwrap();
        assert!((t.tau - 100_000f64.sqrt()).abs() < 1e-9);
        assert!((t.tau - 316.23).abs() < 0.01);
        assert!(!t.floored);

        let t =
            recommended_tau(TauMode::DpHdme, &TauInputs::new(1.0, 1_000_000, 100, 2.0)).unwrap();
        assert!((t.tau - 100.0).abs() < 1e-9);
    }

    #[test]
    fn convex_schedules() {
        let mut p = TauInputs::new(1.0, 10_000, 2, 2.0);
        let t = recommended_tau(TauMode::ScoConvexHdme, &p).unwrap();
        assert!((t.tau - 59.46).abs() < 0.01, "{}", t.tau);

        p.d = 4;
        let t = recommended_tau(TauMode::ScoConvexNsme, &p).unwrap();
        assert!((t.tau - 50.0).abs() < 1e-9);
        p.q = 2.5;
        assert!(recommended_tau(TauMode::ScoConvexNsme, &p).is_err());
    }

    #[test]
    fn floor_engages_below_ten() {
        // (9 * 1 / 1)^(1/2) = 3
        let t = recommended_tau(TauMode::DpHdme, &TauInputs::new(1.0, 9, 1, 2.0)).unwrap();
        assert_eq!(t.tau, MIN_TAU);
        assert!((t.raw - 3.0).abs() < 1e-12);
        assert!(t.floored && t.warning().is_some());
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(recommended_tau(TauMode::CdpHdme, &TauInputs::new(0.0, 10, 1, 2.0)).is_err());
        assert!(recommended_tau(TauMode::CdpHdme, &TauInputs::new(1.0, 10, 1, 1.5)).is_err());
        assert!(recommended_tau(TauMode::CdpHdme, &TauInputs::new(1.0, 0, 1, 2.0)).is_err());
    }
}
