use crate::data::MomentSpec;
use crate::error::{Error, Result};
use crate::stats::l2_distance;

/// Euclidean ball `{w : |w - center| <= radius}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid(
                "ball center must be a finite, nonempty vector",
            ));
        }
        Ok(Ball { center, radius })
    }

    /// Ball of the given radius around the origin.
    pub fn origin(d: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; d], radius)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    /// Membership with a relative tolerance for rounding in the projection.
    pub fn contains(&self, w: &[f64]) -> bool {
        w.len() == self.dim() && l2_distance(w, &self.center) <= self.radius * (1.0 + 1e-12)
    }
}

/// Problem constants the parameter schedules consume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    /// Smoothness `L`.
    pub smoothness: f64,
    /// Strong convexity `lambda`; zero for merely convex losses.
    pub strong_convexity: f64,
    /// Constraint-set diameter `M`.
    pub diameter: f64,
    /// Bound `R` on the norm of the expected gradient over the domain.
    pub grad_mean_bound: f64,
    /// Moment bound satisfied by the per-sample gradients.
    pub moment: MomentSpec,
}

/// Per-sample loss `l(w, x)` over a ball-shaped domain.
pub trait LossOracle: Send + Sync {
    /// Dimension of the parameter `w` (and of the gradient).
    fn dim(&self) -> usize;

    /// Dimension of one sample `x`.
    fn sample_dim(&self) -> usize {
        self.dim()
    }

    fn value(&self, w: &[f64], x: &[f64]) -> f64;

    /// Writes `grad_w l(w, x)` into `out`.
    fn grad(&self, w: &[f64], x: &[f64], out: &mut [f64]);

    /// Gradients for consecutive row-major samples `xs` into `out`.
    fn grad_rows(&self, w: &[f64], xs: &[f64], out: &mut [f64]) {
        let (p, q) = (self.dim(), self.sample_dim());
        for (x, g) in xs.chunks_exact(q).zip(out.chunks_exact_mut(p)) {
            self.grad(w, x, g);
        }
    }

    fn constants(&self) -> &LossConstants;

    fn domain(&self) -> &Ball;
}
