use crate::data::MomentSpec;
use crate::error::{Error, Result};
use crate::sco::{project_ball, Ball, LossConstants, LossOracle};
use crate::stats::{dot, l2_distance, l2_norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Quadratic,
    Linear,
    LinearRegression,
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic" => Ok(LossKind::Quadratic),
            "linear" => Ok(LossKind::Linear),
            "linear_regression" => Ok(LossKind::LinearRegression),
            other => Err(Error::invalid(format!("unknown loss '{other}'"))),
        }
    }
}

/// What a loss needs to know about its domain and data.
#[derive(Debug, Clone, PartialEq)]
pub struct LossParams {
    pub domain: Ball,
    /// Mean of the sample distribution (quadratic and linear losses).
    pub data_mean: Vec<f64>,
    /// Regression coefficients generating the responses.
    pub w_true: Option<Vec<f64>>,
    /// Moment order of the data.
    pub k: f64,
}

/// `l(w, x) = |w - x|^2 / 2`, with `lambda = L = 1`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    domain: Ball,
    mu: Vec<f64>,
    consts: LossConstants,
}

impl QuadraticLoss {
    pub fn new(domain: Ball, mu: Vec<f64>, k: f64) -> Result<Self> {
        if mu.len() != domain.dim() {
            return Err(Error::invalid("data mean and domain differ in dimension"));
        }
        let consts = LossConstants {
            smoothness: 1.0,
            strong_convexity: 1.0,
            diameter: domain.diameter(),
            grad_mean_bound: domain.radius + l2_distance(&domain.center, &mu),
            moment: MomentSpec::unit(k)?,
        };
        Ok(QuadraticLoss { domain, mu, consts })
    }

    /// Population minimizer over the domain: the projection of the mean.
    pub fn minimizer(&self) -> Vec<f64> {
        project_ball(&self.mu, &self.domain)
    }

    /// `L(w) - L(w*) = (|w - mu|^2 - |w* - mu|^2) / 2`.
    pub fn population_excess_risk(&self, w: &[f64]) -> f64 {
        let ws = self.minimizer();
        0.5 * (l2_distance(w, &self.mu).powi(2) - l2_distance(&ws, &self.mu).powi(2))
    }
}

impl LossOracle for QuadraticLoss {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, w: &[f64], x: &[f64]) -> f64 {
        0.5 * w.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }

    fn grad(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(w).zip(x) {
            *o = a - b;
        }
    }

    fn grad_rows(&self, w: &[f64], xs: &[f64], out: &mut [f64]) {
        for (g, x) in out.chunks_exact_mut(w.len()).zip(xs.chunks_exact(w.len())) {
            for ((o, a), b) in g.iter_mut().zip(w).zip(x) {
                *o = a - b;
            }
        }
    }

    fn constants(&self) -> &LossConstants {
        &self.consts
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }
}

/// `l(w, x) = -<w, x>`: convex, 0-smooth, gradient `-x`.
#[derive(Debug, Clone)]
pub struct LinearLoss {
    domain: Ball,
    mu: Vec<f64>,
    consts: LossConstants,
}

impl LinearLoss {
    pub fn new(domain: Ball, mu: Vec<f64>, k: f64) -> Result<Self> {
        if mu.len() != domain.dim() {
            return Err(Error::invalid("data mean and domain differ in dimension"));
        }
        let consts = LossConstants {
            smoothness: 0.0,
            strong_convexity: 0.0,
            diameter: domain.diameter(),
            grad_mean_bound: l2_norm(&mu),
            moment: MomentSpec::unit(k)?,
        };
        Ok(LinearLoss { domain, mu, consts })
    }

    /// `center + radius mu / |mu|`, or the center when `mu = 0`.
    pub fn minimizer(&self) -> Vec<f64> {
        let norm = l2_norm(&self.mu);
        if norm == 0.0 {
            return self.domain.center.clone();
        }
        self.domain
            .center
            .iter()
            .zip(&self.mu)
            .map(|(c, m)| c + self.domain.radius * m / norm)
            .collect()
    }

    pub fn population_excess_risk(&self, w: &[f64]) -> f64 {
        dot(&self.minimizer(), &self.mu) - dot(w, &self.mu)
    }
}

impl LossOracle for LinearLoss {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn value(&self, w: &[f64], x: &[f64]) -> f64 {
        -dot(w, x)
    }

    fn grad(&self, _w: &[f64], x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            *o = -v;
        }
    }

    fn constants(&self) -> &LossConstants {
        &self.consts
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }
}

/// `l(w, (a, b)) = (<w, a> - b)^2 / 2` on rows `(a_1..a_d, b)` with
/// Rademacher features, so `E[a a^T] = I`.
///
/// The moment bound reported for the gradients is nominal: the noise on
/// `b` has unit `k`-th moment, the feature term adds a bounded amount.
#[derive(Debug, Clone)]
pub struct LinearRegressionLoss {
    domain: Ball,
    w_true: Vec<f64>,
    consts: LossConstants,
}

impl LinearRegressionLoss {
    pub fn new(domain: Ball, w_true: Vec<f64>, k: f64) -> Result<Self> {
        if w_true.len() != domain.dim() {
            return Err(Error::invalid(
                "regression coefficients and domain differ in dimension",
            ));
        }
        let d = domain.dim() as f64;
        let consts = LossConstants {
            smoothness: d,
            strong_convexity: 1.0,
            diameter: domain.diameter(),
            grad_mean_bound: domain.radius + l2_distance(&domain.center, &w_true),
            moment: MomentSpec::unit(k)?,
        };
        Ok(LinearRegressionLoss {
            domain,
            w_true,
            consts,
        })
    }

    pub fn minimizer(&self) -> Vec<f64> {
        project_ball(&self.w_true, &self.domain)
    }

    /// Population risk is `|w - w_true|^2 / 2` plus a constant.
    pub fn population_excess_risk(&self, w: &[f64]) -> f64 {
        let ws = self.minimizer();
        0.5 * (l2_distance(w, &self.w_true).powi(2) - l2_distance(&ws, &self.w_true).powi(2))
    }
}

impl LossOracle for LinearRegressionLoss {
    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn sample_dim(&self) -> usize {
        self.domain.dim() + 1
    }

    fn value(&self, w: &[f64], x: &[f64]) -> f64 {
        let d = w.len();
        let r = dot(w, &x[..d]) - x[d];
        0.5 * r * r
    }

    fn grad(&self, w: &[f64], x: &[f64], out: &mut [f64]) {
        let d = w.len();
        let r = dot(w, &x[..d]) - x[d];
        for (o, a) in out.iter_mut().zip(&x[..d]) {
            *o = r * a;
        }
    }

    fn constants(&self) -> &LossConstants {
        &self.consts
    }

    fn domain(&self) -> &Ball {
        &self.domain
    }
}

/// Builds a loss of the given kind; the regression loss needs `w_true`.
pub fn make_loss(kind: LossKind, params: &LossParams) -> Result<Box<dyn LossOracle>> {
    let domain = params.domain.clone();
    Ok(match kind {
        LossKind::Quadratic => Box::new(QuadraticLoss::new(
            domain,
            params.data_mean.clone(),
            params.k,
        )?),
        LossKind::Linear => Box::new(LinearLoss::new(domain, params.data_mean.clone(), params.k)?),
        LossKind::LinearRegression => {
            let w = params
                .w_true
                .clone()
                .ok_or_else(|| Error::invalid("linear regression needs w_true"))?;
            Box::new(LinearRegressionLoss::new(domain, w, params.k)?)
        }
    })
}
