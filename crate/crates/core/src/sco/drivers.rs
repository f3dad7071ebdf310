use super::framework::{scof, SampleMode, ScofParams, Trajectory};
use super::loss::LossOracle;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::meanest::{
    cdp_hdme, cdp_nsme, recommended_tau, Calibration, HdmeConfig, NsmeConfig, TauInputs, TauMode,
};
use crate::privacy::{split_budget, BudgetLedger};
use crate::rng::RngStream;

/// Hard cap on the iteration count of the convex drivers.
pub const MAX_ITERATIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DriverOptions {
    /// Failure probability handed to the median-of-means oracle.
    pub beta: f64,
    pub max_iterations: usize,
    /// Smoothing variance for the NSME oracle.
    pub smoothing_c: f64,
    pub calibration: Calibration,
    /// Starting point; the domain center when absent.
    pub w0: Option<Vec<f64>>,
}

impl Default for DriverOptions {
    fn default() -> Self {
        DriverOptions {
            beta: 0.1,
            max_iterations: MAX_ITERATIONS,
            smoothing_c: 1.0,
            calibration: Calibration::Exact,
            w0: None,
        }
    }
}

/// Parameters a driver resolved before running.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub tau: f64,
    /// Truncation formula value before the floor.
    pub tau_raw: f64,
    pub iterations: usize,
    /// Iteration formula value before rounding and clamping.
    pub iterations_raw: f64,
    pub step_size: f64,
    /// Budget charged by each oracle call.
    pub rho_per_step: f64,
    pub q: Option<f64>,
    /// Error proxy used to resolve `T` in the strongly convex driver.
    pub error_proxy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoRun {
    pub w_priv: Vec<f64>,
    pub trajectory: Trajectory,
    pub ledger: BudgetLedger,
    pub schedule: Schedule,
    pub warnings: Vec<String>,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_finite() && rho > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("rho must be positive, got {rho}")))
    }
}

fn ledger_from(trajectory: &Trajectory) -> Result<BudgetLedger> {
    let mut ledger = BudgetLedger::new();
    for (t, b) in trajectory.budgets.iter().enumerate() {
        let b =
            b.ok_or_else(|| Error::invalid(format!("oracle at step {} charged no budget", t + 1)))?;
        ledger.charge(format!("step {}", t + 1), b)?;
    }
    Ok(ledger)
}

/// Floors the convex iteration formula and clamps it to `[1, cap]`.
fn clamp_iterations(raw: f64, cap: usize, warnings: &mut Vec<String>) -> usize {
    if !(raw >= 1.0) {
        let msg = format!("iteration formula gives {raw:.4}; using T = 1");
        log::warn!("{msg}");
        warnings.push(msg);
        1
    } else if raw > cap as f64 {
        let msg = format!("iteration formula gives {raw:.4e}; capped at T = {cap}");
        log::warn!("{msg}");
        warnings.push(msg);
        cap
    } else {
        raw.floor() as usize
    }
}

#[allow(clippy::too_many_arguments)]
fn convex_run<F>(
    dataset: &Dataset,
    loss: &dyn LossOracle,
    rho: f64,
    mode: TauMode,
    q: Option<f64>,
    d_power: i32,
    opts: &DriverOptions,
    rng: &RngStream,
    oracle: F,
) -> Result<ScoRun>
where
    F: Fn(&Dataset, f64, f64, &RngStream) -> Result<crate::meanest::MeanEstimate>,
{
    check_rho(rho)?;
    let consts = *loss.constants();
    let (n, d) = (dataset.n(), loss.dim());
    let mut inputs = TauInputs::new(rho, n, d, consts.moment.k);
    inputs.diameter = consts.diameter;
    inputs.q = q.unwrap_or(1.0);
    let tau = recommended_tau(mode, &inputs)?;
    let mut warnings: Vec<String> = tau.warning().into_iter().collect();

    let r = consts.grad_mean_bound;
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(format!(
            "gradient-mean bound must be positive, got {r}"
        )));
    }
    let nf = n as f64;
    let iterations_raw = r * r * rho * nf * nf / (tau.tau * tau.tau * (d as f64).powi(d_power));
    let iterations = clamp_iterations(iterations_raw, opts.max_iterations.max(1), &mut warnings);
    let step_size = consts.diameter / (r * (iterations as f64).sqrt());
    let rho_step = split_budget(rho, iterations)?;

    let params = ScofParams {
        step_size,
        iterations,
        mode: SampleMode::Convex,
        w0: opts.w0.clone(),
    };
    let tau_v = tau.tau;
    let trajectory = scof(
        dataset,
        loss,
        &|g: &Dataset, s: &RngStream| oracle(g, tau_v, rho_step, s),
        &params,
        rng,
    )?;
    let ledger = ledger_from(&trajectory)?;
    Ok(ScoRun {
        w_priv: trajectory.average(),
        trajectory,
        ledger,
        schedule: Schedule {
            tau: tau.tau,
            tau_raw: tau.raw,
            iterations,
            iterations_raw,
            step_size,
            rho_per_step: rho_step,
            q,
            error_proxy: None,
        },
        warnings,
    })
}

/// Convex private SCO with the median-of-means oracle.
///
/// `tau = (sqrt(rho) n / (M d^(3/2)))^(1/k)`, `T = R^2 rho n^2 / (tau^2 d^4)`,
/// `eta = M / (R sqrt(T))`; returns the iterate average.
pub fn cdp_sco_convex_hdme(
    dataset: &Dataset,
    loss: &dyn LossOracle,
    rho: f64,
    opts: &DriverOptions,
    rng: &RngStream,
) -> Result<ScoRun> {
    let beta = opts.beta;
    convex_run(
        dataset,
        loss,
        rho,
        TauMode::ScoConvexHdme,
        None,
        4,
        opts,
        rng,
        |g, tau, r, s| cdp_hdme(g, &HdmeConfig::new(tau, beta)?, r, &mut s.rng()),
    )
}

/// Convex private SCO with the noise-smoothed oracle, `q` in `[0.5, 2]`.
///
/// `tau = (sqrt(rho) n / (M d^q))^(1/2)`, `T = R^2 rho n^2 / (tau^2 d^2)`,
/// `eta = M / (R sqrt(T))`; returns the iterate average.
pub fn cdp_sco_convex_nsme(
    dataset: &Dataset,
    loss: &dyn LossOracle,
    rho: f64,
    q: f64,
    opts: &DriverOptions,
    rng: &RngStream,
) -> Result<ScoRun> {
    if !(0.5..=2.0).contains(&q) {
        return Err(Error::invalid(format!("q must lie in [0.5, 2], got {q}")));
    }
    let (c, calibration) = (opts.smoothing_c, opts.calibration);
    convex_run(
        dataset,
        loss,
        rho,
        TauMode::ScoConvexNsme,
        Some(q),
        2,
        opts,
        rng,
        |g, tau, r, s| {
            cdp_nsme(
                g,
                &NsmeConfig::with_smoothing(tau, c)?,
                r,
                calibration,
                &mut s.rng(),
            )
        },
    )
}

/// How the strongly convex iteration count was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IterationResolution {
    /// Fixed point of the iteration formula.
    FixedPoint { value: f64 },
    /// The formula is undefined for these constants; `ceil(ln n)` is used.
    Fallback,
}

/// Mean-estimation error proxy at iteration count `t`: the high-probability
/// error of one oracle call on `n / t` samples with budget `rho / t`, with
/// the logarithmic factor `ln(n) ln(d + 1)`.
fn error_proxy(rho: f64, n: usize, d: usize, k: f64, t: f64) -> f64 {
    let nt = n as f64 / t;
    let rt = rho / t;
    let df = d as f64;
    let stat = (df / nt).sqrt();
    let private = df.sqrt() * (df.sqrt() / (rt.sqrt() * nt)).powf((k - 1.0) / k);
    (n as f64).ln() * (df + 1.0).ln() * (stat + private)
}

/// Resolves `T = ln((lambda + L) G / (lambda L)) / ln((lambda^2 + L^2 + lambda L) / (lambda + L)^2)`
/// where `G` depends on `T`.
///
/// The right-hand side decreases in `T`, so there is at most one fixed point.
/// Plain iteration from `T = 1` is tried first; when it does not settle
/// within 100 steps the fixed point is bracketed by bisection inside the
/// range where the formula is defined. Solutions below 1 resolve to 1.
/// Returns [`IterationResolution::Fallback`] when the numerator log is not
/// negative even at `T = 1`.
pub fn resolve_strongly_convex_iterations(
    lambda: f64,
    smoothness: f64,
    rho: f64,
    n: usize,
    d: usize,
    k: f64,
) -> IterationResolution {
    let (l, s) = (lambda, smoothness);
    let denom = ((l * l + s * s + l * s) / ((l + s) * (l + s))).ln();
    let map = |t: f64| -> Option<f64> {
        let g = error_proxy(rho, n, d, k, t);
        let num = ((l + s) * g / (l * s)).ln();
        (num < 0.0 && num.is_finite()).then(|| num / denom)
    };
    let upper = n as f64;
    let Some(first) = map(1.0) else {
        return IterationResolution::Fallback;
    };
    if first <= 1.0 {
        return IterationResolution::FixedPoint { value: 1.0 };
    }

    let mut t = 1.0;
    for _ in 0..100 {
        let Some(next) = map(t) else { break };
        let next = next.clamp(1.0, upper);
        if (next - t).abs() <= 1e-9 * t {
            return IterationResolution::FixedPoint { value: next };
        }
        t = next;
    }

    // Largest T (up to n) where the formula is defined; G grows with T.
    let mut hi = upper;
    if map(hi).is_none() {
        let mut lo = 1.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if map(mid).is_some() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi = lo;
    }
    let h = |t: f64| map(t).expect("inside the defined range") - t;
    if h(hi) >= 0.0 {
        return IterationResolution::FixedPoint { value: hi };
    }
    let mut lo = 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    IterationResolution::FixedPoint {
        value: 0.5 * (lo + hi),
    }
}

/// Strongly convex private SCO over disjoint batches.
///
/// `eta = 1 / (lambda + L)`, the truncation scale follows the strongly
/// convex schedule, each step spends `rho / T` on `floor(n / T)` fresh
/// samples, and the last iterate is returned.
pub fn cdp_sco_strongly_convex(
    dataset: &Dataset,
    loss: &dyn LossOracle,
    rho: f64,
    opts: &DriverOptions,
    rng: &RngStream,
) -> Result<ScoRun> {
    check_rho(rho)?;
    let consts = *loss.constants();
    let (lambda, smooth) = (consts.strong_convexity, consts.smoothness);
    if !(lambda > 0.0) {
        return Err(Error::invalid(
            "strongly convex driver needs a positive strong-convexity constant",
        ));
    }
    if !(smooth >= lambda) {
        return Err(Error::invalid(format!(
            "smoothness {smooth} is below strong convexity {lambda}"
        )));
    }
    let (n, d, k) = (dataset.n(), loss.dim(), consts.moment.k);
    let mut warnings = Vec::new();
    let (iterations_raw, iterations) =
        match resolve_strongly_convex_iterations(lambda, smooth, rho, n, d, k) {
            IterationResolution::FixedPoint { value } => (value, (value.ceil() as usize).max(1)),
            IterationResolution::Fallback => {
                let t = ((n as f64).ln().ceil() as usize).max(1);
                let msg = format!(
                    "iteration formula undefined for these constants; using T = ceil(ln n) = {t}"
                );
                log::warn!("{msg}");
                warnings.push(msg);
                (f64::NAN, t)
            }
        };
    if n < iterations {
        return Err(Error::TooFewSamples { n, m: iterations });
    }

    let mut inputs = TauInputs::new(rho, n, d, k);
    inputs.iterations = iterations;
    let tau = recommended_tau(TauMode::ScoStronglyConvex, &inputs)?;
    warnings.extend(tau.warning());

    let step_size = 1.0 / (lambda + smooth);
    let rho_step = split_budget(rho, iterations)?;
    let beta = opts.beta;
    let tau_v = tau.tau;
    let oracle = |g: &Dataset, s: &RngStream| {
        cdp_hdme(g, &HdmeConfig::new(tau_v, beta)?, rho_step, &mut s.rng())
    };
    let params = ScofParams {
        step_size,
        iterations,
        mode: SampleMode::StronglyConvex,
        w0: opts.w0.clone(),
    };
    let trajectory = scof(dataset, loss, &oracle, &params, rng)?;
    let ledger = ledger_from(&trajectory)?;
    Ok(ScoRun {
        w_priv: trajectory.last().to_vec(),
        trajectory,
        ledger,
        schedule: Schedule {
            tau: tau.tau,
            tau_raw: tau.raw,
            iterations,
            iterations_raw,
            step_size,
            rho_per_step: rho_step,
            q: None,
            error_proxy: Some(error_proxy(rho, n, d, k, iterations as f64)),
        },
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn formula(t: f64, rho: f64, n: usize, d: usize, k: f64) -> f64 {
        let g = error_proxy(rho, n, d, k, t);
        (2.0 * g).ln() / (0.75f64).ln()
    }

    #[test]
    fn resolved_iterations_are_fixed_points() {
        for &(n, k) in &[
            (1usize << 16, 2.0),
            (1 << 18, 2.0),
            (1 << 16, 4.0),
            (1 << 20, 3.0),
        ] {
            match resolve_strongly_convex_iterations(1.0, 1.0, 1.0, n, 2, k) {
                IterationResolution::FixedPoint { value } if value > 1.0 => {
                    assert!(
                        (formula(value, 1.0, n, 2, k) - value).abs() < 1e-6,
                        "n={n} k={k}"
                    );
                }
                other => panic!("n={n} k={k}: {other:?}"),
            }
        }
    }

    #[test]
    fn small_samples_fall_back() {
        assert_eq!(
            resolve_strongly_convex_iterations(1.0, 1.0, 1.0, 1024, 2, 2.0),
            IterationResolution::Fallback
        );
    }
}
