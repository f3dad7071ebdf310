use super::loss::{Ball, LossOracle};
use crate::data::{batch_ranges, Dataset};
use crate::error::{Error, Result};
use crate::meanest::MeanEstimate;
use crate::par;
use crate::privacy::PrivacyBudget;
use crate::rng::RngStream;
use crate::stats::l2_distance;

/// Euclidean projection onto a ball.
pub fn project_ball(theta: &[f64], ball: &Ball) -> Vec<f64> {
    let dist = l2_distance(theta, &ball.center);
    if dist <= ball.radius {
        return theta.to_vec();
    }
    let scale = ball.radius / dist;
    theta
        .iter()
        .zip(&ball.center)
        .map(|(t, c)| c + scale * (t - c))
        .collect()
}

/// Which samples each iteration hands to the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Every step sees the whole dataset.
    Convex,
    /// Step `t` sees the `t`-th of `T` disjoint contiguous batches of size
    /// `floor(n / T)`; the remainder is unused.
    StronglyConvex,
}

/// Gradient mean estimator called once per iteration.
pub trait MeanOracle {
    /// Estimates the mean of the per-sample gradients in `grads`, drawing
    /// randomness only from `stream`.
    fn estimate(&self, grads: &Dataset, stream: &RngStream) -> Result<MeanEstimate>;
}

impl<F> MeanOracle for F
where
    F: Fn(&Dataset, &RngStream) -> Result<MeanEstimate>,
{
    fn estimate(&self, grads: &Dataset, stream: &RngStream) -> Result<MeanEstimate> {
        self(grads, stream)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScofParams {
    pub step_size: f64,
    pub iterations: usize,
    pub mode: SampleMode,
    /// Starting point; the domain center when absent.
    pub w0: Option<Vec<f64>>,
}

/// Iterates `w^0 .. w^T` with the oracle output that produced each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub mode: SampleMode,
    pub iterates: Vec<Vec<f64>>,
    /// `gradients[t]` moved `iterates[t]` to `iterates[t + 1]`.
    pub gradients: Vec<Vec<f64>>,
    pub budgets: Vec<Option<PrivacyBudget>>,
    /// Sample rows used at each step.
    pub batches: Vec<std::ops::Range<usize>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.iterates.len() - 1
    }

    /// `(1/T) sum_{t=1..T} w^t`.
    pub fn average(&self) -> Vec<f64> {
        let d = self.iterates[0].len();
        let t = self.steps().max(1) as f64;
        let mut acc = vec![0.0; d];
        for w in &self.iterates[1..] {
            for (a, v) in acc.iter_mut().zip(w) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= t);
        acc
    }

    pub fn last(&self) -> &[f64] {
        self.iterates.last().expect("trajectory holds w0")
    }
}

fn gradient_matrix(
    dataset: &Dataset,
    rows: std::ops::Range<usize>,
    loss: &dyn LossOracle,
    w: &[f64],
    mut buf: Vec<f64>,
) -> Dataset {
    let p = loss.dim();
    let count = rows.len();
    buf.resize(count * p, 0.0);
    const ROWS_PER_TASK: usize = 2048;
    par::for_each_chunk_mut(&mut buf, ROWS_PER_TASK * p, |ci, chunk| {
        let first = rows.start + ci * ROWS_PER_TASK;
        let q = dataset.d();
        let xs = &dataset.as_slice()[first * q..(first + chunk.len() / p) * q];
        loss.grad_rows(w, xs, chunk);
    });
    Dataset::from_parts_unchecked(buf, count, p)
}

/// Projected gradient descent where each gradient is replaced by the
/// oracle's estimate from the per-sample gradients at the current iterate.
///
/// Step `t` (1-based) draws from `rng.indexed("step", t)`.
pub fn scof<O: MeanOracle + ?Sized>(
    dataset: &Dataset,
    loss: &dyn LossOracle,
    oracle: &O,
    params: &ScofParams,
    rng: &RngStream,
) -> Result<Trajectory> {
    let domain = loss.domain();
    let t_total = params.iterations;
    if t_total == 0 {
        return Err(Error::invalid("iteration count must be at least 1"));
    }
    if !(params.step_size.is_finite() && params.step_size > 0.0) {
        return Err(Error::invalid(format!(
            "step size must be positive, got {}",
            params.step_size
        )));
    }
    if dataset.d() != loss.sample_dim() {
        return Err(Error::invalid(format!(
            "samples have {} columns, loss expects {}",
            dataset.d(),
            loss.sample_dim()
        )));
    }
    let w0 = params.w0.clone().unwrap_or_else(|| domain.center.clone());
    if !domain.contains(&w0) {
        return Err(Error::invalid(
            "starting point lies outside the constraint set",
        ));
    }

    let n = dataset.n();
    let batches: Vec<std::ops::Range<usize>> = match params.mode {
        SampleMode::Convex => vec![0..n; t_total],
        SampleMode::StronglyConvex => {
            if n < t_total {
                return Err(Error::TooFewSamples { n, m: t_total });
            }
            let size = n / t_total;
            // Equal batches over the first T * floor(n / T) rows.
            batch_ranges(size * t_total, t_total)?
        }
    };

    let mut iterates = Vec::with_capacity(t_total + 1);
    let mut gradients = Vec::with_capacity(t_total);
    let mut budgets = Vec::with_capacity(t_total);
    iterates.push(w0);
    let mut scratch = Vec::new();

    for (t, rows) in batches.iter().enumerate() {
        let w = iterates.last().expect("nonempty");
        let grads = gradient_matrix(dataset, rows.clone(), loss, w, scratch);
        let est = oracle.estimate(&grads, &rng.indexed("step", t as u64 + 1))?;
        scratch = grads.into_values();
        if est.value.len() != loss.dim() || est.value.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "oracle returned an invalid gradient at step {}",
                t + 1
            )));
        }
        let stepped: Vec<f64> = w
            .iter()
            .zip(&est.value)
            .map(|(wi, gi)| wi - params.step_size * gi)
            .collect();
        let next = project_ball(&stepped, domain);
        debug_assert!(domain.contains(&next));
        iterates.push(next);
        gradients.push(est.value);
        budgets.push(est.budget);
    }

    Ok(Trajectory {
        mode: params.mode,
        iterates,
        gradients,
        budgets,
        batches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn projection_examples() {
        let unit = Ball::origin(2, 1.0).unwrap();
        assert_eq!(project_ball(&[0.3, -0.4], &unit), vec![0.3, -0.4]);
        let p = project_ball(&[3.0, 4.0], &unit);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        let shifted = Ball::new(vec![1.0, 1.0], 2.0).unwrap();
        let p = project_ball(&[1.0, 5.0], &shifted);
        assert_eq!(p, vec![1.0, 3.0]);
    }

    proptest! {
        #[test]
        fn projection_is_feasible_and_nonexpansive(
            theta in prop::collection::vec(-10.0f64..10.0, 3),
            anchor in prop::collection::vec(-1.0f64..1.0, 3),
            radius in 0.1f64..3.0,
        ) {
            let ball = Ball::origin(3, radius).unwrap();
            let p = project_ball(&theta, &ball);
            prop_assert!(ball.contains(&p));
            let z = project_ball(&anchor, &ball);
            prop_assert!(l2_distance(&p, &z) <= l2_distance(&theta, &z) + 1e-12);
        }
    }
}
