use super::loss::LossOracle;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::stats::mean_and_stderr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Monte Carlo excess risk `mean_i [l(w, x_i) - l(w_star, x_i)]` over held-out
/// samples, with its standard error.
pub fn excess_risk(
    loss: &dyn LossOracle,
    test_samples: &Dataset,
    w: &[f64],
    w_star: &[f64],
) -> Result<RiskEstimate> {
    if test_samples.n() == 0 {
        return Err(Error::invalid("excess risk needs at least one test sample"));
    }
    if w.len() != loss.dim() || w_star.len() != loss.dim() {
        return Err(Error::invalid(
            "parameter dimension does not match the loss",
        ));
    }
    let diffs: Vec<f64> = test_samples
        .rows()
        .map(|x| loss.value(w, x) - loss.value(w_star, x))
        .collect();
    let (value, stderr) = mean_and_stderr(&diffs).expect("nonempty");
    Ok(RiskEstimate { value, stderr })
}
