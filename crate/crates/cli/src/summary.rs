//! Per-grid-point aggregates and log-log rate fits.

use std::collections::BTreeMap;

use htdp::stats::{linear_fit, mean_and_stderr, median};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{config_err, Result};
use crate::runner::ResultRow;

/// Aggregate of one grid point. The slope columns describe the series the
/// point belongs to (all `n` at fixed other parameters) and are empty when
/// that series has a single `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: String,
    pub algorithm: String,
    pub n: usize,
    pub d: usize,
    pub k: f64,
    pub rho_or_eps: f64,
    pub q: Option<f64>,
    pub metric_name: String,
    pub trials: usize,
    /// Trials whose metric was not finite.
    pub failed: usize,
    pub median: f64,
    pub mean: f64,
    pub stderr: f64,
    pub slope: Option<f64>,
    pub slope_lo: Option<f64>,
    pub slope_hi: Option<f64>,
}

/// Least-squares slope of `ln median` on `ln n` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// Absent with only two points.
    pub interval: Option<(f64, f64)>,
}

pub fn log_log_slope(n: &[f64], y: &[f64]) -> Option<SlopeFit> {
    if n.iter().chain(y).any(|v| !(*v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (slope, _, se) = linear_fit(&lx, &ly)?;
    let interval = (lx.len() > 2).then(|| {
        let t = StudentsT::new(0.0, 1.0, (lx.len() - 2) as f64)
            .expect("positive degrees of freedom")
            .inverse_cdf(0.975);
        (slope - t * se, slope + t * se)
    });
    Some(SlopeFit { slope, interval })
}

type SeriesKey = (String, String, usize, u64, u64, Option<u64>, String);

fn series_key(r: &ResultRow) -> SeriesKey {
    (
        r.task.clone(),
        r.algorithm.clone(),
        r.d,
        r.k.to_bits(),
        r.rho_or_eps.to_bits(),
        r.q.map(f64::to_bits),
        r.metric_name.clone(),
    )
}

/// Median, mean and standard error per grid point, in first-seen order,
/// plus a slope fit over `n` for every series with at least two sizes.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    if rows.is_empty() {
        return Err(config_err("nothing to summarize: no result rows"));
    }
    let mut order: Vec<(SeriesKey, usize)> = Vec::new();
    let mut groups: BTreeMap<(SeriesKey, usize), Vec<&ResultRow>> = BTreeMap::new();
    for r in rows {
        let key = (series_key(r), r.n);
        let g = groups.entry(key.clone()).or_default();
        if g.is_empty() {
            order.push(key);
        }
        g.push(r);
    }

    let mut out: Vec<SummaryRow> = order
        .iter()
        .map(|key| {
            let g = &groups[key];
            let first = g[0];
            let vals: Vec<f64> = g
                .iter()
                .map(|r| r.metric_value)
                .filter(|v| v.is_finite())
                .collect();
            let (mean, stderr) = mean_and_stderr(&vals).unwrap_or((f64::NAN, f64::NAN));
            SummaryRow {
                task: first.task.clone(),
                algorithm: first.algorithm.clone(),
                n: first.n,
                d: first.d,
                k: first.k,
                rho_or_eps: first.rho_or_eps,
                q: first.q,
                metric_name: first.metric_name.clone(),
                trials: g.len(),
                failed: g.len() - vals.len(),
                median: median(&vals).unwrap_or(f64::NAN),
                mean,
                stderr,
                slope: None,
                slope_lo: None,
                slope_hi: None,
            }
        })
        .collect();

    let mut series: BTreeMap<SeriesKey, Vec<usize>> = BTreeMap::new();
    for (i, (key, _)) in order.iter().enumerate() {
        series.entry(key.clone()).or_default().push(i);
    }
    for idx in series.values().filter(|idx| idx.len() >= 2) {
        let n: Vec<f64> = idx.iter().map(|&i| out[i].n as f64).collect();
        let y: Vec<f64> = idx.iter().map(|&i| out[i].median).collect();
        if let Some(fit) = log_log_slope(&n, &y) {
            for &i in idx {
                out[i].slope = Some(fit.slope);
                out[i].slope_lo = fit.interval.map(|c| c.0);
                out[i].slope_hi = fit.interval.map(|c| c.1);
            }
        }
    }
    Ok(out)
}
