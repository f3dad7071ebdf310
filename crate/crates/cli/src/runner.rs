//! Monte Carlo execution of a validated plan.

use std::collections::BTreeMap;
use std::time::Instant;

use htdp::instances::{
    gv_code, gv_target, packing_distribution, tv_and_kl, Codeword, FanoParams,
    LinearRegressionLoss, LossKind, PackingDistribution, QuadraticLoss, RegressionSource,
    SampleSource, StudentTDist,
};
use htdp::meanest::{
    cdp_hdme, cdp_nsme, dp_hdme, hdme, nsme, recommended_tau, HdmeConfig, NsmeConfig, TauInputs,
    TauMode,
};
use htdp::sco::{
    cdp_sco_convex_hdme, cdp_sco_convex_nsme, cdp_sco_strongly_convex, Ball, DriverOptions, ScoRun,
};
use htdp::stats::l2_distance;
use htdp::{Dataset, RngStream};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, BudgetKind, ExperimentConfig, GridPoint, Plan, Task};
use crate::error::{CliError, Result};
use crate::ids::DistributionSpec;

/// One trial at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub task: String,
    pub algorithm: String,
    pub n: usize,
    pub d: usize,
    pub k: f64,
    pub rho_or_eps: f64,
    pub tau: Option<f64>,
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub eta: Option<f64>,
    pub q: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub metric_name: String,
    /// NaN when the trial failed; the reason is in `warnings`.
    pub metric_value: f64,
    pub stderr: Option<f64>,
    /// Composed ledger total; zero for non-private runs.
    pub budget_spent: f64,
    pub runtime_ms: f64,
    pub warnings: String,
}

/// Output of one trial before it is stamped with its grid coordinates.
struct Outcome {
    metric_name: &'static str,
    metric_value: f64,
    tau: Option<f64>,
    iterations: Option<usize>,
    eta: Option<f64>,
    budget_spent: f64,
    warnings: Vec<String>,
}

impl Outcome {
    fn metric(metric_name: &'static str, metric_value: f64) -> Self {
        Outcome {
            metric_name,
            metric_value,
            tau: None,
            iterations: None,
            eta: None,
            budget_spent: 0.0,
            warnings: Vec::new(),
        }
    }
}

/// `a` and `b` are equal or adjacent doubles.
pub fn within_one_ulp(a: f64, b: f64) -> bool {
    a == b
        || (a.is_finite()
            && b.is_finite()
            && a.signum() == b.signum()
            && a.to_bits().abs_diff(b.to_bits()) <= 1)
}

/// Random stream of one trial, derived from parameter values rather than
/// positions so growing a grid leaves existing trials untouched.
pub fn trial_stream(master_seed: u64, plan: &Plan, g: &GridPoint, trial: usize) -> RngStream {
    let q = g.q.map_or_else(|| "-".to_string(), |q| q.to_string());
    RngStream::new(master_seed)
        .child(plan.task.name())
        .child(plan.algorithm.name())
        .child(format_args!("n={}", g.n))
        .child(format_args!("d={}", g.d))
        .child(format_args!("k={}", g.k))
        .child(format_args!("budget={}", g.budget))
        .child(format_args!("q={q}"))
        .indexed("trial", trial as u64)
}

fn code_stream(master_seed: u64, d: usize) -> RngStream {
    RngStream::new(master_seed)
        .child("lower-bound")
        .child("code")
        .indexed("d", d as u64)
}

/// Validates `config` and runs every (grid point, trial) pair.
///
/// Rows come back sorted by grid point then trial, whatever the number of
/// workers. A failing trial yields a row with a NaN metric and the error in
/// its warnings; only an invalid configuration or a budget audit mismatch
/// aborts the run.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let plan = config.validate()?;
    let grid = plan.grid();

    let mut code_table = CodeTable::new();
    if plan.task == Task::LowerBound {
        for &d in &config.d {
            code_table.entry(d).or_insert_with(|| {
                gv_code(d, &code_stream(config.master_seed, d)).map_err(|e| e.to_string())
            });
        }
    }

    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|gi| (0..config.trials).map(move |t| (gi, t)))
        .collect();
    let run = |&(gi, t): &(usize, usize)| run_trial(&plan, &grid[gi], t, &code_table);
    let rows = execute(config.workers, &jobs, run)?;

    audit(&plan, &rows)?;
    Ok(rows)
}

#[cfg(feature = "parallel")]
fn execute<F>(workers: Option<usize>, jobs: &[(usize, usize)], f: F) -> Result<Vec<ResultRow>>
where
    F: Fn(&(usize, usize)) -> ResultRow + Sync + Send,
{
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    // Indexed collect keeps job order regardless of scheduling.
    Ok(pool.install(|| jobs.par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn execute<F>(_workers: Option<usize>, jobs: &[(usize, usize)], f: F) -> Result<Vec<ResultRow>>
where
    F: Fn(&(usize, usize)) -> ResultRow,
{
    Ok(jobs.iter().map(f).collect())
}

fn audit(plan: &Plan, rows: &[ResultRow]) -> Result<()> {
    if plan.algorithm.budget_kind() == BudgetKind::None {
        return Ok(());
    }
    for r in rows.iter().filter(|r| r.metric_value.is_finite()) {
        if !within_one_ulp(r.budget_spent, r.rho_or_eps) {
            return Err(CliError::Runtime(format!(
                "budget audit failed: {} at n = {}, trial {} spent {} of {}",
                r.algorithm, r.n, r.trial, r.budget_spent, r.rho_or_eps
            )));
        }
    }
    Ok(())
}

type CodeTable = BTreeMap<usize, std::result::Result<Vec<Codeword>, String>>;

fn run_trial(plan: &Plan, g: &GridPoint, trial: usize, codes: &CodeTable) -> ResultRow {
    let c = &plan.config;
    let stream = trial_stream(c.master_seed, plan, g, trial);
    let start = c.timing.then(Instant::now);
    let outcome = match plan.task {
        Task::MeanEst => mean_trial(plan, g, &stream),
        Task::Sco => sco_trial(plan, g, &stream),
        Task::LowerBound => lower_bound_trial(plan, g, trial, &stream, codes),
    };
    let runtime_ms = start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3);
    let metric_name = match plan.task {
        Task::MeanEst => "l2_error",
        Task::Sco => "excess_risk",
        Task::LowerBound if plan.algorithm == Algorithm::Fano => "fano_bound",
        Task::LowerBound => "packing_l2_error",
    };
    let o = outcome.unwrap_or_else(|e| {
        log::warn!(
            "{} n={} d={} trial {trial}: {e}",
            plan.algorithm.name(),
            g.n,
            g.d
        );
        let mut o = Outcome::metric(metric_name, f64::NAN);
        o.warnings.push(format!("trial failed: {e}"));
        o
    });
    ResultRow {
        task: plan.task.name().to_string(),
        algorithm: plan.algorithm.name().to_string(),
        n: g.n,
        d: g.d,
        k: g.k,
        rho_or_eps: g.budget,
        tau: o.tau,
        t: o.iterations,
        eta: o.eta,
        q: g.q,
        trial,
        seed: stream.seed_u64(),
        metric_name: o.metric_name.to_string(),
        metric_value: o.metric_value,
        stderr: None,
        budget_spent: o.budget_spent,
        runtime_ms,
        warnings: o.warnings.join("; "),
    }
}

fn student_t(plan: &Plan, g: &GridPoint) -> htdp::Result<StudentTDist> {
    let mean = plan.distribution.mean(g.d);
    let dof = match plan.distribution {
        DistributionSpec::StudentT { dof: Some(dof), .. } => dof,
        _ => g.k + 0.1,
    };
    StudentTDist::with_dof(g.k, dof, g.d, mean)
}

/// Mixing weight of the packing distribution at this grid point.
fn packing_p(plan: &Plan, g: &GridPoint) -> f64 {
    match plan.distribution {
        DistributionSpec::Packing { p: Some(p) } => p,
        _ => ((g.d as f64).sqrt() / (g.n as f64 * g.budget.sqrt())).min(1.0),
    }
}

fn tau_for(plan: &Plan, g: &GridPoint, warnings: &mut Vec<String>) -> htdp::Result<f64> {
    if let Some(tau) = plan.config.tau {
        return Ok(tau);
    }
    let mode = match plan.algorithm {
        Algorithm::DpHdme => TauMode::DpHdme,
        _ => TauMode::CdpHdme,
    };
    let choice = recommended_tau(mode, &TauInputs::new(g.budget, g.n, g.d, g.k))?;
    warnings.extend(choice.warning());
    Ok(choice.tau)
}

/// Runs the configured estimator; returns the estimate, tau and budget spent.
fn estimate(
    plan: &Plan,
    g: &GridPoint,
    data: &Dataset,
    stream: &RngStream,
    warnings: &mut Vec<String>,
) -> htdp::Result<(Vec<f64>, f64, f64)> {
    let c = &plan.config;
    let tau = tau_for(plan, g, warnings)?;
    let mut rng = stream.child("mechanism").rng();
    let est = match plan.algorithm {
        Algorithm::Hdme => hdme(data, &HdmeConfig::new(tau, c.beta)?)?,
        Algorithm::CdpHdme => cdp_hdme(data, &HdmeConfig::new(tau, c.beta)?, g.budget, &mut rng)?,
        Algorithm::DpHdme => dp_hdme(data, &HdmeConfig::new(tau, c.beta)?, g.budget, &mut rng)?,
        Algorithm::Nsme => nsme(data, &NsmeConfig::with_smoothing(tau, c.smoothing_c)?)?,
        Algorithm::CdpNsme => cdp_nsme(
            data,
            &NsmeConfig::with_smoothing(tau, c.smoothing_c)?,
            g.budget,
            c.calibration.into(),
            &mut rng,
        )?,
        other => unreachable!("{} is not a mean estimator", other.name()),
    };
    let spent = est.budget.map_or(0.0, |b| b.primary());
    Ok((est.value, tau, spent))
}

fn mean_trial(plan: &Plan, g: &GridPoint, stream: &RngStream) -> htdp::Result<Outcome> {
    let source: Box<dyn SampleSource> = match plan.distribution {
        DistributionSpec::StudentT { .. } => Box::new(student_t(plan, g)?),
        DistributionSpec::Packing { .. } => {
            let half = g.d / 2;
            let nu = (0..g.d).map(|j| u8::from(j < half)).collect();
            Box::new(packing_distribution(nu, packing_p(plan, g), g.k)?)
        }
    };
    let data = source.sample_dataset(g.n, &stream.child("data"))?;
    let mut warnings = Vec::new();
    let (value, tau, spent) = estimate(plan, g, &data, stream, &mut warnings)?;
    Ok(Outcome {
        tau: Some(tau),
        budget_spent: spent,
        warnings,
        ..Outcome::metric("l2_error", l2_distance(&value, &source.mean()))
    })
}

fn sco_trial(plan: &Plan, g: &GridPoint, stream: &RngStream) -> htdp::Result<Outcome> {
    let c = &plan.config;
    let spec = plan.loss.as_ref().expect("validated sco plan has a loss");
    let domain = Ball::origin(g.d, spec.radius)?;
    let opts = DriverOptions {
        beta: c.beta,
        max_iterations: c.max_iterations,
        smoothing_c: c.smoothing_c,
        calibration: c.calibration.into(),
        w0: None,
    };
    let data_stream = stream.child("data");
    let mean = plan.distribution.mean(g.d);
    let drive = |data: &Dataset, loss: &dyn htdp::sco::LossOracle| -> htdp::Result<ScoRun> {
        let s = stream.child("driver");
        match plan.algorithm {
            Algorithm::ScoConvexHdme => cdp_sco_convex_hdme(data, loss, g.budget, &opts, &s),
            Algorithm::ScoConvexNsme => cdp_sco_convex_nsme(
                data,
                loss,
                g.budget,
                g.q.expect("nsme grid carries q"),
                &opts,
                &s,
            ),
            Algorithm::ScoStronglyConvex => {
                cdp_sco_strongly_convex(data, loss, g.budget, &opts, &s)
            }
            other => unreachable!("{} is not an sco driver", other.name()),
        }
    };
    let (run, risk) = match spec.kind {
        LossKind::Quadratic => {
            let loss = QuadraticLoss::new(domain, mean, g.k)?;
            let data = student_t(plan, g)?.sample_dataset(g.n, &data_stream)?;
            let run = drive(&data, &loss)?;
            let risk = loss.population_excess_risk(&run.w_priv);
            (run, risk)
        }
        LossKind::LinearRegression => {
            let loss = LinearRegressionLoss::new(domain, mean.clone(), g.k)?;
            let data = RegressionSource::new(mean, g.k)?.sample_dataset(g.n, &data_stream)?;
            let run = drive(&data, &loss)?;
            let risk = loss.population_excess_risk(&run.w_priv);
            (run, risk)
        }
        LossKind::Linear => unreachable!("rejected during validation"),
    };
    let spent = run.ledger.compose()?.primary();
    Ok(Outcome {
        tau: Some(run.schedule.tau),
        iterations: Some(run.schedule.iterations),
        eta: Some(run.schedule.step_size),
        budget_spent: spent,
        warnings: run.warnings,
        ..Outcome::metric("excess_risk", risk)
    })
}

fn lower_bound_trial(
    plan: &Plan,
    g: &GridPoint,
    trial: usize,
    stream: &RngStream,
    codes: &CodeTable,
) -> htdp::Result<Outcome> {
    let code = codes[&g.d]
        .as_ref()
        .map_err(|e| htdp::Error::InvalidArgument(e.clone()))?;
    let mut warnings = Vec::new();
    if code.len() < gv_target(g.d) {
        warnings.push(format!(
            "packing has {} of {} codewords",
            code.len(),
            gv_target(g.d)
        ));
    }
    let p = packing_p(plan, g);
    let members: Vec<PackingDistribution> = code
        .iter()
        .map(|nu| packing_distribution(nu.clone(), p, g.k))
        .collect::<htdp::Result<_>>()?;

    if plan.algorithm == Algorithm::Fano {
        let means: Vec<Vec<f64>> = members.iter().map(PackingDistribution::mean_vec).collect();
        let mut r = f64::INFINITY;
        for i in 0..means.len() {
            for j in i + 1..means.len() {
                r = r.min(l2_distance(&means[i], &means[j]));
            }
        }
        let (pa, pb) = members[0].joint_pmf(&members[1]);
        let (alpha, beta_kl) = tv_and_kl(&pa, &pb)?;
        let bound = htdp::instances::fano_bound(&FanoParams {
            r,
            m_count: members.len(),
            alpha,
            beta_kl,
            rho: g.budget,
            n: g.n,
        })?;
        return Ok(Outcome {
            warnings,
            ..Outcome::metric("fano_bound", bound)
        });
    }

    let member = &members[trial % members.len()];
    let data = member.sample_dataset(g.n, &stream.child("data"))?;
    let (value, tau, spent) = estimate(plan, g, &data, stream, &mut warnings)?;
    Ok(Outcome {
        tau: Some(tau),
        budget_spent: spent,
        warnings,
        ..Outcome::metric("packing_l2_error", l2_distance(&value, &member.mean_vec()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ulp_comparison() {
        assert!(within_one_ulp(1.0, 1.0));
        assert!(within_one_ulp(1.0, 1.0 + f64::EPSILON));
        assert!(!within_one_ulp(1.0, 1.0 + 2.0 * f64::EPSILON));
        assert!(!within_one_ulp(f64::NAN, f64::NAN));
    }
}
