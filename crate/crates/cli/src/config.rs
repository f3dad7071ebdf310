//! Experiment configuration: JSON file, flag overrides and validation.

use std::path::{Path, PathBuf};

use htdp::meanest::Calibration;
use htdp::sco::MAX_ITERATIONS;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::ids::{DistributionSpec, LossSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    MeanEst,
    Sco,
    LowerBound,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::MeanEst => "mean-est",
            Task::Sco => "sco",
            Task::LowerBound => "lower-bound",
        }
    }

    fn default_algorithm(self) -> &'static str {
        match self {
            Task::MeanEst => "cdp_hdme",
            Task::Sco => "cdp_sco_convex_hdme",
            Task::LowerBound => "fano",
        }
    }

    fn default_distribution(self) -> &'static str {
        match self {
            Task::LowerBound => "packing",
            _ => "student_t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    Paper,
    #[default]
    Exact,
}

impl From<CalibrationMode> for Calibration {
    fn from(c: CalibrationMode) -> Self {
        match c {
            CalibrationMode::Paper => Calibration::Paper,
            CalibrationMode::Exact => Calibration::Exact,
        }
    }
}

/// Everything a run needs. Fields missing from the JSON file take the
/// defaults below; the task's defaults fill `algorithm` and `distribution`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Option<Task>,
    pub algorithm: Option<String>,
    pub distribution: Option<String>,
    pub loss: Option<String>,
    pub n: Vec<usize>,
    pub d: Vec<usize>,
    pub k: Vec<f64>,
    pub rho: Option<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub q: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub calibration: CalibrationMode,
    /// Fixed truncation scale instead of the algorithm's schedule.
    pub tau: Option<f64>,
    /// Failure probability for median-of-means batching.
    pub beta: f64,
    pub smoothing_c: f64,
    pub max_iterations: usize,
    /// Record wall-clock time per trial (makes output nondeterministic).
    pub timing: bool,
    /// Worker threads; all available cores when absent.
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: None,
            algorithm: None,
            distribution: None,
            loss: None,
            n: vec![1024],
            d: vec![2],
            k: vec![2.0],
            rho: None,
            eps: None,
            q: vec![1.0],
            trials: 1,
            master_seed: 0,
            out: None,
            format: OutputFormat::Csv,
            calibration: CalibrationMode::Exact,
            tau: None,
            beta: 0.1,
            smoothing_c: 1.0,
            max_iterations: MAX_ITERATIONS,
            timing: false,
            workers: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_err(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    /// Checks every field against the preconditions of the operations it
    /// will reach, so a sweep never fails on a bad grid value midway.
    pub fn validate(&self) -> Result<Plan> {
        let task = self
            .task
            .ok_or_else(|| config_err("no task given (mean-est, sco or lower-bound)"))?;
        let algorithm = Algorithm::parse(
            task,
            self.algorithm
                .as_deref()
                .unwrap_or(task.default_algorithm()),
        )?;
        let distribution = DistributionSpec::parse(
            self.distribution
                .as_deref()
                .unwrap_or(task.default_distribution()),
        )?;

        match (task, &distribution) {
            (Task::LowerBound, DistributionSpec::StudentT { .. }) => {
                return Err(config_err(
                    "the lower-bound lab runs on the packing distribution",
                ))
            }
            (Task::Sco, DistributionSpec::Packing { .. }) => {
                return Err(config_err("sco runs on Student-t data"))
            }
            _ => {}
        }

        let loss = match task {
            Task::Sco => {
                let spec = LossSpec::parse(self.loss.as_deref().unwrap_or("quadratic"))?;
                if spec.kind == htdp::instances::LossKind::Linear {
                    return Err(config_err(
                        "the linear loss is only used inside the lower-bound lab",
                    ));
                }
                Some(spec)
            }
            _ => {
                if self.loss.is_some() {
                    return Err(config_err(format!("task {} takes no loss", task.name())));
                }
                None
            }
        };
        if algorithm == Algorithm::ScoStronglyConvex {
            if let Some(LossSpec { kind, .. }) = &loss {
                if *kind != htdp::instances::LossKind::Quadratic
                    && *kind != htdp::instances::LossKind::LinearRegression
                {
                    return Err(config_err(
                        "the strongly convex driver needs a strongly convex loss",
                    ));
                }
            }
        }

        nonempty("n", &self.n)?;
        nonempty("d", &self.d)?;
        nonempty("k", &self.k)?;
        if let Some(&n) = self.n.iter().find(|&&n| n < 2) {
            return Err(config_err(format!("n must be at least 2, got {n}")));
        }
        if let Some(&d) = self.d.iter().find(|&&d| d < 1) {
            return Err(config_err(format!("d must be at least 1, got {d}")));
        }
        if task == Task::LowerBound {
            if let Some(&d) = self.d.iter().find(|&&d| d < 8 || d % 2 != 0) {
                return Err(config_err(format!(
                    "packing dimension must be even and at least 8, got {d}"
                )));
            }
        }
        if let Some(&k) = self.k.iter().find(|&&k| !(k.is_finite() && k >= 2.0)) {
            return Err(config_err(format!("k must be at least 2, got {k}")));
        }
        if let DistributionSpec::StudentT { k: Some(_), .. } = distribution {
            if self.k.len() > 1 {
                return Err(config_err(
                    "distribution fixes k; the k grid must have a single value",
                ));
            }
        }
        if let DistributionSpec::StudentT { dof: Some(dof), .. } = distribution {
            if let Some(&k) = self.k.iter().find(|&&k| dof <= k) {
                return Err(config_err(format!(
                    "dof = {dof} must exceed every k, got {k}"
                )));
            }
        }

        let budget = match (algorithm.budget_kind(), &self.rho, &self.eps) {
            (BudgetKind::Epsilon, _, Some(eps)) => BudgetGrid::Epsilon(positive_grid("eps", eps)?),
            (BudgetKind::Epsilon, _, None) => {
                return Err(config_err(format!(
                    "{} needs an eps grid",
                    algorithm.name()
                )))
            }
            (_, _, Some(_)) => {
                return Err(config_err(format!(
                    "{} is parameterized by rho, not eps",
                    algorithm.name()
                )))
            }
            (_, Some(rho), None) => BudgetGrid::Rho(positive_grid("rho", rho)?),
            (_, None, None) => BudgetGrid::Rho(vec![1.0]),
        };

        let q = if algorithm.uses_q() {
            nonempty("q", &self.q)?;
            if let Some(&q) = self.q.iter().find(|&&q| !(0.5..=2.0).contains(&q)) {
                return Err(config_err(format!("q must lie in [0.5, 2], got {q}")));
            }
            self.q.iter().map(|&q| Some(q)).collect()
        } else {
            vec![None]
        };

        if self.trials < 1 {
            return Err(config_err("trials must be at least 1"));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(config_err(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        if !(self.smoothing_c.is_finite() && self.smoothing_c > 0.0) {
            return Err(config_err(format!(
                "smoothing_c must be positive, got {}",
                self.smoothing_c
            )));
        }
        if let Some(tau) = self.tau {
            if !(tau.is_finite() && tau > 0.0) {
                return Err(config_err(format!("tau must be positive, got {tau}")));
            }
            if task == Task::Sco {
                return Err(config_err("sco drivers choose tau from their schedules"));
            }
        }
        if self.max_iterations < 1 {
            return Err(config_err("max_iterations must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(config_err("workers must be at least 1"));
        }

        Ok(Plan {
            task,
            algorithm,
            distribution,
            loss,
            budget,
            q,
            config: self.clone(),
        })
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        Err(config_err(format!("grid '{name}' is empty")))
    } else {
        Ok(())
    }
}

fn positive_grid(name: &str, v: &[f64]) -> Result<Vec<f64>> {
    nonempty(name, v)?;
    match v.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        Some(x) => Err(config_err(format!(
            "{name} values must be positive, got {x}"
        ))),
        None => Ok(v.to_vec()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    Rho,
    Epsilon,
    /// Non-private estimators; the rho grid only sets the truncation scale.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BudgetGrid {
    Rho(Vec<f64>),
    Epsilon(Vec<f64>),
}

impl BudgetGrid {
    pub fn values(&self) -> &[f64] {
        match self {
            BudgetGrid::Rho(v) | BudgetGrid::Epsilon(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Hdme,
    CdpHdme,
    DpHdme,
    Nsme,
    CdpNsme,
    ScoConvexHdme,
    ScoConvexNsme,
    ScoStronglyConvex,
    Fano,
}

impl Algorithm {
    fn parse(task: Task, s: &str) -> Result<Self> {
        use Algorithm::*;
        let alg = match s {
            "hdme" => Hdme,
            "cdp_hdme" => CdpHdme,
            "dp_hdme" => DpHdme,
            "nsme" => Nsme,
            "cdp_nsme" => CdpNsme,
            "cdp_sco_convex_hdme" => ScoConvexHdme,
            "cdp_sco_convex_nsme" => ScoConvexNsme,
            "cdp_sco_strongly_convex" => ScoStronglyConvex,
            "fano" => Fano,
            other => return Err(config_err(format!("unknown algorithm '{other}'"))),
        };
        let ok = match task {
            Task::MeanEst => matches!(alg, Hdme | CdpHdme | DpHdme | Nsme | CdpNsme),
            Task::Sco => matches!(alg, ScoConvexHdme | ScoConvexNsme | ScoStronglyConvex),
            Task::LowerBound => matches!(alg, Fano | CdpHdme | DpHdme),
        };
        if ok {
            Ok(alg)
        } else {
            Err(config_err(format!(
                "algorithm '{s}' is not available for task {}",
                task.name()
            )))
        }
    }

    pub fn name(self) -> &'static str {
        use Algorithm::*;
        match self {
            Hdme => "hdme",
            CdpHdme => "cdp_hdme",
            DpHdme => "dp_hdme",
            Nsme => "nsme",
            CdpNsme => "cdp_nsme",
            ScoConvexHdme => "cdp_sco_convex_hdme",
            ScoConvexNsme => "cdp_sco_convex_nsme",
            ScoStronglyConvex => "cdp_sco_strongly_convex",
            Fano => "fano",
        }
    }

    pub fn budget_kind(self) -> BudgetKind {
        match self {
            Algorithm::DpHdme => BudgetKind::Epsilon,
            Algorithm::Hdme | Algorithm::Nsme | Algorithm::Fano => BudgetKind::None,
            _ => BudgetKind::Rho,
        }
    }

    pub fn uses_q(self) -> bool {
        self == Algorithm::ScoConvexNsme
    }
}

/// A validated configuration with its identifiers resolved.
#[derive(Debug, Clone)]
pub struct Plan {
    pub task: Task,
    pub algorithm: Algorithm,
    pub distribution: DistributionSpec,
    pub loss: Option<LossSpec>,
    pub budget: BudgetGrid,
    pub q: Vec<Option<f64>>,
    pub config: ExperimentConfig,
}

/// One point of the parameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub n: usize,
    pub d: usize,
    pub k: f64,
    pub budget: f64,
    pub q: Option<f64>,
}

impl Plan {
    /// Grid points in canonical order: n, then d, k, budget, q.
    pub fn grid(&self) -> Vec<GridPoint> {
        let c = &self.config;
        let ks: Vec<f64> = match self.distribution {
            DistributionSpec::StudentT { k: Some(k), .. } => vec![k],
            _ => c.k.clone(),
        };
        let mut out = Vec::new();
        for &n in &c.n {
            for &d in &c.d {
                for &k in &ks {
                    for &budget in self.budget.values() {
                        for &q in &self.q {
                            out.push(GridPoint { n, d, k, budget, q });
                        }
                    }
                }
            }
        }
        out
    }
}
