//! Projected gradient descent driven by a mean-estimation oracle, and the
//! private SCO drivers built on it.

mod drivers;
mod framework;
mod loss;
mod risk;

pub use drivers::{
    cdp_sco_convex_hdme, cdp_sco_convex_nsme, cdp_sco_strongly_convex,
    resolve_strongly_convex_iterations, DriverOptions, IterationResolution, Schedule, ScoRun,
    MAX_ITERATIONS,
};
pub use framework::{project_ball, scof, MeanOracle, SampleMode, ScofParams, Trajectory};
pub use loss::{Ball, LossConstants, LossOracle};
pub use risk::{excess_risk, RiskEstimate};
