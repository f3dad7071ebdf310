//! Privacy budgets, composition and additive noise mechanisms.

mod budget;
mod mechanisms;

pub use budget::{
    cdp_to_approx_dp, compose, pure_to_cdp, split_budget, BudgetLedger, Charge, PrivacyBudget,
};
pub use mechanisms::{gaussian_mechanism, laplace_mechanism, sample_laplace, Sensitivity};
