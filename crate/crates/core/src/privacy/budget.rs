use std::fmt;

use crate::error::{Error, Result};
use crate::stats::compensated_sum;

/// A privacy guarantee under one of the supported notions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrivacyBudget {
    /// `(epsilon, 0)`-differential privacy.
    PureDp { epsilon: f64 },
    /// `rho`-zero-concentrated differential privacy.
    Zcdp { rho: f64 },
    /// `(epsilon, delta)`-differential privacy.
    ApproxDp { epsilon: f64, delta: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl PrivacyBudget {
    pub fn pure(epsilon: f64) -> Result<Self> {
        Ok(PrivacyBudget::PureDp {
            epsilon: positive("epsilon", epsilon)?,
        })
    }

    pub fn zcdp(rho: f64) -> Result<Self> {
        Ok(PrivacyBudget::Zcdp {
            rho: positive("rho", rho)?,
        })
    }

    pub fn approx(epsilon: f64, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::invalid(format!(
                "delta must lie in (0, 1), got {delta}"
            )));
        }
        Ok(PrivacyBudget::ApproxDp {
            epsilon: positive("epsilon", epsilon)?,
            delta,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            PrivacyBudget::PureDp { .. } => "pure-dp",
            PrivacyBudget::Zcdp { .. } => "zcdp",
            PrivacyBudget::ApproxDp { .. } => "approx-dp",
        }
    }

    /// The scalar that composes additively: epsilon or rho.
    pub fn primary(&self) -> f64 {
        match *self {
            PrivacyBudget::PureDp { epsilon } | PrivacyBudget::ApproxDp { epsilon, .. } => epsilon,
            PrivacyBudget::Zcdp { rho } => rho,
        }
    }
}

impl fmt::Display for PrivacyBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrivacyBudget::PureDp { epsilon } => write!(f, "eps={epsilon}"),
            PrivacyBudget::Zcdp { rho } => write!(f, "rho={rho}"),
            PrivacyBudget::ApproxDp { epsilon, delta } => write!(f, "eps={epsilon},delta={delta}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Charge {
    pub label: String,
    pub budget: PrivacyBudget,
}

/// Append-only record of privacy charges under a single notion.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BudgetLedger {
    entries: Vec<Charge>,
}

impl BudgetLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, label: impl Into<String>, budget: PrivacyBudget) -> Result<()> {
        if let Some(first) = self.entries.first() {
            if first.budget.kind() != budget.kind() {
                return Err(Error::MixedBudgets {
                    first: first.budget.kind(),
                    other: budget.kind(),
                });
            }
        }
        self.entries.push(Charge {
            label: label.into(),
            budget,
        });
        Ok(())
    }

    pub fn entries(&self) -> &[Charge] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Concatenates another worker's ledger onto this one.
    pub fn merge(&mut self, other: BudgetLedger) -> Result<()> {
        for c in other.entries {
            self.charge(c.label, c.budget)?;
        }
        Ok(())
    }

    pub fn compose(&self) -> Result<PrivacyBudget> {
        compose(&self.entries)
    }
}

/// Basic composition: epsilons (and deltas) add under DP, rhos add under zCDP.
pub fn compose(charges: &[Charge]) -> Result<PrivacyBudget> {
    let first = charges.first().ok_or(Error::EmptyLedger)?.budget;
    if let Some(c) = charges.iter().find(|c| c.budget.kind() != first.kind()) {
        return Err(Error::MixedBudgets {
            first: first.kind(),
            other: c.budget.kind(),
        });
    }
    let total = compensated_sum(charges.iter().map(|c| c.budget.primary()));
    Ok(match first {
        PrivacyBudget::PureDp { .. } => PrivacyBudget::PureDp { epsilon: total },
        PrivacyBudget::Zcdp { .. } => PrivacyBudget::Zcdp { rho: total },
        PrivacyBudget::ApproxDp { .. } => {
            let delta = compensated_sum(charges.iter().map(|c| match c.budget {
                PrivacyBudget::ApproxDp { delta, .. } => delta,
                _ => unreachable!("ledger is homogeneous"),
            }));
            PrivacyBudget::ApproxDp {
                epsilon: total,
                delta,
            }
        }
    })
}

/// An `epsilon`-DP mechanism is `epsilon^2 / 2`-zCDP.
pub fn pure_to_cdp(epsilon: f64) -> Result<f64> {
    let eps = positive("epsilon", epsilon)?;
    Ok(0.5 * eps * eps)
}

/// `rho`-zCDP implies `(rho + 2 sqrt(rho ln(1/delta)), delta)`-DP.
pub fn cdp_to_approx_dp(rho: f64, delta: f64) -> Result<(f64, f64)> {
    let rho = positive("rho", rho)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    Ok((rho + 2.0 * (rho * (1.0 / delta).ln()).sqrt(), delta))
}

/// Per-step share of a zCDP budget over `steps` compositions.
pub fn split_budget(rho: f64, steps: usize) -> Result<f64> {
    let rho = positive("rho", rho)?;
    if steps == 0 {
        return Err(Error::invalid("cannot split a budget over zero steps"));
    }
    Ok(rho / steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ledger_of(budgets: &[PrivacyBudget]) -> BudgetLedger {
        let mut l = BudgetLedger::new();
        for (i, b) in budgets.iter().enumerate() {
            l.charge(format!("c{i}"), *b).unwrap();
        }
        l
    }

    fn ulp(x: f64) -> f64 {
        f64::from_bits(x.to_bits() + 1) - x
    }

    #[test]
    fn composition_examples() {
        let ten = ledger_of(&[PrivacyBudget::zcdp(0.1).unwrap(); 10]);
        assert_eq!(ten.compose().unwrap(), PrivacyBudget::Zcdp { rho: 1.0 });

        let one = ledger_of(&[PrivacyBudget::zcdp(0.37).unwrap()]);
        assert_eq!(one.compose().unwrap(), PrivacyBudget::Zcdp { rho: 0.37 });

        let eps = ledger_of(&[
            PrivacyBudget::pure(0.3).unwrap(),
            PrivacyBudget::pure(0.7).unwrap(),
        ]);
        assert_eq!(
            eps.compose().unwrap(),
            PrivacyBudget::PureDp { epsilon: 1.0 }
        );
    }

    #[test]
    fn mixed_and_empty_ledgers_rejected() {
        let mut l = ledger_of(&[PrivacyBudget::zcdp(0.1).unwrap()]);
        assert!(matches!(
            l.charge("x", PrivacyBudget::pure(1.0).unwrap()),
            Err(Error::MixedBudgets { .. })
        ));
        let charges = vec![
            Charge {
                label: "a".into(),
                budget: PrivacyBudget::Zcdp { rho: 0.1 },
            },
            Charge {
                label: "b".into(),
                budget: PrivacyBudget::PureDp { epsilon: 0.1 },
            },
        ];
        assert!(matches!(compose(&charges), Err(Error::MixedBudgets { .. })));
        assert_eq!(BudgetLedger::new().compose(), Err(Error::EmptyLedger));
    }

    #[test]
    fn conversions() {
        assert_eq!(pure_to_cdp(1.0).unwrap(), 0.5);
        assert_eq!(pure_to_cdp(2.0).unwrap(), 2.0);
        assert!(pure_to_cdp(0.0).is_err());
        assert!(pure_to_cdp(1e-3).unwrap() < pure_to_cdp(1e-2).unwrap());

        let (eps, delta) = cdp_to_approx_dp(0.5, 1e-6).unwrap();
        // 0.5 + 2 * sqrt(0.5 * ln 1e6), evaluated independently.
        let expected = 0.5 + 2.0 * (0.5f64 * 6.0 * std::f64::consts::LN_10).sqrt();
        assert!((eps - expected).abs() < 1e-12);
        assert!((eps - 5.757).abs() < 1e-3);
        assert_eq!(delta, 1e-6);

        let near_one = cdp_to_approx_dp(0.5, 1.0 - 1e-12).unwrap().0;
        assert!((near_one - 0.5).abs() < 1e-5);
        assert!(cdp_to_approx_dp(0.5, 1.0).is_err());
        assert!(cdp_to_approx_dp(0.5, 0.0).is_err());
        assert!(cdp_to_approx_dp(0.6, 1e-6).unwrap().0 > eps);
        assert!(cdp_to_approx_dp(0.5, 1e-7).unwrap().0 > eps);
    }

    #[test]
    fn split_examples() {
        assert_eq!(split_budget(1.0, 4).unwrap(), 0.25);
        assert_eq!(split_budget(0.3, 1).unwrap(), 0.3);
        assert!(split_budget(1.0, 0).is_err());
    }

    #[test]
    fn approx_composition_adds_both() {
        let l = ledger_of(&[
            PrivacyBudget::approx(0.5, 1e-6).unwrap(),
            PrivacyBudget::approx(0.25, 1e-6).unwrap(),
        ]);
        assert_eq!(
            l.compose().unwrap(),
            PrivacyBudget::ApproxDp {
                epsilon: 0.75,
                delta: 2e-6
            }
        );
    }

    proptest! {
        #[test]
        fn split_then_compose_round_trips(rho in 1e-4f64..100.0, steps in 1usize..5000) {
            let step = split_budget(rho, steps).unwrap();
            let l = ledger_of(&vec![PrivacyBudget::zcdp(step).unwrap(); steps]);
            let total = l.compose().unwrap().primary();
            prop_assert!((total - rho).abs() <= ulp(rho), "{total} vs {rho}");
        }

        #[test]
        fn compose_order_independent(v in prop::collection::vec(1e-3f64..1.0, 1..30)) {
            let budgets: Vec<_> = v.iter().map(|r| PrivacyBudget::zcdp(*r).unwrap()).collect();
            let mut rev = budgets.clone();
            rev.reverse();
            let a = ledger_of(&budgets).compose().unwrap().primary();
            let b = ledger_of(&rev).compose().unwrap().primary();
            prop_assert!((a - b).abs() <= 2.0 * ulp(a));
        }

        #[test]
        fn conversion_chain_never_undercounts(eps in 1e-3f64..10.0) {
            let rho = pure_to_cdp(eps).unwrap();
            let (out, _) = cdp_to_approx_dp(rho, 1.0 - 1e-15).unwrap();
            prop_assert!(out >= eps * eps / 2.0);
        }
    }
}
