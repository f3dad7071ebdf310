//! String identifiers for distributions and losses, e.g. `student_t:k=2.0`
//! or `quadratic:radius=0.5`.
//!
//! Parameters are `key=value` pairs separated by commas. A value may list
//! several numbers separated by `/`; vector-valued parameters repeat that
//! list cyclically to fill the dimension.

use std::collections::BTreeMap;

use crate::error::{config_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Identifier {
    pub name: String,
    params: BTreeMap<String, Vec<f64>>,
}

impl Identifier {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (name, rest) = match text.split_once(':') {
            Some((n, r)) => (n.trim(), r.trim()),
            None => (text, ""),
        };
        if name.is_empty() {
            return Err(config_err(format!("empty identifier in '{text}'")));
        }
        let mut params = BTreeMap::new();
        for part in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| config_err(format!("expected key=value in '{part}'")))?;
            let values = value
                .split('/')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| {
                            config_err(format!("'{v}' is not a finite number in '{part}'"))
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            if params.insert(key.trim().to_string(), values).is_some() {
                return Err(config_err(format!(
                    "parameter '{key}' given twice in '{text}'"
                )));
            }
        }
        Ok(Identifier {
            name: name.to_string(),
            params,
        })
    }

    pub fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key).map(Vec::as_slice) {
            None => Ok(None),
            Some([v]) => Ok(Some(*v)),
            Some(_) => Err(config_err(format!(
                "parameter '{key}' of '{}' takes one value",
                self.name
            ))),
        }
    }

    /// The parameter repeated cyclically to length `d`, or `default` filled.
    pub fn vector(&self, key: &str, d: usize, default: f64) -> Vec<f64> {
        match self.params.get(key) {
            Some(v) => v.iter().copied().cycle().take(d).collect(),
            None => vec![default; d],
        }
    }

    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(config_err(format!(
                "'{}' does not take parameter '{k}' (allowed: {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

/// Data-generating distribution named by a config.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Coordinate-wise scaled Student-t; `k` overrides the config's k grid.
    StudentT {
        k: Option<f64>,
        dof: Option<f64>,
        mean: Identifier,
    },
    /// Two-point packing mixture; `p` defaults per grid point.
    Packing { p: Option<f64> },
}

impl DistributionSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let id = Identifier::parse(text)?;
        match id.name.as_str() {
            "student_t" => {
                id.reject_unknown(&["k", "dof", "mean"])?;
                let k = id.scalar("k")?;
                let dof = id.scalar("dof")?;
                if let Some(k) = k {
                    if k < 2.0 {
                        return Err(config_err(format!("student_t needs k >= 2, got {k}")));
                    }
                }
                if let (Some(dof), Some(k)) = (dof, k) {
                    if dof <= k {
                        return Err(config_err(format!(
                            "dof must exceed k, got dof = {dof}, k = {k}"
                        )));
                    }
                }
                Ok(DistributionSpec::StudentT { k, dof, mean: id })
            }
            "packing" => {
                id.reject_unknown(&["p"])?;
                let p = id.scalar("p")?;
                if let Some(p) = p {
                    if !(p > 0.0 && p <= 1.0) {
                        return Err(config_err(format!("packing p must lie in (0, 1], got {p}")));
                    }
                }
                Ok(DistributionSpec::Packing { p })
            }
            other => Err(config_err(format!("unknown distribution '{other}'"))),
        }
    }

    /// Mean vector of a Student-t spec (zero when not given).
    pub fn mean(&self, d: usize) -> Vec<f64> {
        match self {
            DistributionSpec::StudentT { mean, .. } => mean.vector("mean", d, 0.0),
            DistributionSpec::Packing { .. } => vec![0.0; d],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossSpec {
    pub kind: htdp::instances::LossKind,
    pub radius: f64,
}

impl LossSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let id = Identifier::parse(text)?;
        let kind = id
            .name
            .parse()
            .map_err(|e: htdp::Error| config_err(e.to_string()))?;
        id.reject_unknown(&["radius"])?;
        let radius = id.scalar("radius")?.unwrap_or(1.0);
        if !(radius > 0.0) {
            return Err(config_err(format!(
                "loss radius must be positive, got {radius}"
            )));
        }
        Ok(LossSpec { kind, radius })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_parameters() {
        let id = Identifier::parse("student_t:k=2.0, mean=0.9/-0.45").unwrap();
        assert_eq!(id.name, "student_t");
        assert_eq!(id.scalar("k").unwrap(), Some(2.0));
        assert_eq!(id.vector("mean", 3, 0.0), vec![0.9, -0.45, 0.9]);
        assert!(id.scalar("mean").is_err());
        assert_eq!(
            Identifier::parse("quadratic").unwrap().vector("x", 2, 1.5),
            vec![1.5; 2]
        );
    }

    #[test]
    fn rejects_malformed_ids() {
        assert!(Identifier::parse(":k=1").is_err());
        assert!(Identifier::parse("student_t:k").is_err());
        assert!(Identifier::parse("student_t:k=abc").is_err());
        assert!(Identifier::parse("student_t:k=1,k=2").is_err());
        assert!(DistributionSpec::parse("student_t:k=1.5").is_err());
        assert!(DistributionSpec::parse("student_t:shape=1").is_err());
        assert!(DistributionSpec::parse("packing:p=0").is_err());
        assert!(DistributionSpec::parse("cauchy").is_err());
        assert!(LossSpec::parse("hinge").is_err());
        assert!(LossSpec::parse("quadratic:radius=-1").is_err());
    }

    #[test]
    fn recognised_ids() {
        assert_eq!(
            DistributionSpec::parse("packing:p=0.1").unwrap(),
            DistributionSpec::Packing { p: Some(0.1) }
        );
        let l = LossSpec::parse("quadratic:radius=0.25").unwrap();
        assert_eq!(l.radius, 0.25);
    }
}
