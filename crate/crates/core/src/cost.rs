//! Per-time mining cost as a function of deployed hash power.
//!
//! Three families cover every configuration the engine supports:
//!
//! * `Linear` — constant marginal cost `c` per unit of hash power per unit of
//!   time. The free-entry benchmark with linear costs has the closed-form
//!   aggregate `H = revenue / (c · target interval)`.
//! * `LinearPremium` — an attacker procuring a share `1 − alpha` of its power
//!   outside its existing operation pays a premium `kappa ≥ 1` on that share:
//!   the blended rate is `c · (alpha + kappa · (1 − alpha))`. With
//!   `kappa = 1` this is exactly `Linear(c)` for every `alpha`.
//! * `Power` — strictly convex `gamma · h^p` with `p > 1`; the only family
//!   with an interior profit-maximizing power level.
//!
//! Evaluation and the analytic marginal both reject negative power with a
//! domain error; everything else about these functions is total.

use crate::error::{EconError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CostFunction {
    Linear {
        c: f64,
    },
    LinearPremium {
        c: f64,
        kappa: f64,
        alpha: f64,
    },
    Power {
        gamma: f64,
        p: f64,
    },
}

impl CostFunction {
    pub fn linear(c: f64) -> Result<Self> {
        let f = CostFunction::Linear { c };
        f.validate()?;
        Ok(f)
    }

    pub fn linear_premium(c: f64, kappa: f64, alpha: f64) -> Result<Self> {
        let f = CostFunction::LinearPremium { c, kappa, alpha };
        f.validate()?;
        Ok(f)
    }

    pub fn power(gamma: f64, p: f64) -> Result<Self> {
        let f = CostFunction::Power { gamma, p };
        f.validate()?;
        Ok(f)
    }

    /// Check the parameter constraints of the family. Deserialized values
    /// must be passed through this before use.
    pub fn validate(&self) -> Result<()> {
        match *self {
            CostFunction::Linear { c } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(EconError::domain(format!(
                        "linear cost needs c > 0 (got {c})"
                    )));
                }
            }
            CostFunction::LinearPremium { c, kappa, alpha } => {
                if !(c > 0.0 && c.is_finite()) {
                    return Err(EconError::domain(format!(
                        "linear-premium cost needs c > 0 (got {c})"
                    )));
                }
                if !(kappa >= 1.0 && kappa.is_finite()) {
                    return Err(EconError::domain(format!(
                        "outside-procurement premium needs kappa >= 1 (got {kappa})"
                    )));
                }
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(EconError::domain(format!(
                        "inside share needs alpha in [0, 1] (got {alpha})"
                    )));
                }
            }
            CostFunction::Power { gamma, p } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(EconError::domain(format!(
                        "power cost needs gamma > 0 (got {gamma})"
                    )));
                }
                if !(p > 1.0 && p.is_finite()) {
                    return Err(EconError::domain(format!(
                        "power cost needs exponent p > 1 (got {p})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Total cost per unit of time of running `h` hash power.
    pub fn eval(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(EconError::domain(format!(
                "hash power must be non-negative (got {h})"
            )));
        }
        Ok(match *self {
            CostFunction::Linear { c } => c * h,
            CostFunction::LinearPremium { c, kappa, alpha } => {
                c * (alpha + kappa * (1.0 - alpha)) * h
            }
            CostFunction::Power { gamma, p } => gamma * h.powf(p),
        })
    }

    /// Marginal cost `d eval / d h`.
    pub fn marginal(&self, h: f64) -> Result<f64> {
        if !(h >= 0.0) {
            return Err(EconError::domain(format!(
                "hash power must be non-negative (got {h})"
            )));
        }
        Ok(match *self {
            CostFunction::Linear { c } => c,
            CostFunction::LinearPremium { c, kappa, alpha } => c * (alpha + kappa * (1.0 - alpha)),
            CostFunction::Power { gamma, p } => gamma * p * h.powf(p - 1.0),
        })
    }

    /// True for the families with constant marginal cost.
    #[must_use]
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            CostFunction::Linear { .. } | CostFunction::LinearPremium { .. }
        )
    }
}
