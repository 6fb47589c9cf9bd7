//! Free-entry mining equilibrium.
//!
//! Each miner chooses power to maximize expected profit
//! `(h / (tau * H)) * (R + Phi) - cost(h)` taking the aggregate `H` as
//! given. An equilibrium is a fixed point: the chosen powers sum to the
//! aggregate everyone best-responded to.
//!
//! Structure of the solution:
//! * The per-unit price of power is `price(H) = (R + Phi) / (tau * H)`,
//!   strictly decreasing in `H`.
//! * A miner with constant marginal cost `c` forces `price <= c` in any
//!   equilibrium (otherwise its demand is unbounded). If the cheapest such
//!   slope binds, it pins `H = (R + Phi) / (c_min * tau)` and the linear
//!   miners at the minimum slope absorb, in equal shares, whatever the
//!   strictly convex miners do not take at that price.
//! * With only strictly convex miners, aggregate power solves
//!   `sum_i br_i(H) = H`, which has a unique root because each best
//!   response is strictly decreasing in `H`.

use crate::cost::CostFunction;
use crate::error::{EconError, Result};
use crate::fees::{FeeMarket, McSettings};
use crate::solve::{bisect, expand_upper};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Stable miner identifier; ordering fixes all iteration and reporting
/// order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct MinerId(pub u32);

impl fmt::Display for MinerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinerSpec {
    pub id: MinerId,
    pub cost: CostFunction,
}

/// A solved benchmark state of the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// Total network power `H`.
    pub aggregate_power: f64,
    /// Power per miner; zero entries are kept so every spec id is present.
    pub allocations: BTreeMap<MinerId, f64>,
    /// Miners with strictly positive power, in id order.
    pub active: Vec<MinerId>,
    /// Expected fees per block at the target interval.
    pub phi: f64,
    /// Monte Carlo standard error of `phi` (zero when exact).
    pub phi_se: f64,
    /// Difficulty calibrated to the target interval: `D = tau * H`.
    pub difficulty: f64,
}

impl Equilibrium {
    /// Power of one miner (zero if unknown id).
    #[must_use]
    pub fn power_of(&self, id: MinerId) -> f64 {
        self.allocations.get(&id).copied().unwrap_or(0.0)
    }
}

/// Constant marginal cost if the function is linear in power.
fn linear_slope(cost: &CostFunction) -> Option<f64> {
    match cost {
        CostFunction::Linear { c } => Some(*c),
        CostFunction::LinearPremium { c, kappa, alpha } => {
            Some(c * (alpha + kappa * (1.0 - alpha)))
        }
        CostFunction::Power { .. } => None,
    }
}

/// Profit-maximizing power against aggregate `aggregate_power` when a block
/// found on the network pays `reward_plus_fees` and blocks arrive every
/// `tau` on average.
///
/// Linear costs: zero below the price, unbounded above it (an error), and
/// zero by convention exactly at it (any level is optimal there).
pub fn best_response(
    cost: &CostFunction,
    aggregate_power: f64,
    reward_plus_fees: f64,
    tau: f64,
) -> Result<f64> {
    cost.validate()?;
    if !(aggregate_power > 0.0 && aggregate_power.is_finite()) {
        return Err(EconError::domain(format!(
            "aggregate power must be > 0 (got {aggregate_power})"
        )));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(EconError::domain(format!("target interval must be > 0 (got {tau})")));
    }
    if !(reward_plus_fees >= 0.0 && reward_plus_fees.is_finite()) {
        return Err(EconError::domain(format!(
            "block revenue must be >= 0 (got {reward_plus_fees})"
        )));
    }
    let price = reward_plus_fees / (tau * aggregate_power);
    match cost {
        CostFunction::Power { gamma, p } => {
            if price == 0.0 {
                return Ok(0.0);
            }
            Ok((price / (gamma * p)).powf(1.0 / (p - 1.0)))
        }
        _ => {
            let slope = linear_slope(cost).expect("non-power cost is linear");
            let tol = 1e-12 * slope.max(price).max(1.0);
            if price > slope + tol {
                Err(EconError::NoEquilibrium(format!(
                    "constant marginal cost {slope} below price {price}: demand unbounded"
                )))
            } else {
                Ok(0.0)
            }
        }
    }
}

/// Solve the free-entry equilibrium for a miner population.
///
/// `Phi` is estimated once from the fee market at its own target interval
/// (exactly zero when uncongested) and treated as a constant of the
/// benchmark state.
pub fn solve_equilibrium(
    miners: &[MinerSpec],
    reward: f64,
    market: &FeeMarket,
    mc: &McSettings,
) -> Result<Equilibrium> {
    market.validate()?;
    if miners.is_empty() {
        return Err(EconError::NoEquilibrium("no miners".into()));
    }
    if !(reward >= 0.0 && reward.is_finite()) {
        return Err(EconError::domain(format!("block reward must be >= 0 (got {reward})")));
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in miners {
        m.cost.validate()?;
        if !seen.insert(m.id) {
            return Err(EconError::domain(format!("duplicate miner id {}", m.id)));
        }
    }

    let tau = market.target_interval;
    let est = market.expected_fees_per_block(tau, mc)?;
    let (phi, phi_se) = (est.mean, est.std_error);
    let rev = reward + phi;
    if rev <= 0.0 {
        return Err(EconError::NoEquilibrium(
            "zero block revenue supports no positive power".into(),
        ));
    }

    let linear: Vec<(MinerId, f64)> = miners
        .iter()
        .filter_map(|m| linear_slope(&m.cost).map(|s| (m.id, s)))
        .collect();
    let convex: Vec<&MinerSpec> = miners
        .iter()
        .filter(|m| linear_slope(&m.cost).is_none())
        .collect();

    let sum_convex = |aggregate: f64| -> f64 {
        convex
            .iter()
            .map(|m| {
                best_response(&m.cost, aggregate, rev, tau)
                    .expect("power-cost best response is total")
            })
            .sum()
    };

    // Unique root of sum_i br_i(H) - H when only convex miners mine.
    let convex_only = |_: ()| -> Result<f64> {
        let g = |aggregate: f64| sum_convex(aggregate) - aggregate;
        let mut lo = 1e-9;
        for _ in 0..40 {
            if g(lo) > 0.0 {
                break;
            }
            lo *= 1e-3;
        }
        if g(lo) <= 0.0 {
            return Err(EconError::NoEquilibrium(
                "convex best responses vanish at all scales".into(),
            ));
        }
        let (lo, hi) = expand_upper(&g, lo, (2.0 * lo).max(1.0), 200)?;
        bisect(&g, lo, hi, 1e-12, 500)
    };

    let pin = linear
        .iter()
        .map(|(_, s)| *s)
        .fold(f64::INFINITY, f64::min);

    let mut allocations: BTreeMap<MinerId, f64> = miners.iter().map(|m| (m.id, 0.0)).collect();

    if linear.is_empty() {
        let aggregate = convex_only(())?;
        for m in &convex {
            allocations.insert(m.id, best_response(&m.cost, aggregate, rev, tau)?);
        }
    } else {
        let pinned_aggregate = rev / (pin * tau);
        let use_pin = if convex.is_empty() {
            true
        } else {
            // The linear fringe binds iff at the pinned price the convex
            // miners demand less than the pinned aggregate.
            sum_convex(pinned_aggregate) < pinned_aggregate
        };
        if use_pin {
            let convex_total = sum_convex(pinned_aggregate);
            let residual = (pinned_aggregate - convex_total).max(0.0);
            let slope_tol = 1e-12 * pin.max(1.0);
            let cheapest: Vec<MinerId> = linear
                .iter()
                .filter(|(_, s)| (*s - pin).abs() <= slope_tol)
                .map(|(id, _)| *id)
                .collect();
            let share = residual / cheapest.len() as f64;
            for m in &convex {
                allocations.insert(m.id, best_response(&m.cost, pinned_aggregate, rev, tau)?);
            }
            for id in &cheapest {
                allocations.insert(*id, share);
            }
        } else {
            let aggregate = convex_only(())?;
            if rev / (tau * aggregate) > pin * (1.0 + 1e-9) {
                return Err(EconError::NoEquilibrium(
                    "convex-only aggregate leaves price above the cheapest linear slope".into(),
                ));
            }
            for m in &convex {
                allocations.insert(m.id, best_response(&m.cost, aggregate, rev, tau)?);
            }
        }
    }

    // Re-sum so the reported aggregate is exactly the sum of allocations.
    let aggregate_power: f64 = allocations.values().sum();
    if !(aggregate_power > 0.0) {
        return Err(EconError::NoEquilibrium("aggregate power is zero".into()));
    }
    let active: Vec<MinerId> = allocations
        .iter()
        .filter(|(_, h)| **h > 0.0)
        .map(|(id, _)| *id)
        .collect();
    Ok(Equilibrium {
        aggregate_power,
        allocations,
        active,
        phi,
        phi_se,
        difficulty: tau * aggregate_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fees::{ArrivalLaw, FeeDistribution};

    fn uncongested(tau: f64) -> FeeMarket {
        FeeMarket {
            target_interval: tau,
            tx_rate: 1.0,
            block_capacity: 10,
            fee_dist: FeeDistribution::uniform(0.0, 1.0).unwrap(),
            arrival_law: ArrivalLaw::Poisson,
        }
    }

    fn mc() -> McSettings {
        McSettings::new(20_000, 42)
    }

    #[test]
    fn single_linear_miner_closed_form() {
        let miners = [MinerSpec {
            id: MinerId(0),
            cost: CostFunction::linear(1.0).unwrap(),
        }];
        let eq = solve_equilibrium(&miners, 100.0, &uncongested(1.0), &mc()).unwrap();
        assert!((eq.aggregate_power - 100.0).abs() < 1e-9);
        assert!((eq.difficulty - 100.0).abs() < 1e-9);
        assert_eq!(eq.phi, 0.0);
        assert_eq!(eq.phi_se, 0.0);
        assert!((eq.power_of(MinerId(0)) - 100.0).abs() < 1e-9);
        assert_eq!(eq.active, vec![MinerId(0)]);
    }

    #[test]
    fn closed_form_scales_with_slope_and_interval() {
        let miners = [MinerSpec {
            id: MinerId(0),
            cost: CostFunction::linear(2.0).unwrap(),
        }];
        let eq = solve_equilibrium(&miners, 100.0, &uncongested(5.0), &mc()).unwrap();
        // H = R / (c * tau) = 100 / 10, D = tau * H = 50
        assert!((eq.aggregate_power - 10.0).abs() < 1e-9);
        assert!((eq.difficulty - 50.0).abs() < 1e-9);
    }

    #[test]
    fn power_best_response_closed_form() {
        // price = 100 / (1 * 100) = 1; h = (1 / (gamma * p))^(1/(p-1)) = 0.5
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let h = best_response(&cost, 100.0, 100.0, 1.0).unwrap();
        assert!((h - 0.5).abs() < 1e-12);
        // zero revenue: zero power
        assert_eq!(best_response(&cost, 100.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_best_response_cases() {
        let cost = CostFunction::linear(1.0).unwrap();
        // price 0.5 < slope 1: stay out
        assert_eq!(best_response(&cost, 200.0, 100.0, 1.0).unwrap(), 0.0);
        // price 2 > slope 1: unbounded demand
        assert!(best_response(&cost, 50.0, 100.0, 1.0).is_err());
        // price == slope: indifferent, convention 0
        assert_eq!(best_response(&cost, 100.0, 100.0, 1.0).unwrap(), 0.0);
    }

    /// Independent oracle: damped fixed-point iteration on
    /// `H -> sum_i br_i(H)` must land on the same aggregate as the solver,
    /// and both must match the closed form `H = sqrt(R / (gamma * tau))`
    /// for two identical quadratic miners (gamma = 1, p = 2).
    #[test]
    fn two_quadratic_miners_match_fixed_point_oracle() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let miners = [
            MinerSpec { id: MinerId(0), cost: cost.clone() },
            MinerSpec { id: MinerId(1), cost: cost.clone() },
        ];
        let eq = solve_equilibrium(&miners, 100.0, &uncongested(1.0), &mc()).unwrap();

        let mut h = 1.0_f64;
        for _ in 0..200 {
            let next: f64 = 2.0 * best_response(&cost, h, 100.0, 1.0).unwrap();
            h = 0.5 * h + 0.5 * next;
        }
        assert!((eq.aggregate_power - h).abs() < 1e-8, "solver {} oracle {h}", eq.aggregate_power);
        assert!((eq.aggregate_power - 10.0).abs() < 1e-8);
        assert!((eq.power_of(MinerId(0)) - 5.0).abs() < 1e-8);
        assert!((eq.power_of(MinerId(1)) - 5.0).abs() < 1e-8);
    }

    #[test]
    fn linear_fringe_pins_aggregate_when_cheap() {
        let miners = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(1.0).unwrap() },
            MinerSpec { id: MinerId(1), cost: CostFunction::power(1.0, 2.0).unwrap() },
        ];
        let eq = solve_equilibrium(&miners, 100.0, &uncongested(1.0), &mc()).unwrap();
        // pinned H = 100; quadratic miner takes price/(2 gamma) = 0.5
        assert!((eq.aggregate_power - 100.0).abs() < 1e-9);
        assert!((eq.power_of(MinerId(1)) - 0.5).abs() < 1e-9);
        assert!((eq.power_of(MinerId(0)) - 99.5).abs() < 1e-9);
    }

    #[test]
    fn expensive_linear_miner_stays_out() {
        let miners = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(20.0).unwrap() },
            MinerSpec { id: MinerId(1), cost: CostFunction::power(1.0, 2.0).unwrap() },
        ];
        let eq = solve_equilibrium(&miners, 100.0, &uncongested(1.0), &mc()).unwrap();
        // convex-only root: br = R/(2H) = H  =>  H = sqrt(50)
        assert!((eq.aggregate_power - 50.0_f64.sqrt()).abs() < 1e-8);
        assert_eq!(eq.power_of(MinerId(0)), 0.0);
        assert_eq!(eq.active, vec![MinerId(1)]);
    }

    #[test]
    fn equal_split_among_cheapest_linear() {
        let miners = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(2.0).unwrap() },
            MinerSpec { id: MinerId(1), cost: CostFunction::linear(2.0).unwrap() },
            MinerSpec { id: MinerId(2), cost: CostFunction::linear(2.0).unwrap() },
            MinerSpec { id: MinerId(3), cost: CostFunction::linear(3.0).unwrap() },
        ];
        let eq = solve_equilibrium(&miners, 60.0, &uncongested(1.0), &mc()).unwrap();
        assert!((eq.aggregate_power - 30.0).abs() < 1e-9);
        for id in 0..3 {
            assert!((eq.power_of(MinerId(id)) - 10.0).abs() < 1e-9);
        }
        assert_eq!(eq.power_of(MinerId(3)), 0.0);
        assert_eq!(eq.active, vec![MinerId(0), MinerId(1), MinerId(2)]);
    }

    #[test]
    fn allocations_sum_to_aggregate_exactly() {
        let miners = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(1.0).unwrap() },
            MinerSpec { id: MinerId(1), cost: CostFunction::power(0.3, 1.7).unwrap() },
            MinerSpec { id: MinerId(2), cost: CostFunction::power(2.0, 3.0).unwrap() },
        ];
        let eq = solve_equilibrium(&miners, 80.0, &uncongested(1.0), &mc()).unwrap();
        let sum: f64 = eq.allocations.values().sum();
        assert_eq!(sum, eq.aggregate_power);
        assert_eq!(eq.difficulty, eq.aggregate_power * 1.0);
    }

    /// No active miner loses money in equilibrium, and the zero-profit
    /// condition holds exactly for the pinned linear fringe.
    #[test]
    fn active_profits_are_nonnegative() {
        let miners = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(1.0).unwrap() },
            MinerSpec { id: MinerId(1), cost: CostFunction::power(1.0, 2.0).unwrap() },
        ];
        let rev = 100.0;
        let eq = solve_equilibrium(&miners, rev, &uncongested(1.0), &mc()).unwrap();
        for m in &miners {
            let h = eq.power_of(m.id);
            let profit = h / (1.0 * eq.aggregate_power) * rev - m.cost.eval(h).unwrap();
            assert!(profit >= -1e-9 * rev, "{}: profit {profit}", m.id);
            if let CostFunction::Linear { .. } = m.cost {
                assert!(profit.abs() <= 1e-9 * rev, "linear profit must be ~0, got {profit}");
            }
        }
    }

    #[test]
    fn congested_market_raises_revenue() {
        let market = FeeMarket {
            target_interval: 1.0,
            tx_rate: 16.0,
            block_capacity: 4,
            fee_dist: FeeDistribution::uniform(0.0, 1.0).unwrap(),
            arrival_law: ArrivalLaw::Poisson,
        };
        let miners = [MinerSpec {
            id: MinerId(0),
            cost: CostFunction::linear(1.0).unwrap(),
        }];
        let eq = solve_equilibrium(&miners, 50.0, &market, &mc()).unwrap();
        assert!(eq.phi > 0.0);
        assert!(eq.phi_se > 0.0);
        // H = (R + Phi) / (c tau) with the same Phi the solver estimated
        assert!((eq.aggregate_power - (50.0 + eq.phi)).abs() < 1e-9);
        assert!(eq.aggregate_power > 50.0);
    }

    #[test]
    fn input_validation() {
        let m = uncongested(1.0);
        let dup = [
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(1.0).unwrap() },
            MinerSpec { id: MinerId(0), cost: CostFunction::linear(2.0).unwrap() },
        ];
        assert!(solve_equilibrium(&dup, 10.0, &m, &mc()).is_err());
        assert!(solve_equilibrium(&[], 10.0, &m, &mc()).is_err());
        let one = [MinerSpec { id: MinerId(0), cost: CostFunction::linear(1.0).unwrap() }];
        assert!(matches!(
            solve_equilibrium(&one, 0.0, &m, &mc()),
            Err(EconError::NoEquilibrium(_))
        ));
        assert!(solve_equilibrium(&one, -1.0, &m, &mc()).is_err());
    }
}
