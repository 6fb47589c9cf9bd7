//! Analytic attack economics.
//!
//! Everything here prices a *guaranteed* majority attack against a network
//! in its free-entry benchmark state (aggregate power `H`, difficulty
//! `D = tau * H`, per-block revenue `R + Phi`).
//!
//! The net cost of attacking decomposes into two flows over the attack
//! length `L`:
//!
//! * **opportunity cost** — the benchmark mining profit the attacker
//!   forgoes: `((h*/D)(R + Phi) - c(h*)) * L`;
//! * **mounting cost** — running the attack itself:
//!   `(c_A(h) - (h/D)(R~ + Phi~)) * L`, where `R~ + Phi~` is the per-block
//!   revenue *on the attacker's chain* (same reward by default, but fees
//!   re-estimated at the attack chain's slower interval), plus a rental
//!   term `(rent/D)((R + Phi) - (R~ + Phi~))` when honest capacity is
//!   rented at its forgone-revenue price.
//!
//! The attack is incentive-compatible to *resist* (`ic_holds`) when the net
//! cost is at least the prize `v_attack`.
//!
//! Sign logic worth remembering: a longer-than-target block interval
//! *raises* per-block fees under congestion, so an inside attacker who
//! slows the chain can face a zero or even negative net cost; conversely an
//! outside majority speeds the chain up and mines pre-drained fee pools,
//! which is what [`outside_attack_cost`] prices.

use crate::cost::CostFunction;
use crate::equilibrium::{Equilibrium, MinerId, MinerSpec};
use crate::error::{EconError, Result};
use crate::fees::{FeeMarket, McSettings};
use crate::solve::{bisect, expand_upper, fixed_point};
use serde::{Deserialize, Serialize};

/// How the attack chain's per-block fee revenue is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PhiTilde {
    /// Estimate from the fee market at the attack chain's implied block
    /// interval `D / (power used + rented)`.
    FeeMarket,
    /// Sensitivity-sweep override: use this value with zero standard error.
    Fixed { value: f64 },
}

/// One attack scenario against a solved benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackPlan {
    /// Which benchmark miner mounts the attack.
    pub attacker: MinerId,
    /// Share of the deployed attack power sourced from the attacker's own
    /// benchmark capacity (`alpha`); the rest is procured outside.
    pub inside_share: f64,
    /// Cost multiplier on outside-procured power (`kappa >= 1`).
    pub outside_premium: f64,
    /// Deploy exactly this much own power (after the minimum is enforced);
    /// `None` lets the engine pick the cost-minimizing level.
    pub deployed_power: Option<f64>,
    /// Honest capacity rented for the attack, compensated at its forgone
    /// benchmark revenue.
    pub rented_power: f64,
    /// Prize captured if the attack succeeds (double-spend value).
    pub v_attack: f64,
    /// Block reward on the attack chain; defaults to the benchmark reward.
    pub reward_tilde: Option<f64>,
    pub phi_tilde: PhiTilde,
    /// Override the attacker's benchmark power instead of reading it from
    /// the equilibrium allocation.
    pub pre_attack_override: Option<f64>,
}

impl AttackPlan {
    /// A minimal all-inside, no-premium plan for `attacker`.
    #[must_use]
    pub fn inside(attacker: MinerId) -> AttackPlan {
        AttackPlan {
            attacker,
            inside_share: 1.0,
            outside_premium: 1.0,
            deployed_power: None,
            rented_power: 0.0,
            v_attack: 0.0,
            reward_tilde: None,
            phi_tilde: PhiTilde::FeeMarket,
            pre_attack_override: None,
        }
    }
}

/// Sign of the net attack cost, with a tolerance band around zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CostRegime {
    ZeroCost,
    PositiveCost,
    NegativeCost,
}

/// How long the attacker must sustain the attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackLength {
    /// Expected first time the attack side is one block ahead:
    /// `D / (attack side - honest side)`.
    HittingTime,
    /// Externally supplied length (e.g. a simulated mean).
    Fixed(f64),
}

/// Full cost accounting for one plan.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackAssessment {
    /// Minimum own power that still guarantees success, net of rent.
    pub min_power: f64,
    /// Own power actually deployed.
    pub power_used: f64,
    /// Attack-chain fees per block used in the pricing.
    pub phi_tilde: f64,
    pub phi_tilde_se: f64,
    /// Attack length `L` in time units.
    pub attack_length: f64,
    /// Cost of running the attack over `L` (can be negative).
    pub mounting_cost: f64,
    /// Forgone benchmark profit over `L`.
    pub opportunity_cost: f64,
    /// `opportunity_cost + mounting_cost`.
    pub net_cost: f64,
    /// Net cost at least the prize: attacking does not pay.
    pub ic_holds: bool,
    pub regime: CostRegime,
}

/// Minimum total attack power that guarantees success against a network of
/// aggregate `aggregate_power` when the attacker's own benchmark power is
/// `pre_attack_power`: `max(H/2, H - h*)`.
pub fn min_attack_power(pre_attack_power: f64, aggregate_power: f64) -> Result<f64> {
    if !(aggregate_power > 0.0 && aggregate_power.is_finite()) {
        return Err(EconError::domain(format!(
            "aggregate power must be > 0 (got {aggregate_power})"
        )));
    }
    if !(0.0..=aggregate_power).contains(&pre_attack_power) {
        return Err(EconError::domain(format!(
            "pre-attack power must lie in [0, {aggregate_power}] (got {pre_attack_power})"
        )));
    }
    Ok((aggregate_power / 2.0).max(aggregate_power - pre_attack_power))
}

/// Minimum *own* attack power when `rented_power` honest capacity switches
/// sides. The total requirement is `max(H/2, H - h* - rent)`; rent counts
/// toward it, so the own minimum is that total less the rent, floored at
/// zero.
pub fn min_attack_power_rented(
    pre_attack_power: f64,
    aggregate_power: f64,
    rented_power: f64,
) -> Result<f64> {
    if !(aggregate_power > 0.0 && aggregate_power.is_finite()) {
        return Err(EconError::domain(format!(
            "aggregate power must be > 0 (got {aggregate_power})"
        )));
    }
    if !(0.0..=aggregate_power).contains(&pre_attack_power) {
        return Err(EconError::domain(format!(
            "pre-attack power must lie in [0, {aggregate_power}] (got {pre_attack_power})"
        )));
    }
    let headroom = aggregate_power - pre_attack_power;
    if !(0.0..=headroom + 1e-12 * aggregate_power).contains(&rented_power) {
        return Err(EconError::domain(format!(
            "rented power must lie in [0, {headroom}] (got {rented_power})"
        )));
    }
    let total = (aggregate_power / 2.0).max(aggregate_power - pre_attack_power - rented_power);
    Ok((total - rented_power).max(0.0))
}

/// Expected time for the attack side to first lead the public chain by one
/// block: `D / (attack - honest)`.
pub fn hitting_time_length(
    attack_side_power: f64,
    honest_side_power: f64,
    difficulty: f64,
) -> Result<f64> {
    if !(difficulty > 0.0 && difficulty.is_finite()) {
        return Err(EconError::domain(format!("difficulty must be > 0 (got {difficulty})")));
    }
    if !(honest_side_power >= 0.0 && honest_side_power.is_finite()) {
        return Err(EconError::domain(format!(
            "honest-side power must be >= 0 (got {honest_side_power})"
        )));
    }
    if !(attack_side_power > honest_side_power) {
        return Err(EconError::domain(format!(
            "attack side ({attack_side_power}) must strictly exceed the honest side \
             ({honest_side_power}) for a finite race"
        )));
    }
    Ok(difficulty / (attack_side_power - honest_side_power))
}

/// Result of the cost-minimizing attack power search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimalPower {
    Unique(f64),
    /// Constant marginal cost: every power level yields the same per-unit
    /// margin, so no interior minimizer exists. Callers fall back to the
    /// guaranteed minimum.
    NotUnique,
}

/// Power minimizing `c(h) - (h/D) * revenue_tilde`, i.e. the root of
/// `c'(h) = revenue_tilde / D`, found by bracketed bisection to relative
/// 1e-10. Unique only for strictly convex cost.
pub fn optimal_attack_power(
    cost: &CostFunction,
    difficulty: f64,
    revenue_tilde: f64,
) -> Result<OptimalPower> {
    cost.validate()?;
    if !(difficulty > 0.0 && difficulty.is_finite()) {
        return Err(EconError::domain(format!("difficulty must be > 0 (got {difficulty})")));
    }
    if !(revenue_tilde >= 0.0 && revenue_tilde.is_finite()) {
        return Err(EconError::domain(format!(
            "attack-chain revenue must be >= 0 (got {revenue_tilde})"
        )));
    }
    if cost.is_linear() {
        return Ok(OptimalPower::NotUnique);
    }
    let price = revenue_tilde / difficulty;
    if price == 0.0 {
        return Ok(OptimalPower::Unique(0.0));
    }
    let g = |h: f64| cost.marginal(h).expect("positive power in bracket") - price;
    // marginal(0+) = 0 < price for p > 1, so a sign change always exists
    let lo = 1e-12;
    if g(lo) >= 0.0 {
        return Ok(OptimalPower::Unique(0.0));
    }
    let (lo, hi) = expand_upper(&g, lo, 1.0, 200)?;
    let root = bisect(&g, lo, hi, 1e-10, 300)?;
    Ok(OptimalPower::Unique(root))
}

/// Break-even outcome: the own power at which attacking earns exactly the
/// benchmark profit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakEven {
    pub power: f64,
    /// True when attack- and benchmark-chain revenues coincide, making the
    /// attacker's own benchmark power the (degenerate) break-even point.
    pub degenerate: bool,
}

/// Solve `(h*/D)(R+Phi) - c(h*) = (h/D)(R~+Phi~) - c(h)` for the upper
/// root `h > h*`. Requires strictly convex cost and attack revenue above
/// benchmark revenue (otherwise no such root exists).
pub fn break_even_power(
    cost: &CostFunction,
    difficulty: f64,
    revenue: f64,
    revenue_tilde: f64,
    pre_attack_power: f64,
) -> Result<BreakEven> {
    cost.validate()?;
    if cost.is_linear() {
        return Err(EconError::domain(
            "break-even power needs strictly convex cost; constant marginal cost has none",
        ));
    }
    if !(difficulty > 0.0 && difficulty.is_finite()) {
        return Err(EconError::domain(format!("difficulty must be > 0 (got {difficulty})")));
    }
    if !(pre_attack_power >= 0.0 && pre_attack_power.is_finite()) {
        return Err(EconError::domain(format!(
            "pre-attack power must be >= 0 (got {pre_attack_power})"
        )));
    }
    if !(revenue >= 0.0 && revenue_tilde >= 0.0) {
        return Err(EconError::domain("revenues must be >= 0"));
    }
    let bench_profit = pre_attack_power / difficulty * revenue - cost.eval(pre_attack_power)?;
    if revenue_tilde < revenue {
        return Err(EconError::NoRoot(format!(
            "attack revenue {revenue_tilde} below benchmark revenue {revenue}: \
             no break-even power above the benchmark level"
        )));
    }
    if revenue_tilde == revenue {
        return Ok(BreakEven { power: pre_attack_power, degenerate: true });
    }
    let f = |h: f64| {
        h / difficulty * revenue_tilde - cost.eval(h).expect("bracket stays nonnegative")
            - bench_profit
    };
    // f(h*) = (h*/D)(revenue_tilde - revenue) > 0; convexity drives f to
    // -inf, so expanding the upper end always brackets the root.
    let lo = pre_attack_power.max(1e-12);
    let (lo, hi) = expand_upper(&f, lo, (2.0 * lo).max(1.0), 200)?;
    let power = bisect(&f, lo, hi, 1e-12, 500)?;
    Ok(BreakEven { power, degenerate: false })
}

/// The incumbent size at which the rest of the network is exactly the
/// break-even attack power: the root of `h + be(h) - H` on `(0, H/2)`.
/// Attack-chain fees are re-estimated at the implied interval
/// `D / (H - h)` for each candidate `h`.
pub fn critical_incumbent_power(
    cost: &CostFunction,
    aggregate_power: f64,
    reward: f64,
    fee_market: &FeeMarket,
    mc: &McSettings,
) -> Result<f64> {
    cost.validate()?;
    fee_market.validate()?;
    if cost.is_linear() {
        return Err(EconError::domain(
            "critical incumbent size needs strictly convex cost",
        ));
    }
    if !(aggregate_power > 0.0 && aggregate_power.is_finite()) {
        return Err(EconError::domain(format!(
            "aggregate power must be > 0 (got {aggregate_power})"
        )));
    }
    if !(reward >= 0.0 && reward.is_finite()) {
        return Err(EconError::domain(format!("reward must be >= 0 (got {reward})")));
    }
    let h_total = aggregate_power;
    let tau = fee_market.target_interval;
    let difficulty = tau * h_total;
    let phi = fee_market.expected_fees_per_block(tau, mc)?.mean;
    let revenue = reward + phi;

    let g = |h: f64| -> Result<f64> {
        let interval = difficulty / (h_total - h);
        let phi_tilde = fee_market.expected_fees_per_block(interval, mc)?.mean;
        let be = break_even_power(cost, difficulty, revenue, reward + phi_tilde, h)?;
        Ok(h + be.power - h_total)
    };

    let lo = 1e-3 * h_total;
    let hi = 0.5 * h_total * (1.0 - 1e-9);
    let g_lo = g(lo)?;
    let g_hi = g(hi)?;
    if g_lo >= 0.0 || g_hi <= 0.0 {
        return Err(EconError::NoRoot(format!(
            "no critical incumbent size in (0, H/2): endpoints {g_lo} and {g_hi}"
        )));
    }
    let wrapped = |h: f64| g(h).expect("interior of a bracketed scan");
    let root = bisect(&wrapped, lo, hi, 1e-9, 300)?;
    if !(root < 0.5 * h_total) {
        return Err(EconError::NoRoot(format!(
            "critical incumbent size {root} not below half the aggregate"
        )));
    }
    Ok(root)
}

/// Difficulty and interval on the attack chain after its first retarget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifficultyAdjust {
    pub new_difficulty: f64,
    /// Expected attack-chain block interval at the new difficulty.
    pub new_interval: f64,
}

/// Retrospective difficulty adjustment as seen by an attack chain that
/// completes the current window. `attack_blocks` of the `epoch`-block
/// window are mined post-fork at power `attack_power`; the remainder was
/// mined pre-fork at the benchmark rate (aggregate power).
///
/// `D' = D * epoch / ((epoch - d) + d * H / h_A)`, `Y' = D' / h_A`.
pub fn difficulty_adjust(
    difficulty: f64,
    epoch: u64,
    attack_blocks: u64,
    attack_power: f64,
    aggregate_power: f64,
) -> Result<DifficultyAdjust> {
    if !(difficulty > 0.0 && difficulty.is_finite()) {
        return Err(EconError::domain(format!("difficulty must be > 0 (got {difficulty})")));
    }
    if epoch == 0 {
        return Err(EconError::domain("epoch must be >= 1"));
    }
    if attack_blocks > epoch {
        return Err(EconError::domain(format!(
            "blocks mined into the window ({attack_blocks}) cannot exceed the epoch ({epoch})"
        )));
    }
    if !(attack_power > 0.0 && attack_power.is_finite()) {
        return Err(EconError::domain(format!(
            "attack power must be > 0 (got {attack_power})"
        )));
    }
    if !(aggregate_power > 0.0 && aggregate_power.is_finite()) {
        return Err(EconError::domain(format!(
            "aggregate power must be > 0 (got {aggregate_power})"
        )));
    }
    let epoch_f = epoch as f64;
    let d = attack_blocks as f64;
    // Single-division form of D * epoch / ((epoch - d) + d * H / h_A)
    // divided through by h_A: when the attacker mines the whole window
    // (d = epoch) this collapses to D / H with no intermediate rounding,
    // so the adjusted interval equals the target interval bit for bit.
    let new_interval =
        difficulty * epoch_f / ((epoch_f - d) * attack_power + d * aggregate_power);
    Ok(DifficultyAdjust { new_difficulty: new_interval * attack_power, new_interval })
}

/// Mounting cost of an attack that straddles one difficulty retarget on
/// the attack chain: `len_pre` at the original difficulty with fees
/// `phi_tilde_pre`, then `len_post` at the adjusted difficulty with fees
/// `phi_tilde_post` (estimated at the post-retarget interval).
#[allow(clippy::too_many_arguments)]
pub fn attack_cost_with_retarget(
    attack_cost: &CostFunction,
    attack_power: f64,
    difficulty: f64,
    aggregate_power: f64,
    epoch: u64,
    attack_blocks: u64,
    revenue_tilde_pre: f64,
    revenue_tilde_post: f64,
    len_pre: f64,
    len_post: f64,
) -> Result<f64> {
    attack_cost.validate()?;
    if !(len_pre >= 0.0 && len_post >= 0.0 && len_pre.is_finite() && len_post.is_finite()) {
        return Err(EconError::domain(format!(
            "segment lengths must be >= 0 (got {len_pre}, {len_post})"
        )));
    }
    if !(revenue_tilde_pre >= 0.0 && revenue_tilde_post >= 0.0) {
        return Err(EconError::domain("attack-chain revenues must be >= 0"));
    }
    let adj = difficulty_adjust(difficulty, epoch, attack_blocks, attack_power, aggregate_power)?;
    let cost_rate = attack_cost.eval(attack_power)?;
    let pre_rate = cost_rate - attack_power / difficulty * revenue_tilde_pre;
    let post_rate = cost_rate - attack_power / adj.new_difficulty * revenue_tilde_post;
    Ok(len_pre * pre_rate + len_post * post_rate)
}

/// Fee-revenue loss per block of an attack mounted entirely with outside
/// power (`excess_ratio = h_A / H > 1`): the attacker's chain races ahead
/// of fee arrivals and refills from the second tier of the pool, so each
/// block earns `second_tier_phi` instead of the benchmark `phi`.
pub fn outside_attack_cost(excess_ratio: f64, phi: f64, second_tier_phi: f64) -> Result<f64> {
    if !(excess_ratio > 1.0 && excess_ratio.is_finite()) {
        return Err(EconError::domain(format!(
            "outside attacks need more than the whole network's power \
             (ratio {excess_ratio} must be > 1)"
        )));
    }
    if !(phi >= 0.0 && second_tier_phi >= 0.0) {
        return Err(EconError::domain("fee levels must be >= 0"));
    }
    Ok(phi - second_tier_phi)
}

/// Benchmark state plus everything needed to price plans against it.
#[derive(Debug, Clone)]
pub struct AttackContext<'a> {
    pub equilibrium: &'a Equilibrium,
    pub miners: &'a [MinerSpec],
    pub reward: f64,
    pub fee_market: &'a FeeMarket,
    pub mc: McSettings,
}

impl<'a> AttackContext<'a> {
    pub fn new(
        equilibrium: &'a Equilibrium,
        miners: &'a [MinerSpec],
        reward: f64,
        fee_market: &'a FeeMarket,
        mc: McSettings,
    ) -> Result<AttackContext<'a>> {
        fee_market.validate()?;
        if !(reward >= 0.0 && reward.is_finite()) {
            return Err(EconError::domain(format!("reward must be >= 0 (got {reward})")));
        }
        Ok(AttackContext { equilibrium, miners, reward, fee_market, mc })
    }

    /// Price one plan. Deterministic: Monte Carlo fee estimates reuse the
    /// context's fixed seed.
    pub fn assess(&self, plan: &AttackPlan, length: AttackLength) -> Result<AttackAssessment> {
        let eq = self.equilibrium;
        let h_total = eq.aggregate_power;
        let difficulty = eq.difficulty;
        let revenue = self.reward + eq.phi;

        let alpha = plan.inside_share;
        let kappa = plan.outside_premium;
        if !((0.0..=1.0).contains(&alpha) && alpha.is_finite()) {
            return Err(EconError::domain(format!(
                "inside share must lie in [0, 1] (got {alpha})"
            )));
        }
        if !(kappa >= 1.0 && kappa.is_finite()) {
            return Err(EconError::domain(format!(
                "outside premium must be >= 1 (got {kappa})"
            )));
        }
        if !(plan.v_attack >= 0.0 && plan.v_attack.is_finite()) {
            return Err(EconError::domain(format!(
                "attack prize must be >= 0 (got {})",
                plan.v_attack
            )));
        }

        let spec = self
            .miners
            .iter()
            .find(|m| m.id == plan.attacker)
            .ok_or_else(|| EconError::domain(format!("unknown attacker id {}", plan.attacker)))?;
        let pre_attack = match plan.pre_attack_override {
            Some(h) => {
                if !((0.0..=h_total).contains(&h) && h.is_finite()) {
                    return Err(EconError::domain(format!(
                        "pre-attack override must lie in [0, {h_total}] (got {h})"
                    )));
                }
                h
            }
            None => eq.power_of(plan.attacker),
        };

        let reward_tilde = plan.reward_tilde.unwrap_or(self.reward);
        if !(reward_tilde >= 0.0 && reward_tilde.is_finite()) {
            return Err(EconError::domain(format!(
                "attack-chain reward must be >= 0 (got {reward_tilde})"
            )));
        }

        // Build the attack-time cost function: outside power pays the
        // premium; a strictly convex technology cannot blend with outside
        // procurement here.
        let attack_cost = match &spec.cost {
            CostFunction::Linear { c } => {
                if kappa > 1.0 {
                    CostFunction::linear_premium(*c, kappa, alpha)?
                } else {
                    spec.cost.clone()
                }
            }
            CostFunction::Power { .. } => {
                if kappa > 1.0 {
                    return Err(EconError::domain(
                        "outside premium is only defined for constant-marginal-cost attackers",
                    ));
                }
                spec.cost.clone()
            }
            CostFunction::LinearPremium { .. } => {
                return Err(EconError::domain(
                    "benchmark cost already carries an outside premium; \
                     use a plain linear cost and set the premium on the plan",
                ));
            }
        };

        let rent = plan.rented_power;
        let min_own = min_attack_power_rented(pre_attack, h_total, rent)?;

        // Own power deployed, given a fee level on the attack chain.
        let used_for = |revenue_tilde: f64| -> Result<f64> {
            let chosen = match plan.deployed_power {
                Some(h) => {
                    if !(h >= 0.0 && h.is_finite()) {
                        return Err(EconError::domain(format!(
                            "deployed power must be >= 0 (got {h})"
                        )));
                    }
                    h
                }
                None => match optimal_attack_power(&attack_cost, difficulty, revenue_tilde)? {
                    OptimalPower::Unique(h) => h,
                    OptimalPower::NotUnique => 0.0,
                },
            };
            Ok(chosen.max(min_own))
        };

        // Resolve the attack chain's fee level. Only the convex,
        // engine-chosen case couples power to fees and needs the damped
        // fixed-point loop.
        let (phi_tilde, phi_tilde_se, power_used) = match plan.phi_tilde {
            PhiTilde::Fixed { value } => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(EconError::domain(format!(
                        "fee override must be >= 0 (got {value})"
                    )));
                }
                (value, 0.0, used_for(reward_tilde + value)?)
            }
            PhiTilde::FeeMarket => {
                let coupled =
                    plan.deployed_power.is_none() && !attack_cost.is_linear();
                if coupled {
                    let map = |phi: f64| -> f64 {
                        let used = used_for(reward_tilde + phi.max(0.0))
                            .expect("validated inputs");
                        let interval = difficulty / (used + rent);
                        self.fee_market
                            .expected_fees_per_block(interval, &self.mc)
                            .expect("validated market")
                            .mean
                    };
                    let phi = fixed_point(&map, eq.phi, 0.5, 1e-8, 200)?;
                    let used = used_for(reward_tilde + phi)?;
                    let est = self
                        .fee_market
                        .expected_fees_per_block(difficulty / (used + rent), &self.mc)?;
                    (est.mean, est.std_error, used)
                } else {
                    let used = used_for(reward_tilde)?; // fee level irrelevant here
                    let est = self
                        .fee_market
                        .expected_fees_per_block(difficulty / (used + rent), &self.mc)?;
                    (est.mean, est.std_error, used)
                }
            }
        };
        let revenue_tilde = reward_tilde + phi_tilde;

        if alpha * power_used > pre_attack + 1e-9 * h_total {
            return Err(EconError::domain(format!(
                "inside share {alpha} of deployed power {power_used} exceeds the \
                 attacker's benchmark power {pre_attack}"
            )));
        }

        let attack_side = power_used + rent;
        let honest_side = (h_total - alpha * power_used - rent).max(0.0);
        let attack_length = match length {
            AttackLength::HittingTime => {
                hitting_time_length(attack_side, honest_side, difficulty)?
            }
            AttackLength::Fixed(len) => {
                if !(len > 0.0 && len.is_finite()) {
                    return Err(EconError::domain(format!(
                        "attack length must be > 0 (got {len})"
                    )));
                }
                len
            }
        };

        let mounting_rate = attack_cost.eval(power_used)?
            - power_used / difficulty * revenue_tilde
            + rent / difficulty * (revenue - revenue_tilde);
        let opportunity_rate = pre_attack / difficulty * revenue - spec.cost.eval(pre_attack)?;
        let mounting_cost = mounting_rate * attack_length;
        let opportunity_cost = opportunity_rate * attack_length;
        let net_cost = opportunity_cost + mounting_cost;

        let tol = 1e-9 * revenue;
        let regime = if net_cost.abs() <= tol {
            CostRegime::ZeroCost
        } else if net_cost > 0.0 {
            CostRegime::PositiveCost
        } else {
            CostRegime::NegativeCost
        };

        Ok(AttackAssessment {
            min_power: min_own,
            power_used,
            phi_tilde,
            phi_tilde_se,
            attack_length,
            mounting_cost,
            opportunity_cost,
            net_cost,
            ic_holds: net_cost >= plan.v_attack,
            regime,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium;
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

    fn congested(tau: f64) -> FeeMarket {
        FeeMarket {
            target_interval: tau,
            tx_rate: 16.0,
            block_capacity: 4,
            fee_dist: FeeDistribution::uniform(0.0, 1.0).unwrap(),
            arrival_law: ArrivalLaw::Poisson,
        }
    }

    fn mc() -> McSettings {
        McSettings::new(20_000, 11)
    }

    #[test]
    fn minimum_power_formula() {
        assert_eq!(min_attack_power(0.0, 100.0).unwrap(), 100.0);
        assert_eq!(min_attack_power(60.0, 100.0).unwrap(), 50.0);
        assert_eq!(min_attack_power(40.0, 100.0).unwrap(), 60.0);
        assert!(min_attack_power(101.0, 100.0).is_err());
        assert!(min_attack_power(-1.0, 100.0).is_err());
    }

    #[test]
    fn minimum_power_with_rent() {
        // no rent: same as the plain minimum
        assert_eq!(min_attack_power_rented(60.0, 100.0, 0.0).unwrap(), 50.0);
        // rent counts toward the requirement and shrinks the honest side
        assert_eq!(min_attack_power_rented(0.0, 100.0, 30.0).unwrap(), 40.0);
        assert_eq!(min_attack_power_rented(40.0, 100.0, 20.0).unwrap(), 30.0);
        // enough rent alone: own minimum clamps at zero
        assert_eq!(min_attack_power_rented(0.0, 100.0, 80.0).unwrap(), 0.0);
        // rent beyond the non-attacker capacity is invalid
        assert!(min_attack_power_rented(60.0, 100.0, 50.0).is_err());
    }

    #[test]
    fn hitting_time_formula() {
        assert!((hitting_time_length(60.0, 40.0, 100.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(hitting_time_length(40.0, 40.0, 100.0).is_err());
        assert!(hitting_time_length(30.0, 40.0, 100.0).is_err());
        assert!(hitting_time_length(60.0, 40.0, 0.0).is_err());
    }

    /// Closed-form check plus an independent bisection oracle on the
    /// marginal-cost condition.
    #[test]
    fn optimal_power_quadratic_cost() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let OptimalPower::Unique(h) = optimal_attack_power(&cost, 100.0, 120.0).unwrap() else {
            panic!("quadratic cost has a unique minimizer")
        };
        assert!((h - 0.6).abs() < 1e-9);

        // oracle: bisect 2h - 1.2 on [0, 10] by hand
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 2.0 * mid - 1.2 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((h - 0.5 * (lo + hi)).abs() < 1e-9);
    }

    #[test]
    fn optimal_power_edge_cases() {
        let linear = CostFunction::linear(1.0).unwrap();
        assert_eq!(optimal_attack_power(&linear, 100.0, 120.0).unwrap(), OptimalPower::NotUnique);
        let blended = CostFunction::linear_premium(1.0, 2.0, 0.5).unwrap();
        assert_eq!(
            optimal_attack_power(&blended, 100.0, 120.0).unwrap(),
            OptimalPower::NotUnique
        );
        let convex = CostFunction::power(1.0, 2.0).unwrap();
        assert_eq!(
            optimal_attack_power(&convex, 100.0, 0.0).unwrap(),
            OptimalPower::Unique(0.0)
        );
        assert!(optimal_attack_power(&convex, 100.0, -1.0).is_err());
    }

    /// Frozen closed-form value: gamma=1, p=2, D=100, revenue 100, attack
    /// revenue 120, benchmark power 0.5. The equation reduces to
    /// 0.25 = 1.2h - h^2, upper root (1.2 + sqrt(0.44)) / 2.
    #[test]
    fn break_even_matches_quadratic_formula() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let be = break_even_power(&cost, 100.0, 100.0, 120.0, 0.5).unwrap();
        assert!(!be.degenerate);
        assert!(
            (be.power - 0.931_662_479_035_540_0).abs() < 1e-9,
            "got {}",
            be.power
        );
    }

    #[test]
    fn break_even_degenerate_and_no_root() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let be = break_even_power(&cost, 100.0, 100.0, 100.0, 0.5).unwrap();
        assert!(be.degenerate);
        assert_eq!(be.power, 0.5);
        assert!(matches!(
            break_even_power(&cost, 100.0, 100.0, 99.0, 0.5),
            Err(EconError::NoRoot(_))
        ));
        let linear = CostFunction::linear(1.0).unwrap();
        assert!(break_even_power(&linear, 100.0, 100.0, 120.0, 0.5).is_err());
    }

    /// With fees re-estimated at the implied attack interval (the setting
    /// of the critical-incumbent construction), a bigger incumbent faces a
    /// bigger break-even power: the grid covers the region approaching the
    /// critical size, where the fee response dominates the benchmark-profit
    /// effect. The break-even power always exceeds the benchmark power.
    #[test]
    fn break_even_increases_with_benchmark_power() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let market = congested(1.0);
        let settings = mc();
        let (h_total, reward) = (4.0, 2.0);
        let difficulty = h_total;
        let phi = market.expected_fees_per_block(1.0, &settings).unwrap().mean;
        let revenue = reward + phi;
        let mut last = 0.0;
        for i in 0..7 {
            let h_star = 1.0 + 0.15 * f64::from(i);
            let interval = difficulty / (h_total - h_star);
            let phi_t = market.expected_fees_per_block(interval, &settings).unwrap().mean;
            let be = break_even_power(&cost, difficulty, revenue, reward + phi_t, h_star)
                .unwrap()
                .power;
            assert!(be > h_star, "break-even {be} must exceed benchmark {h_star}");
            assert!(be > last, "h*={h_star}: {be} <= {last}");
            last = be;
        }
    }

    /// Root of the defining equation, cross-checked against a test-local
    /// bisection that recomputes the break-even power from the quadratic
    /// formula at each candidate (sharing only the deterministic fee
    /// estimates).
    #[test]
    fn critical_incumbent_solves_defining_equation() {
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let market = congested(1.0);
        let reward = 2.0;
        let h_total = 4.0;
        let settings = mc();
        let hat = critical_incumbent_power(&cost, h_total, reward, &market, &settings).unwrap();
        assert!(hat > 0.0 && hat < h_total / 2.0, "hat = {hat}");

        let difficulty = h_total; // tau = 1
        let phi = market.expected_fees_per_block(1.0, &settings).unwrap().mean;
        let revenue = reward + phi;
        let be_quadratic = |h_star: f64| -> f64 {
            let phi_t = market
                .expected_fees_per_block(difficulty / (h_total - h_star), &settings)
                .unwrap()
                .mean;
            let rt = (reward + phi_t) / difficulty;
            let bench = h_star / difficulty * revenue - h_star * h_star;
            // h^2 - rt h + bench = 0, upper root
            (rt + (rt * rt - 4.0 * bench).sqrt()) / 2.0
        };
        // defining equation holds at the returned root
        assert!(
            (hat + be_quadratic(hat) - h_total).abs() <= 1e-6 * h_total,
            "residual {}",
            hat + be_quadratic(hat) - h_total
        );
        // independent bisection with the quadratic-formula break-even
        let (mut lo, mut hi) = (1e-3 * h_total, 0.5 * h_total * (1.0 - 1e-9));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + be_quadratic(mid) - h_total < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((hat - oracle).abs() <= 1e-6 * h_total, "hat {hat} vs oracle {oracle}");
    }

    #[test]
    fn critical_incumbent_requires_fee_uplift() {
        // uncongested market: attack revenue never exceeds benchmark
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let market = uncongested(1.0);
        assert!(matches!(
            critical_incumbent_power(&cost, 4.0, 2.0, &market, &mc()),
            Err(EconError::NoRoot(_))
        ));
    }

    #[test]
    fn difficulty_adjust_examples() {
        // half the window at benchmark speed, half at 60% speed
        let adj = difficulty_adjust(100.0, 2600, 1300, 60.0, 100.0).unwrap();
        assert!((adj.new_difficulty - 75.0).abs() < 1e-9);
        assert!((adj.new_interval - 1.25).abs() < 1e-9);
        // whole window post-fork: the new interval is exactly the target
        let adj = difficulty_adjust(100.0, 2600, 2600, 60.0, 100.0).unwrap();
        assert!((adj.new_interval - 1.0).abs() < 1e-12);
        // nothing post-fork: no change
        let adj = difficulty_adjust(100.0, 2600, 0, 60.0, 100.0).unwrap();
        assert_eq!(adj.new_difficulty, 100.0);
    }

    #[test]
    fn difficulty_adjust_direction() {
        for (h_a, up) in [(40.0, false), (80.0, false), (120.0, true), (200.0, true)] {
            let adj = difficulty_adjust(100.0, 2600, 700, h_a, 100.0).unwrap();
            assert_eq!(adj.new_difficulty > 100.0, up, "h_A = {h_a}");
        }
        assert!(difficulty_adjust(100.0, 2600, 1300, 0.0, 100.0).is_err());
        assert!(difficulty_adjust(100.0, 2600, 2601, 60.0, 100.0).is_err());
    }

    #[test]
    fn retarget_cost_two_segments() {
        let cost = CostFunction::linear(1.0).unwrap();
        // hand oracle: pre rate = 60 - (60/100)*110 = -6;
        // D' = 100*2600/(1300 + 1300*100/60) = 75, post rate = 60 - (60/75)*95 = -16
        let c = attack_cost_with_retarget(
            &cost, 60.0, 100.0, 100.0, 2600, 1300, 110.0, 95.0, 2.0, 3.0,
        )
        .unwrap();
        assert!((c - (2.0 * -6.0 + 3.0 * -16.0)).abs() < 1e-9, "got {c}");
        // zero lengths: zero cost
        let z = attack_cost_with_retarget(
            &cost, 60.0, 100.0, 100.0, 2600, 1300, 110.0, 95.0, 0.0, 0.0,
        )
        .unwrap();
        assert_eq!(z, 0.0);
    }

    /// With the whole window mined post-fork the adjusted chain runs at the
    /// target interval, so its per-time revenue is `revenue / tau`.
    #[test]
    fn retarget_full_window_restores_benchmark_rate() {
        let cost = CostFunction::linear(1.0).unwrap();
        let h_a = 60.0;
        let revenue_post = 97.0;
        let c = attack_cost_with_retarget(
            &cost, h_a, 100.0, 100.0, 2600, 2600, 0.0, revenue_post, 0.0, 1.0,
        )
        .unwrap();
        // tau = D / H = 1: post rate must be c(h) - revenue_post / tau
        let expect = 1.0 * h_a - revenue_post / 1.0;
        assert!((c - expect).abs() < 1e-9, "got {c}, want {expect}");
    }

    /// An outside majority (attack power above the whole network) pays a
    /// positive two-segment cost under free entry.
    #[test]
    fn retarget_outside_attack_costs_money() {
        // free entry: linear slope = revenue / D = 1
        let cost = CostFunction::linear(1.0).unwrap();
        let h_a = 150.0;
        let revenue = 100.0;
        // pre-retarget the fast chain earns at most benchmark fees;
        // post-retarget it runs at the target interval with benchmark fees
        let c = attack_cost_with_retarget(
            &cost, h_a, 100.0, 100.0, 2600, 1300, revenue, revenue, 4.0, 6.0,
        )
        .unwrap();
        assert!(c > 0.0, "got {c}");
    }

    #[test]
    fn outside_cost_is_fee_difference() {
        assert!((outside_attack_cost(1.5, 2.0, 1.6).unwrap() - 0.4).abs() < 1e-12);
        assert!(outside_attack_cost(1.0, 2.0, 1.6).is_err());
        assert!(outside_attack_cost(0.8, 2.0, 1.6).is_err());
        // flat fee support: the second tier refills at the same value
        assert_eq!(outside_attack_cost(2.0, 2.0, 2.0).unwrap(), 0.0);
    }

    // ---- assessment integration -----------------------------------------

    /// Single zero-profit linear miner, H = D = 100, revenue 100.
    fn linear_benchmark() -> (Vec<MinerSpec>, Equilibrium, FeeMarket) {
        let miners = vec![MinerSpec {
            id: MinerId(0),
            cost: CostFunction::linear(1.0).unwrap(),
        }];
        let market = uncongested(1.0);
        let eq = solve_equilibrium(&miners, 100.0, &market, &mc()).unwrap();
        (miners, eq, market)
    }

    /// Free-entry symmetric linear attack with no premium and benchmark
    /// fees on the attack chain costs exactly nothing.
    #[test]
    fn symmetric_linear_attack_is_free() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let plan = AttackPlan {
            phi_tilde: PhiTilde::Fixed { value: 0.0 },
            ..AttackPlan::inside(MinerId(0))
        };
        let a = ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap();
        assert_eq!(a.min_power, 50.0);
        assert_eq!(a.power_used, 50.0);
        assert_eq!(a.net_cost, 0.0);
        assert_eq!(a.opportunity_cost, 0.0, "free entry: zero benchmark profit");
        assert_eq!(a.regime, CostRegime::ZeroCost);
        assert!(a.ic_holds);
    }

    /// Frozen linear-form oracle: power 50 of 100, premium 2, half inside,
    /// equal revenues, length 5 -> net cost 125.
    #[test]
    fn linear_premium_net_cost_oracle() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let plan = AttackPlan {
            inside_share: 0.5,
            outside_premium: 2.0,
            deployed_power: Some(50.0),
            phi_tilde: PhiTilde::Fixed { value: 0.0 },
            v_attack: 100.0,
            ..AttackPlan::inside(MinerId(0))
        };
        let a = ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap();
        assert!((a.net_cost - 125.0).abs() < 1e-9, "got {}", a.net_cost);
        assert_eq!(a.regime, CostRegime::PositiveCost);
        assert!(a.ic_holds, "125 >= 100");
        let richer = AttackPlan { v_attack: 200.0, ..plan };
        assert!(!ctx.assess(&richer, AttackLength::Fixed(5.0)).unwrap().ic_holds);
    }

    /// The linear form reduces to the pure-premium expression when the
    /// attack is fully outside-sourced at equal revenues:
    /// net = (h/(tau H)) (kappa - 1) (R + Phi) L; kappa = 1 gives zero.
    #[test]
    fn linear_outside_premium_reduction() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        for (kappa, want) in [(1.0, 0.0), (1.5, 125.0), (2.0, 250.0)] {
            let plan = AttackPlan {
                inside_share: 0.0,
                outside_premium: kappa,
                deployed_power: Some(50.0),
                phi_tilde: PhiTilde::Fixed { value: 0.0 },
                ..AttackPlan::inside(MinerId(0))
            };
            let a = ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap();
            assert!(
                (a.net_cost - want).abs() < 1e-9,
                "kappa {kappa}: got {} want {want}",
                a.net_cost
            );
        }
    }

    /// Net cost falls in the inside share, rises in the premium, and rises
    /// in the benchmark-minus-attack revenue gap.
    #[test]
    fn linear_net_cost_monotonicity() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let base = |alpha: f64, kappa: f64, phi_t: f64| {
            let plan = AttackPlan {
                inside_share: alpha,
                outside_premium: kappa,
                deployed_power: Some(50.0),
                phi_tilde: PhiTilde::Fixed { value: phi_t },
                reward_tilde: Some(100.0 - 0.0),
                ..AttackPlan::inside(MinerId(0))
            };
            ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap().net_cost
        };
        // decreasing in alpha
        let mut last = f64::INFINITY;
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let c = base(alpha, 2.0, 0.0);
            assert!(c < last, "alpha {alpha}: {c} not < {last}");
            last = c;
        }
        // increasing in kappa
        let mut last = f64::NEG_INFINITY;
        for kappa in [1.0, 1.5, 2.0, 3.0] {
            let c = base(0.5, kappa, 0.0);
            assert!(c > last, "kappa {kappa}: {c} not > {last}");
            last = c;
        }
        // increasing as attack revenue falls below benchmark revenue
        // (vary the attack-chain reward downward)
        let with_reward = |r_tilde: f64| {
            let plan = AttackPlan {
                inside_share: 0.5,
                outside_premium: 1.0,
                deployed_power: Some(50.0),
                phi_tilde: PhiTilde::Fixed { value: 0.0 },
                reward_tilde: Some(r_tilde),
                ..AttackPlan::inside(MinerId(0))
            };
            ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap().net_cost
        };
        let mut last = f64::NEG_INFINITY;
        for r_tilde in [120.0, 100.0, 80.0] {
            let c = with_reward(r_tilde);
            assert!(c > last, "attack reward {r_tilde}: {c} not > {last}");
            last = c;
        }
    }

    /// Single quadratic miner holding the whole network: H = 10, D = 10,
    /// revenue 200, benchmark power 10 with profit 100 per unit time.
    fn quadratic_benchmark() -> (Vec<MinerSpec>, Equilibrium, FeeMarket) {
        let miners = vec![MinerSpec {
            id: MinerId(0),
            cost: CostFunction::power(1.0, 2.0).unwrap(),
        }];
        let market = uncongested(1.0);
        let eq = solve_equilibrium(&miners, 200.0, &market, &mc()).unwrap();
        assert!((eq.aggregate_power - 10.0).abs() < 1e-8);
        (miners, eq, market)
    }

    /// Sign trichotomy driven by the attack-chain revenue: equal revenue
    /// nets exactly zero, lower revenue costs money, higher revenue (with a
    /// non-binding minimum) pays the attacker.
    #[test]
    fn net_cost_trichotomy() {
        let (miners, eq, market) = quadratic_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 200.0, &market, mc()).unwrap();
        let assess = |r_tilde: f64| {
            let plan = AttackPlan {
                inside_share: 0.5,
                reward_tilde: Some(r_tilde),
                phi_tilde: PhiTilde::Fixed { value: 0.0 },
                ..AttackPlan::inside(MinerId(0))
            };
            ctx.assess(&plan, AttackLength::HittingTime).unwrap()
        };
        let zero = assess(200.0);
        assert_eq!(zero.regime, CostRegime::ZeroCost, "net {}", zero.net_cost);
        assert!(zero.net_cost.abs() <= 1e-9 * 200.0);
        // optimal equals the benchmark power here, and it is not clamped
        assert!((zero.power_used - 10.0).abs() < 1e-8);

        let positive = assess(160.0);
        assert_eq!(positive.regime, CostRegime::PositiveCost, "net {}", positive.net_cost);
        assert!(positive.net_cost > 0.0);

        let negative = assess(240.0);
        assert_eq!(negative.regime, CostRegime::NegativeCost, "net {}", negative.net_cost);
        assert!(negative.net_cost < 0.0);
        // minimum own power (max(5, 10-10) = 5) did not bind at 12
        assert!(negative.power_used > negative.min_power);
    }

    /// With attack revenue above benchmark revenue, the cost-minimizing
    /// attack deploys more than the attacker's benchmark power.
    #[test]
    fn richer_attack_chain_draws_outside_power() {
        let (_, eq, _) = quadratic_benchmark();
        let cost = CostFunction::power(1.0, 2.0).unwrap();
        let OptimalPower::Unique(h) =
            optimal_attack_power(&cost, eq.difficulty, 240.0).unwrap()
        else {
            panic!("unique for convex cost")
        };
        assert!(h > eq.power_of(MinerId(0)), "{h} vs {}", eq.power_of(MinerId(0)));
    }

    /// Renting helps exactly when the attack chain out-earns the benchmark:
    /// same deployed power, higher rent, strictly lower mounting cost.
    /// Five equal incumbents leave the attacker rentable headroom.
    #[test]
    fn renting_cuts_cost_when_attack_fees_richer() {
        let miners: Vec<MinerSpec> = (0..5)
            .map(|i| MinerSpec { id: MinerId(i), cost: CostFunction::linear(1.0).unwrap() })
            .collect();
        let market = uncongested(1.0);
        let eq = solve_equilibrium(&miners, 100.0, &market, &mc()).unwrap();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let assess = |rent: f64| {
            let plan = AttackPlan {
                inside_share: 0.0,
                // above the rent-free own minimum max(H/2, H - h*) = 80,
                // so both assessments deploy the same power
                deployed_power: Some(85.0),
                rented_power: rent,
                // attack chain revenue 110 > benchmark 100
                phi_tilde: PhiTilde::Fixed { value: 10.0 },
                ..AttackPlan::inside(MinerId(0))
            };
            ctx.assess(&plan, AttackLength::Fixed(5.0)).unwrap()
        };
        let none = assess(0.0);
        let some = assess(20.0);
        assert_eq!(none.power_used, 85.0);
        assert_eq!(some.power_used, 85.0);
        assert!(
            some.mounting_cost < none.mounting_cost,
            "{} vs {}",
            some.mounting_cost,
            none.mounting_cost
        );
    }

    /// Any incumbent can attack profitably by renting past the halfway
    /// mark when attack fees run rich: the strict chain
    /// full-cost < no-rent-cost < 0.
    #[test]
    fn rented_majority_attack_chain_of_inequalities() {
        let miners: Vec<MinerSpec> = (0..5)
            .map(|i| MinerSpec { id: MinerId(i), cost: CostFunction::linear(1.0).unwrap() })
            .collect();
        let market = congested(1.0);
        let eq = solve_equilibrium(&miners, 100.0, &market, &mc()).unwrap();
        let h_total = eq.aggregate_power;
        let h_star = eq.power_of(MinerId(0));
        assert!((h_star - h_total / 5.0).abs() < 1e-9);

        let rent = 0.31 * h_total; // strictly above H/2 - h* = 0.3 H
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let plan = AttackPlan {
            rented_power: rent,
            ..AttackPlan::inside(MinerId(0))
        };
        let a = ctx.assess(&plan, AttackLength::Fixed(10.0)).unwrap();

        // attack side is exactly the halfway mark; interval doubles
        assert!((a.power_used + rent - 0.5 * h_total).abs() < 1e-9);
        assert!(a.phi_tilde > eq.phi, "longer interval must raise fees");

        let revenue = 100.0 + eq.phi;
        let revenue_tilde = 100.0 + a.phi_tilde;
        let d = eq.difficulty;
        let t1 = a.mounting_cost / a.attack_length;
        let t2 = a.power_used / d * (revenue - revenue_tilde);
        assert!(t1 < t2, "rental term must strictly deepen the gain: {t1} vs {t2}");
        assert!(t2 < 0.0, "own-power term already profits: {t2}");
        assert!(a.net_cost < 0.0);
        assert_eq!(a.regime, CostRegime::NegativeCost);
        assert!(!a.ic_holds, "negative net cost cannot deter a zero prize");
    }

    /// The engine-chosen convex case closes the fee/power loop: the
    /// reported fee level reproduces itself at the implied interval.
    #[test]
    fn fee_power_fixed_point_is_self_consistent() {
        let miners = vec![MinerSpec {
            id: MinerId(0),
            cost: CostFunction::power(1.0, 2.0).unwrap(),
        }];
        let market = congested(1.0);
        let eq = solve_equilibrium(&miners, 20.0, &market, &mc()).unwrap();
        let ctx = AttackContext::new(&eq, &miners, 20.0, &market, mc()).unwrap();
        let plan = AttackPlan {
            inside_share: 0.5,
            ..AttackPlan::inside(MinerId(0))
        };
        let a = ctx.assess(&plan, AttackLength::Fixed(3.0)).unwrap();
        let b = ctx.assess(&plan, AttackLength::Fixed(3.0)).unwrap();
        assert_eq!(a, b, "deterministic in the context seed");
        let interval = eq.difficulty / a.power_used;
        let re = market.expected_fees_per_block(interval, &mc()).unwrap();
        assert!(
            (a.phi_tilde - re.mean).abs() <= 1e-6 * re.mean.max(1.0),
            "fixed point residual: {} vs {}",
            a.phi_tilde,
            re.mean
        );
    }

    #[test]
    fn plan_validation() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        let base = AttackPlan::inside(MinerId(0));
        let bad = [
            AttackPlan { inside_share: 1.5, ..base.clone() },
            AttackPlan { inside_share: -0.1, ..base.clone() },
            AttackPlan { outside_premium: 0.9, ..base.clone() },
            AttackPlan { rented_power: 200.0, ..base.clone() },
            AttackPlan { attacker: MinerId(9), ..base.clone() },
            AttackPlan { deployed_power: Some(-5.0), ..base.clone() },
            AttackPlan { v_attack: -1.0, ..base.clone() },
            AttackPlan { pre_attack_override: Some(150.0), ..base.clone() },
        ];
        for plan in &bad {
            assert!(ctx.assess(plan, AttackLength::Fixed(1.0)).is_err(), "{plan:?}");
        }
        // inside share larger than the benchmark power supports
        let over = AttackPlan {
            inside_share: 1.0,
            deployed_power: Some(80.0),
            pre_attack_override: Some(40.0),
            phi_tilde: PhiTilde::Fixed { value: 0.0 },
            ..base.clone()
        };
        assert!(ctx.assess(&over, AttackLength::Fixed(1.0)).is_err());
        // premium on a convex attacker is rejected
        let (miners_q, eq_q, market_q) = quadratic_benchmark();
        let ctx_q = AttackContext::new(&eq_q, &miners_q, 200.0, &market_q, mc()).unwrap();
        let premium = AttackPlan { outside_premium: 2.0, ..AttackPlan::inside(MinerId(0)) };
        assert!(ctx_q.assess(&premium, AttackLength::Fixed(1.0)).is_err());
    }

    #[test]
    fn hitting_time_length_selection() {
        let (miners, eq, market) = linear_benchmark();
        let ctx = AttackContext::new(&eq, &miners, 100.0, &market, mc()).unwrap();
        // fully inside at 80: attack side 80, honest side 100 - 80 = 20
        let plan = AttackPlan {
            deployed_power: Some(80.0),
            phi_tilde: PhiTilde::Fixed { value: 0.0 },
            ..AttackPlan::inside(MinerId(0))
        };
        let a = ctx.assess(&plan, AttackLength::HittingTime).unwrap();
        assert!((a.attack_length - 100.0 / 60.0).abs() < 1e-9);
        // at the bare minimum the sides tie and no finite race exists
        let stuck = AttackPlan {
            deployed_power: Some(50.0),
            phi_tilde: PhiTilde::Fixed { value: 0.0 },
            ..AttackPlan::inside(MinerId(0))
        };
        assert!(ctx.assess(&stuck, AttackLength::HittingTime).is_err());
        assert!(ctx.assess(&stuck, AttackLength::Fixed(0.0)).is_err());
    }
}
