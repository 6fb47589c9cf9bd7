//! Sweep execution: one fully-priced result row per grid point.
//!
//! The benchmark equilibrium is solved once; every sweep point is then
//! priced analytically and, depending on the mode, raced in the simulator.
//! Points run in parallel but results are assembled in grid order, so a
//! scenario always produces the same rows in the same order.
//!
//! Seeds: the scenario seed drives everything. The fee estimator uses it
//! directly; the race batch for sweep point `i` uses
//! `split(split(seed, 1), i)`, and the batch splits that again per
//! replication. Reproducibility is exact across runs and thread counts.
//!
//! Simulated net cost is rebuilt per replication from the trace columns
//! (active time, blocks, fees, duration) rather than taken from the race's
//! own accounting, because the row may price rented power (a side payment
//! the race does not know about) and always adds the forgone benchmark
//! profit, which accrues over the full race duration:
//!
//! ```text
//! net_k = c_A(h_used) * active_k            — attacker's own mining spend
//!       + (rent / D) * (R + phi) * active_k — renters' forgone revenue
//!       - R~ * blocks_k - fees_k            — attack-chain revenue
//!       + opportunity_rate * duration_k     — forgone benchmark profit
//! ```
//!
//! which keeps the cross-replication correlations intact for the standard
//! error that the agreement flag is tested against.

use nakamoto_econ::fork_sim::{run_batch, EntryModel, RaceConfig, RetargetRule, StopRule};
use nakamoto_econ::rng::split;
use nakamoto_econ::stats::SampleStats;
use nakamoto_econ::{
    attack_cost_with_retarget, solve_equilibrium, AttackContext, AttackLength, AttackPlan,
    CostFunction, CostRegime, Equilibrium, McSettings, MinerId, MinerSpec,
};
use rayon::prelude::*;

use crate::scenario::{Attack, LengthSpec, Mode, NamedLength, Scenario};
use crate::CliError;

/// Coordinates of one grid point, in sweep-axis order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub kappa: f64,
    pub deployed: Option<f64>,
    pub rented: f64,
    pub retarget_blocks: u64,
    pub length: LengthSpec,
}

/// One output row: sweep coordinates, analytic pricing, and (mode
/// permitting) the simulated counterpart with its agreement flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub point: SweepPoint,
    pub phi: f64,
    pub phi_se: f64,
    pub phi_tilde: f64,
    pub phi_tilde_se: f64,
    pub min_power: f64,
    pub power_used: f64,
    pub attack_length: f64,
    pub opportunity_cost: f64,
    pub mounting_cost: f64,
    pub net_cost: f64,
    pub regime: CostRegime,
    pub ic_holds: bool,
    pub sim_net_mean: Option<f64>,
    pub sim_net_se: Option<f64>,
    pub sim_reps: Option<u32>,
    /// `Some(|analytic - simulated| <= 3 * sim SE)` in cross mode.
    pub agree: Option<bool>,
}

/// The Cartesian sweep grid in deterministic order (alpha outermost,
/// length innermost).
#[must_use]
pub fn grid(attack: &Attack) -> Vec<SweepPoint> {
    let deployed: Vec<Option<f64>> = if attack.deployed.is_empty() {
        vec![None]
    } else {
        attack.deployed.iter().copied().map(Some).collect()
    };
    let mut points = Vec::new();
    for &alpha in &attack.alpha {
        for &kappa in &attack.kappa {
            for &d in &deployed {
                for &rented in &attack.rented {
                    for &retarget_blocks in &attack.retarget_blocks {
                        for &length in &attack.lengths {
                            points.push(SweepPoint {
                                alpha,
                                kappa,
                                deployed: d,
                                rented,
                                retarget_blocks,
                                length,
                            });
                        }
                    }
                }
            }
        }
    }
    points
}

/// Solved benchmark plus the pieces every row needs.
pub struct Bench {
    pub miners: Vec<MinerSpec>,
    pub equilibrium: Equilibrium,
}

pub fn solve_benchmark(s: &Scenario) -> Result<Bench, CliError> {
    let miners = s.miner_specs();
    let market = s.fee_market();
    let mc = McSettings::new(s.run.samples, s.run.seed);
    let equilibrium = solve_equilibrium(&miners, s.network.reward, &market, &mc)
        .map_err(|e| CliError::from_econ("benchmark equilibrium", &e))?;
    Ok(Bench { miners, equilibrium })
}

/// The attacker's cost function during the attack (outside power pays the
/// premium).
fn attack_side_cost(benchmark: &CostFunction, alpha: f64, kappa: f64) -> Result<CostFunction, CliError> {
    match benchmark {
        CostFunction::Linear { c } if kappa > 1.0 => CostFunction::linear_premium(*c, kappa, alpha)
            .map_err(|e| CliError::from_econ("attack cost", &e)),
        _ => Ok(benchmark.clone()),
    }
}

/// Price every grid point. `mode` comes from the scenario (already
/// reflecting any command-line override).
pub fn run_rows(s: &Scenario, bench: &Bench) -> Result<Vec<ResultRow>, CliError> {
    let attack = s.attack_or_default();
    let points = grid(&attack);
    let results: Vec<Result<ResultRow, CliError>> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            run_point(s, bench, &attack, *p, i).map_err(|e| {
                CliError::new(
                    e.exit_code(),
                    format!(
                        "sweep point #{i} (alpha={}, kappa={}, rented={}, retarget_blocks={}, \
                         length={}): {e}",
                        p.alpha, p.kappa, p.rented, p.retarget_blocks, p.length
                    ),
                )
            })
        })
        .collect();
    results.into_iter().collect()
}

fn run_point(
    s: &Scenario,
    bench: &Bench,
    attack: &Attack,
    p: SweepPoint,
    index: usize,
) -> Result<ResultRow, CliError> {
    let eq = &bench.equilibrium;
    let market = s.fee_market();
    let mc = McSettings::new(s.run.samples, s.run.seed);
    let ctx = AttackContext::new(eq, &bench.miners, s.network.reward, &market, mc)
        .map_err(|e| CliError::from_econ("attack context", &e))?;

    let attacker = MinerId(attack.attacker.expect("validated"));
    let plan = AttackPlan {
        attacker,
        inside_share: p.alpha,
        outside_premium: p.kappa,
        deployed_power: p.deployed,
        rented_power: p.rented,
        v_attack: attack.v_attack,
        reward_tilde: attack.reward_tilde,
        phi_tilde: attack.phi_tilde,
        pre_attack_override: None,
    };
    let length = match p.length {
        LengthSpec::Named(NamedLength::HittingTime) => AttackLength::HittingTime,
        LengthSpec::Time(t) => AttackLength::Fixed(t),
    };
    let mut a = ctx
        .assess(&plan, length)
        .map_err(|e| CliError::from_econ("assessment", &e))?;

    let reward_tilde = attack.reward_tilde.unwrap_or(s.network.reward);
    let attack_side = a.power_used + p.rented;

    // Re-price the mounting leg across the retarget when the attack
    // straddles a difficulty window: the pre-retarget segment is the time
    // the attack chain needs for the window's remaining blocks (capped at
    // the attack length), the rest runs at the adjusted difficulty with
    // fees re-estimated at the adjusted interval.
    if p.retarget_blocks > 0 {
        let d = eq.difficulty;
        let len_pre = (p.retarget_blocks as f64 * d / attack_side).min(a.attack_length);
        let len_post = a.attack_length - len_pre;
        let adj = nakamoto_econ::difficulty_adjust(
            d,
            attack.retarget_epoch,
            p.retarget_blocks,
            attack_side,
            eq.aggregate_power,
        )
        .map_err(|e| CliError::from_econ("difficulty adjustment", &e))?;
        let phi_post = match attack.phi_tilde {
            nakamoto_econ::PhiTilde::Fixed { value } => value,
            nakamoto_econ::PhiTilde::FeeMarket => {
                market
                    .expected_fees_per_block(adj.new_difficulty / attack_side, &mc)
                    .map_err(|e| CliError::from_econ("post-retarget fees", &e))?
                    .mean
            }
        };
        let spec = bench
            .miners
            .iter()
            .find(|m| m.id == attacker)
            .expect("validated attacker id");
        let cost = attack_side_cost(&spec.cost, p.alpha, p.kappa)?;
        a.mounting_cost = attack_cost_with_retarget(
            &cost,
            attack_side,
            d,
            eq.aggregate_power,
            attack.retarget_epoch,
            p.retarget_blocks,
            reward_tilde + a.phi_tilde,
            reward_tilde + phi_post,
            len_pre,
            len_post,
        )
        .map_err(|e| CliError::from_econ("retarget pricing", &e))?;
        a.net_cost = a.opportunity_cost + a.mounting_cost;
        let tol = 1e-9 * (s.network.reward + eq.phi);
        a.regime = if a.net_cost.abs() <= tol {
            CostRegime::ZeroCost
        } else if a.net_cost > 0.0 {
            CostRegime::PositiveCost
        } else {
            CostRegime::NegativeCost
        };
        a.ic_holds = a.net_cost >= attack.v_attack;
    }

    let mut row = ResultRow {
        point: p,
        phi: eq.phi,
        phi_se: eq.phi_se,
        phi_tilde: a.phi_tilde,
        phi_tilde_se: a.phi_tilde_se,
        min_power: a.min_power,
        power_used: a.power_used,
        attack_length: a.attack_length,
        opportunity_cost: a.opportunity_cost,
        mounting_cost: a.mounting_cost,
        net_cost: a.net_cost,
        regime: a.regime,
        ic_holds: a.ic_holds,
        sim_net_mean: None,
        sim_net_se: None,
        sim_reps: None,
        agree: None,
    };
    if s.run.mode == Mode::Analytic {
        return Ok(row);
    }

    // --- simulation leg ---
    let spec = bench
        .miners
        .iter()
        .find(|m| m.id == attacker)
        .expect("validated attacker id");
    let cost = attack_side_cost(&spec.cost, p.alpha, p.kappa)?;
    let honest = (eq.aggregate_power - p.alpha * a.power_used - p.rented).max(0.0);
    let retarget = if p.retarget_blocks > 0 {
        RetargetRule::Retrospective {
            epoch: attack.retarget_epoch,
            blocks_remaining: p.retarget_blocks,
        }
    } else {
        RetargetRule::None
    };
    // The length axis picks the attack's temporal structure: hitting-time
    // rows race to overtaking under the configured stop rule; fixed-time
    // rows commit to a mining session of exactly that span, matching the
    // flows the analytic side prices over that same span.
    let stop_rule = match p.length {
        LengthSpec::Named(NamedLength::HittingTime) => s.run.stop_rule,
        LengthSpec::Time(t) => StopRule::FixedDuration { duration: t },
    };
    let cfg = RaceConfig {
        attack_power: attack_side,
        honest_power: honest,
        aggregate_power: eq.aggregate_power,
        difficulty: eq.difficulty,
        reward: reward_tilde,
        fee_market: market.clone(),
        bid_policy: s.run.bid_policy,
        attacker_cost: cost.clone(),
        stop_rule,
        retarget,
        entry: EntryModel::None,
        event_budget: s.run.event_budget,
        seed: split(split(s.run.seed, 1), index as u64),
    };
    let batch = run_batch(&cfg, s.run.replications as usize)
        .map_err(|e| CliError::from_econ("race batch", &e))?;

    let own_cost_rate = cost
        .eval(a.power_used)
        .map_err(|e| CliError::from_econ("cost evaluation", &e))?;
    let rent_rate = p.rented / eq.difficulty * (s.network.reward + eq.phi);
    let opp_rate = row.opportunity_cost / row.attack_length;
    let nets: Vec<f64> = (0..batch.replications)
        .map(|k| {
            (own_cost_rate + rent_rate) * batch.raw_active_times[k]
                - reward_tilde * batch.raw_attack_blocks[k]
                - batch.raw_attack_fees[k]
                + opp_rate * batch.raw_durations[k]
        })
        .collect();
    let stats = SampleStats::from_samples(&nets);
    row.sim_net_mean = Some(stats.mean);
    row.sim_net_se = Some(stats.std_error);
    row.sim_reps = Some(s.run.replications);
    if s.run.mode == Mode::Cross {
        row.agree = Some((row.net_cost - stats.mean).abs() <= 3.0 * stats.std_error);
    }
    Ok(row)
}

/// Everything the pos verb reports.
#[derive(Debug, Clone, PartialEq)]
pub struct PosRow {
    pub slot_time: f64,
    pub total_stake: f64,
    pub attacker_stake: f64,
    pub phi: f64,
    pub phi_se: f64,
    /// Realized attack-chain fees per attack block (ratio estimator over
    /// the batch).
    pub phi_tilde: f64,
    pub mean_slots: f64,
    pub se_slots: f64,
    pub mean_attack_blocks: f64,
    pub se_attack_blocks: f64,
    pub guaranteed: bool,
    pub attack_cost: f64,
    pub ic_holds: bool,
    pub replications: u32,
}

pub fn run_pos(s: &Scenario) -> Result<PosRow, CliError> {
    let Some(p) = &s.pos else {
        return Err(CliError::validation(
            "scenario has no [pos] block; the pos verb needs one",
        ));
    };
    let slot_time = p.slot_time.expect("defaulted");
    let mut market = s.fee_market();
    market.target_interval = slot_time;
    let params = nakamoto_econ::PosParams {
        slot_time,
        reward: p.reward,
        interest_rate: p.interest_rate,
        exchange_rate: p.exchange_rate,
        fee_market: market,
    };
    let mc = McSettings::new(s.run.samples, s.run.seed);
    let stake = nakamoto_econ::pos_equilibrium(
        &params,
        &[(nakamoto_econ::ValidatorId(0), 1.0)],
        &mc,
    )
    .map_err(|e| CliError::from_econ("stake equilibrium", &e))?;
    let attacker_stake = p.attacker_share * stake.total;
    let cfg = nakamoto_econ::PosRaceConfig {
        attacker_stake,
        total_stake: stake.total,
        params,
        horizon_slots: p.horizon_slots,
        bid_policy: s.run.bid_policy,
        seed: split(s.run.seed, 3),
    };
    let batch = nakamoto_econ::pos_batch(&cfg, s.run.replications)
        .map_err(|e| CliError::from_econ("slot-lottery batch", &e))?;

    let total_blocks: f64 = batch.raw_attack_blocks.iter().sum();
    let total_fees = batch.attack_fees.mean * batch.replications as f64;
    let phi_tilde = if total_blocks > 0.0 { total_fees / total_blocks } else { 0.0 };
    let mean_duration = batch.slots.mean * slot_time;
    let attack_cost = nakamoto_econ::pos_attack_cost(
        attacker_stake,
        stake.total,
        slot_time,
        stake.phi,
        phi_tilde,
        mean_duration,
    )
    .map_err(|e| CliError::from_econ("stake attack cost", &e))?;

    Ok(PosRow {
        slot_time,
        total_stake: stake.total,
        attacker_stake,
        phi: stake.phi,
        phi_se: stake.phi_se,
        phi_tilde,
        mean_slots: batch.slots.mean,
        se_slots: batch.slots.std_error,
        mean_attack_blocks: batch.attack_blocks.mean,
        se_attack_blocks: batch.attack_blocks.std_error,
        guaranteed: batch.guaranteed,
        attack_cost,
        ic_holds: attack_cost >= p.v_attack,
        replications: s.run.replications,
    })
}
