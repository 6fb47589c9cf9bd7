//! Discrete-event simulation of a secret fork racing the public chain.
//!
//! Two independent Poisson block processes share one transaction pool
//! ([`crate::mempool`]): the public ("honest") chain and the attacker's
//! secret fork, which both start from the same parent block at time zero.
//! Block production on a chain with power `h` and difficulty `D` is a
//! Poisson process with rate `h / D`; after every event both waiting times
//! are re-sampled, which is statistically exact by memorylessness.
//!
//! Chains are compared by *weight*: the sum over blocks of the difficulty
//! each block was mined at. A challenger displaces the incumbent only with
//! strictly greater weight ([`heaviest_chain`]). At constant difficulty
//! weight order is block-count order, so the classic "lead by one block"
//! race is the special case [`StopRule::LeadByOne`].
//!
//! [`StopRule::Escrow`] models a double-spend against a victim who waits
//! for `w` confirmations: the attacker pauses mining whenever strictly
//! ahead (the lead cannot be lost while paused and mining costs money),
//! resumes when the public chain catches up in weight, and reveals at the
//! first instant the public chain has at least `w` blocks while the fork
//! is strictly heavier. The mining-cost clock (`active_time`) excludes the
//! paused stretches.
//!
//! [`StopRule::FixedDuration`] is a committed mining session: the fork
//! runs for exactly the given span and is then revealed whether or not it
//! is ahead, which is the simulated counterpart of pricing an attack of a
//! chosen fixed length.
//!
//! Difficulty retargets ([`RetargetRule::Retrospective`]) happen per chain
//! from each chain's own realized block times; the first window is partly
//! pre-fork and is credited at the target interval. Honest capacity can
//! also grow after the fork starts ([`EntryModel`]), simulated by thinning
//! a dominating Poisson process.

use crate::cost::CostFunction;
use crate::error::{EconError, Result};
use crate::fees::FeeMarket;
use crate::mempool::{BidAdjustPolicy, ChainView, Mempool};
use crate::rng::{rng_from_seed, split};
use crate::stats::SampleStats;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Which side of the fork a block or event belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chain {
    Attack,
    Honest,
}

/// A run of consecutive blocks mined at one difficulty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSegment {
    pub blocks: u64,
    pub difficulty: f64,
}

/// Total weight of a chain: blocks weighted by the difficulty they were
/// mined at.
#[must_use]
pub fn chain_weight(segments: &[ChainSegment]) -> f64 {
    segments.iter().map(|s| s.blocks as f64 * s.difficulty).sum()
}

/// Chain-selection rule: the challenger wins only with strictly greater
/// weight; a tie keeps the incumbent.
#[must_use]
pub fn heaviest_chain(incumbent: &[ChainSegment], challenger: &[ChainSegment]) -> Chain {
    if chain_weight(challenger) > chain_weight(incumbent) {
        Chain::Attack
    } else {
        Chain::Honest
    }
}

/// When the attacker stops the race and reveals the fork.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StopRule {
    /// Reveal at the first instant the fork is strictly heavier than the
    /// public chain.
    LeadByOne,
    /// Double-spend against `confirmations` escrow confirmations: pause
    /// while strictly ahead, reveal once the public chain has at least
    /// `confirmations` blocks and the fork is strictly heavier.
    Escrow { confirmations: u64 },
    /// Mine the fork for exactly this long, then reveal, ahead or not.
    /// The attacker never pauses; whether the revealed fork displaces the
    /// public chain is reported per trace by the `guaranteed` flag.
    FixedDuration { duration: f64 },
}

/// Per-chain difficulty adjustment driven by realized block times.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RetargetRule {
    /// Difficulty is fixed for the whole race.
    None,
    /// Every `epoch` blocks, rescale difficulty by target-time over
    /// realized-time for the completed window. The fork starts mid-window
    /// with `blocks_remaining` blocks left; the pre-fork part of that
    /// window is credited at exactly the target interval per block.
    Retrospective { epoch: u64, blocks_remaining: u64 },
}

impl RetargetRule {
    pub fn validate(&self) -> Result<()> {
        if let RetargetRule::Retrospective { epoch, blocks_remaining } = self {
            if *epoch == 0 {
                return Err(EconError::domain("retarget epoch must be >= 1"));
            }
            if *blocks_remaining == 0 || blocks_remaining > epoch {
                return Err(EconError::domain(format!(
                    "blocks remaining in the first window must be in 1..=epoch (got {blocks_remaining} of {epoch})"
                )));
            }
        }
        Ok(())
    }
}

/// How honest capacity responds to the attacker withdrawing from public
/// mining.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EntryModel {
    /// Honest power stays at its configured level.
    None,
    /// Entry is frictionless: the defending side mines with the full
    /// benchmark aggregate from the first instant.
    Immediate,
    /// Honest power ramps linearly from its configured level at `rate`
    /// per unit time, capped at `cap`.
    Delayed { rate: f64, cap: f64 },
}

/// One secret-fork race.
#[derive(Debug, Clone)]
pub struct RaceConfig {
    /// Attacker power on the fork.
    pub attack_power: f64,
    /// Honest power on the public chain at the moment the fork starts.
    pub honest_power: f64,
    /// Benchmark aggregate power (used by [`EntryModel::Immediate`]).
    pub aggregate_power: f64,
    /// Difficulty both chains start from.
    pub difficulty: f64,
    /// Block reward.
    pub reward: f64,
    pub fee_market: FeeMarket,
    pub bid_policy: BidAdjustPolicy,
    /// The attacker's cost of running `attack_power` while actively mining.
    pub attacker_cost: CostFunction,
    pub stop_rule: StopRule,
    pub retarget: RetargetRule,
    pub entry: EntryModel,
    /// Hard cap on simulated events; exceeding it is an error, not a
    /// truncated result.
    pub event_budget: u64,
    pub seed: u64,
}

impl RaceConfig {
    pub fn validate(&self) -> Result<()> {
        self.fee_market.validate()?;
        self.bid_policy.validate()?;
        self.attacker_cost.validate()?;
        self.retarget.validate()?;
        if !(self.attack_power > 0.0 && self.attack_power.is_finite()) {
            return Err(EconError::domain(format!(
                "attack power must be > 0 (got {})",
                self.attack_power
            )));
        }
        if !(self.honest_power >= 0.0 && self.honest_power.is_finite()) {
            return Err(EconError::domain(format!(
                "honest power must be >= 0 (got {})",
                self.honest_power
            )));
        }
        if !(self.aggregate_power >= 0.0 && self.aggregate_power.is_finite()) {
            return Err(EconError::domain(format!(
                "aggregate power must be >= 0 (got {})",
                self.aggregate_power
            )));
        }
        if !(self.difficulty > 0.0 && self.difficulty.is_finite()) {
            return Err(EconError::domain(format!(
                "difficulty must be > 0 (got {})",
                self.difficulty
            )));
        }
        if !(self.reward >= 0.0 && self.reward.is_finite()) {
            return Err(EconError::domain(format!(
                "block reward must be >= 0 (got {})",
                self.reward
            )));
        }
        if let EntryModel::Delayed { rate, cap } = self.entry {
            if !(rate >= 0.0 && rate.is_finite() && cap >= 0.0 && cap.is_finite()) {
                return Err(EconError::domain(format!(
                    "delayed entry needs rate >= 0 and cap >= 0 (got rate {rate}, cap {cap})"
                )));
            }
            if cap < self.honest_power {
                return Err(EconError::domain(format!(
                    "entry cap {cap} below starting honest power {}",
                    self.honest_power
                )));
            }
        }
        if let StopRule::FixedDuration { duration } = self.stop_rule {
            if !(duration > 0.0 && duration.is_finite()) {
                return Err(EconError::domain(format!(
                    "fixed session length must be > 0 (got {duration})"
                )));
            }
        }
        if self.event_budget == 0 {
            return Err(EconError::domain("event budget must be >= 1"));
        }
        Ok(())
    }

    /// Honest power level at race time `t`.
    fn honest_level(&self, t: f64) -> f64 {
        match self.entry {
            EntryModel::None => self.honest_power,
            EntryModel::Immediate => self.aggregate_power,
            EntryModel::Delayed { rate, cap } => (self.honest_power + rate * t).min(cap),
        }
    }

    /// Upper bound on honest power over the whole race (thinning
    /// dominator).
    fn honest_cap(&self) -> f64 {
        match self.entry {
            EntryModel::None => self.honest_power,
            EntryModel::Immediate => self.aggregate_power,
            EntryModel::Delayed { cap, .. } => cap,
        }
    }
}

/// A difficulty change on one chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetargetEvent {
    pub time: f64,
    pub chain: Chain,
    pub new_difficulty: f64,
}

/// Everything observable about one finished race.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    /// Wall-clock length of the race.
    pub duration: f64,
    /// Time the attacker actually spent mining (excludes escrow pauses).
    pub active_time: f64,
    pub attack_blocks: u64,
    pub honest_blocks: u64,
    /// Fees collected in the fork's blocks.
    pub attack_fees: f64,
    /// Fees in public blocks that the winning fork orphans.
    pub orphaned_honest_fees: f64,
    /// Gross mining spend: attacker cost rate times active time.
    pub realized_mining_cost: f64,
    /// Mining spend net of the fork's rewards and fees.
    pub realized_attack_cost: f64,
    pub attack_chain: Vec<ChainSegment>,
    pub honest_chain: Vec<ChainSegment>,
    pub retarget_events: Vec<RetargetEvent>,
    /// True when the revealed fork displaces the public chain under
    /// [`heaviest_chain`].
    pub guaranteed: bool,
    /// Events consumed (both chains' blocks plus rejected entry candidates).
    pub events: u64,
}

/// Per-chain mutable state during the race.
struct ChainState {
    difficulty: f64,
    blocks: u64,
    weight: f64,
    segments: Vec<ChainSegment>,
    seg_blocks: u64,
    /// Block count at which the next retarget fires.
    next_retarget: Option<u64>,
    last_retarget_time: f64,
    /// Target-interval credit for the pre-fork part of the first window.
    first_window_credit: f64,
}

impl ChainState {
    fn new(difficulty: f64, retarget: RetargetRule, tau: f64) -> ChainState {
        let (next_retarget, credit) = match retarget {
            RetargetRule::None => (None, 0.0),
            RetargetRule::Retrospective { epoch, blocks_remaining } => (
                Some(blocks_remaining),
                (epoch - blocks_remaining) as f64 * tau,
            ),
        };
        ChainState {
            difficulty,
            blocks: 0,
            weight: 0.0,
            segments: Vec::new(),
            seg_blocks: 0,
            next_retarget,
            last_retarget_time: 0.0,
            first_window_credit: credit,
        }
    }

    /// Record one block at time `t`; retarget if it completes a window.
    fn add_block(
        &mut self,
        t: f64,
        tau: f64,
        retarget: RetargetRule,
        chain: Chain,
        events: &mut Vec<RetargetEvent>,
    ) {
        self.blocks += 1;
        self.seg_blocks += 1;
        self.weight += self.difficulty;
        if self.next_retarget == Some(self.blocks) {
            let RetargetRule::Retrospective { epoch, .. } = retarget else {
                unreachable!("retarget scheduled without a rule")
            };
            let window_time = (t - self.last_retarget_time) + self.first_window_credit;
            let new_difficulty = self.difficulty * (epoch as f64 * tau) / window_time;
            self.segments.push(ChainSegment {
                blocks: self.seg_blocks,
                difficulty: self.difficulty,
            });
            self.seg_blocks = 0;
            self.difficulty = new_difficulty;
            self.first_window_credit = 0.0;
            self.last_retarget_time = t;
            self.next_retarget = Some(self.blocks + epoch);
            events.push(RetargetEvent { time: t, chain, new_difficulty });
        }
    }

    fn into_segments(mut self) -> Vec<ChainSegment> {
        if self.seg_blocks > 0 {
            self.segments.push(ChainSegment {
                blocks: self.seg_blocks,
                difficulty: self.difficulty,
            });
        }
        self.segments
    }
}

fn exp_gap(rate: f64, rng: &mut ChaCha8Rng) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Run one race to completion. Deterministic in `cfg` (including the seed).
pub fn run_race(cfg: &RaceConfig) -> Result<SimTrace> {
    cfg.validate()?;
    let tau = cfg.fee_market.target_interval;
    let capacity = cfg.fee_market.block_capacity;

    let mut block_rng = rng_from_seed(split(cfg.seed, 0));
    let mut pool = Mempool::new(&cfg.fee_market, cfg.bid_policy, split(cfg.seed, 1))?;

    // Pre-fork history. The public chain has been running at the target
    // pace long before the fork, so the pool opens on its working backlog
    // and both branches inherit the same set of already-confirmed
    // transactions. Skipping this would start every race on an empty pool,
    // and the first fork blocks would collect artificially thin fees — a
    // startup artifact, not a prediction. The leftover-fee frontier
    // stabilizes well before 25 blocks, so the backlog composition no
    // longer depends on the warm-up length.
    const PRE_FORK_BLOCKS: u64 = 25;
    let warm_span = PRE_FORK_BLOCKS as f64 * tau;
    let mut history = ChainView::new();
    for k in 1..=PRE_FORK_BLOCKS {
        let tk = k as f64 * tau;
        pool.advance_to(tk);
        pool.record_public_block(tk);
        let _ = history.extract(&pool, tk, capacity);
    }
    let mut attack_view = history.clone();
    let mut honest_view = history;

    let mut attack = ChainState::new(cfg.difficulty, cfg.retarget, tau);
    let mut honest = ChainState::new(cfg.difficulty, cfg.retarget, tau);
    let mut retargets = Vec::new();

    let mut t = 0.0_f64;
    let mut active_time = 0.0_f64;
    let mut attack_fees = 0.0_f64;
    let mut honest_fees = 0.0_f64;
    let mut events = 0_u64;
    let mut suspended = false;

    let honest_cap = cfg.honest_cap();
    let cost_rate = cfg.attacker_cost.eval(cfg.attack_power)?;

    loop {
        if events >= cfg.event_budget {
            return Err(EconError::BudgetExceeded { events });
        }
        events += 1;

        let attack_rate = if suspended { 0.0 } else { cfg.attack_power / attack.difficulty };
        // dominating rate; real entry level is enforced by thinning below
        let honest_rate = honest_cap / honest.difficulty;

        let gap_a = exp_gap(attack_rate, &mut block_rng);
        let gap_h = exp_gap(honest_rate, &mut block_rng);
        if !gap_a.is_finite() && !gap_h.is_finite() {
            return Err(EconError::NonConvergence(
                "race stalled: neither chain can produce a block".into(),
            ));
        }

        let (gap, who) = if gap_a <= gap_h { (gap_a, Chain::Attack) } else { (gap_h, Chain::Honest) };
        // A fixed session ends at its deadline, mid-gap: by memorylessness
        // the discarded block-in-progress carries no information.
        if let StopRule::FixedDuration { duration } = cfg.stop_rule {
            if t + gap > duration {
                active_time += duration - t;
                t = duration;
                break;
            }
        }
        if !suspended {
            active_time += gap;
        }
        t += gap;
        // Chain bookkeeping runs on race time (fork = 0); the shared pool
        // runs on wall time, which includes the pre-fork span.
        pool.advance_to(warm_span + t);

        match who {
            Chain::Attack => {
                attack.add_block(t, tau, cfg.retarget, Chain::Attack, &mut retargets);
                attack_fees += attack_view.extract(&pool, warm_span + t, capacity);
            }
            Chain::Honest => {
                // thinning: accept with prob (current level) / cap
                let level = cfg.honest_level(t);
                let accept = level >= honest_cap || {
                    let u: f64 = block_rng.random();
                    u * honest_cap < level
                };
                if !accept {
                    continue;
                }
                honest.add_block(t, tau, cfg.retarget, Chain::Honest, &mut retargets);
                pool.record_public_block(warm_span + t);
                honest_fees += honest_view.extract(&pool, warm_span + t, capacity);
            }
        }

        let done = match cfg.stop_rule {
            StopRule::LeadByOne => attack.weight > honest.weight,
            StopRule::Escrow { confirmations } => {
                honest.blocks >= confirmations && attack.weight > honest.weight
            }
            // ends mid-gap above, never on a block
            StopRule::FixedDuration { .. } => false,
        };
        if done {
            break;
        }
        suspended = match cfg.stop_rule {
            StopRule::LeadByOne | StopRule::FixedDuration { .. } => false,
            StopRule::Escrow { .. } => attack.weight > honest.weight,
        };
    }

    let attack_blocks = attack.blocks;
    let honest_blocks = honest.blocks;
    let attack_chain = attack.into_segments();
    let honest_chain = honest.into_segments();
    let guaranteed = heaviest_chain(&honest_chain, &attack_chain) == Chain::Attack;
    let realized_mining_cost = cost_rate * active_time;
    let realized_attack_cost =
        realized_mining_cost - attack_blocks as f64 * cfg.reward - attack_fees;

    Ok(SimTrace {
        duration: t,
        active_time,
        attack_blocks,
        honest_blocks,
        attack_fees,
        orphaned_honest_fees: honest_fees,
        realized_mining_cost,
        realized_attack_cost,
        attack_chain,
        honest_chain,
        retarget_events: retargets,
        guaranteed,
        events,
    })
}

/// Aggregates over a batch of independent races.
#[derive(Debug, Clone)]
pub struct BatchSummary {
    pub replications: usize,
    pub duration: SampleStats,
    pub active_time: SampleStats,
    pub attack_blocks: SampleStats,
    pub honest_blocks: SampleStats,
    pub attack_fees: SampleStats,
    pub orphaned_honest_fees: SampleStats,
    pub net_attack_cost: SampleStats,
    /// Per-replication inputs for downstream tolerance arithmetic. Callers
    /// that re-price a race (e.g. with rented power or an opportunity-cost
    /// flow) combine these columns row-wise so correlations survive.
    pub raw_durations: Vec<f64>,
    pub raw_net_costs: Vec<f64>,
    pub raw_active_times: Vec<f64>,
    pub raw_attack_blocks: Vec<f64>,
    pub raw_attack_fees: Vec<f64>,
}

/// Run `replications` independent races in parallel. Replication `k` uses
/// seed `split(cfg.seed, k)`; results are aggregated in replication order,
/// so the outcome is independent of thread scheduling.
pub fn run_batch(cfg: &RaceConfig, replications: usize) -> Result<BatchSummary> {
    cfg.validate()?;
    if replications == 0 {
        return Err(EconError::domain("need at least one replication"));
    }
    let traces: Vec<(usize, Result<SimTrace>)> = (0..replications)
        .into_par_iter()
        .map(|k| {
            let mut sub = cfg.clone();
            sub.seed = split(cfg.seed, k as u64);
            (k, run_race(&sub))
        })
        .collect();

    let mut ordered = Vec::with_capacity(replications);
    for (k, res) in traces {
        match res {
            Ok(tr) => ordered.push(tr),
            Err(e) => {
                return Err(EconError::Replication { index: k, source: Box::new(e) });
            }
        }
    }

    let field = |f: &dyn Fn(&SimTrace) -> f64| -> Vec<f64> { ordered.iter().map(f).collect() };
    let raw_durations = field(&|t| t.duration);
    let raw_net_costs = field(&|t| t.realized_attack_cost);
    let raw_active_times = field(&|t| t.active_time);
    let raw_attack_blocks = field(&|t| t.attack_blocks as f64);
    let raw_attack_fees = field(&|t| t.attack_fees);
    Ok(BatchSummary {
        replications,
        duration: SampleStats::from_samples(&raw_durations),
        active_time: SampleStats::from_samples(&raw_active_times),
        attack_blocks: SampleStats::from_samples(&raw_attack_blocks),
        honest_blocks: SampleStats::from_samples(&field(&|t| t.honest_blocks as f64)),
        attack_fees: SampleStats::from_samples(&raw_attack_fees),
        orphaned_honest_fees: SampleStats::from_samples(&field(&|t| t.orphaned_honest_fees)),
        net_attack_cost: SampleStats::from_samples(&raw_net_costs),
        raw_durations,
        raw_net_costs,
        raw_active_times,
        raw_attack_blocks,
        raw_attack_fees,
    })
}
