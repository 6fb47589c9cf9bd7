//! Economics of majority attacks on chains that follow the longest/heaviest
//! chain rule.
//!
//! The crate is organized bottom-up:
//!
//! * [`cost`] — per-time mining cost functions (linear, linear with an
//!   outside-procurement premium, strictly convex power).
//! * [`fees`] — fee distributions and Monte Carlo estimators for expected
//!   per-block fee revenue at a given confirmation interval, including the
//!   "second tier" fees available to a chain that replays an interval of
//!   history with one extra block.
//! * [`mempool`] — a shared transaction pool with per-chain extraction views,
//!   used by the simulators.
//! * [`equilibrium`] — free-entry benchmark: aggregate hash power, per-miner
//!   allocations, and the difficulty implied by a target block interval.
//! * [`fork_sim`] — discrete-event simulation of a secret fork race against
//!   the honest chain (stopping rules, difficulty retargeting, honest
//!   re-entry, seeded batches).
//! * [`attack`] — analytic attack economics: minimum and cost-minimizing
//!   attack power, mounting and opportunity cost, break-even and critical
//!   incumbent sizes, difficulty-adjustment effects, renting, and the
//!   fee-only cost of an attack mounted entirely with outside power.
//! * [`pos`] — the proof-of-stake analogue (slot lottery instead of hash
//!   race; the fee logic carries over).
//!
//! All Monte Carlo entry points take an explicit seed and are deterministic
//! functions of their arguments; batches derive per-replication seeds with
//! [`rng::split`].

pub mod attack;
pub mod cost;
pub mod equilibrium;
pub mod error;
pub mod fees;
pub mod fork_sim;
pub mod mempool;
pub mod pos;
pub mod rng;
pub mod solve;
pub mod stats;

pub use attack::{
    attack_cost_with_retarget, break_even_power, critical_incumbent_power, difficulty_adjust,
    hitting_time_length, min_attack_power, min_attack_power_rented, optimal_attack_power,
    outside_attack_cost, AttackAssessment, AttackContext, AttackLength, AttackPlan, BreakEven,
    CostRegime, DifficultyAdjust, OptimalPower, PhiTilde,
};
pub use cost::CostFunction;
pub use equilibrium::{best_response, solve_equilibrium, Equilibrium, MinerId, MinerSpec};
pub use error::EconError;
pub use fees::{ArrivalLaw, FeeDistribution, FeeEstimate, FeeMarket, McSettings};
pub use fork_sim::{
    heaviest_chain, run_batch, run_race, BatchSummary, Chain, ChainSegment, EntryModel, RaceConfig,
    RetargetEvent, RetargetRule, SimTrace, StopRule,
};
pub use mempool::{BidAdjustPolicy, ChainView, Mempool, Transaction};
pub use pos::{
    pos_attack_cost, pos_batch, pos_equilibrium, simulate_pos_attack, PosBatchSummary, PosParams,
    PosRaceConfig, PosTrace, StakeSet, ValidatorId,
};
pub use stats::SampleStats;
