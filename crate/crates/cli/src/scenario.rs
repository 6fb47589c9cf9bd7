//! Scenario files: the complete, reloadable record of one experiment.
//!
//! Scenarios are TOML. Every run echoes the fully-resolved scenario (all
//! defaults applied, all command-line overrides folded in) next to its
//! results, and loading that echo reproduces the run bit for bit.
//!
//! # Schema (`schema_version = 1`)
//!
//! ```toml
//! schema_version = 1
//!
//! [network]
//! reward = 10.0                 # block reward R (required)
//! target_interval = 1.0         # tau (required)
//! tx_rate = 16.0                # arrivals per unit time (required)
//! block_capacity = 4            # transactions per block (required)
//! fee_distribution = { type = "uniform", lo = 0.0, hi = 1.0 }   # default
//! arrival_law = "poisson"       # "poisson" | "fixed"; default "poisson"
//!
//! [[miners]]                    # at least one required
//! id = 0
//! cost = { type = "linear", c = 1.0 }
//! # cost = { type = "power", gamma = 1.0, p = 2.0 }
//!
//! [attack]                      # optional; needed by attack/sweep verbs
//! attacker = 0                  # default: lowest miner id
//! alpha = [1.0]                 # inside-share sweep axis, each in [0, 1]
//! kappa = [1.0]                 # outside-premium sweep axis, each >= 1
//! deployed = []                 # own-power axis; empty = engine-chosen
//! rented = [0.0]                # rented honest power axis
//! retarget_blocks = [0]         # post-fork blocks completing the first
//!                               # difficulty window; 0 = no retarget
//! retarget_epoch = 2016         # window size when retarget_blocks > 0
//! lengths = ["hitting_time"]    # attack-length axis: "hitting_time" | time
//! v_attack = 0.0                # prize of a successful attack
//! phi_tilde = { type = "fee_market" }   # or { type = "fixed", value = x }
//! # reward_tilde = 10.0         # attack-chain reward; default = network
//!
//! [run]
//! mode = "analytic"             # "analytic" | "simulate" | "cross"
//! replications = 10000
//! seed = 42
//! samples = 20000               # fee-estimator Monte Carlo sample count
//! event_budget = 10000000       # per-race event cap
//! stop_rule = { type = "lead_by_one" }  # or { type = "escrow", confirmations = 6 }
//! bid_policy = { type = "none" }        # or { type = "multiplicative", beta = 0.5 }
//! out_dir = "out"
//!
//! # stop_rule governs rows whose length is "hitting_time". A numeric
//! # length instead commits the simulated attacker to a mining session of
//! # exactly that span (revealed ahead or not), matching the span the
//! # analytic side prices.
//!
//! [pos]                         # optional; needed by the pos verb
//! slot_time = 1.0               # default: network target_interval
//! reward = 100.0
//! interest_rate = 0.01
//! exchange_rate = 100.0
//! attacker_share = 0.6          # attacker's share of total stake, (0, 1]
//! horizon_slots = 100000
//! v_attack = 0.0
//! ```
//!
//! The proof-of-stake block inherits the fee market from `[network]` with
//! its interval forced to `slot_time` (one block per slot).
//!
//! Unknown keys are rejected — a typo fails loudly instead of silently
//! running a different experiment.

use nakamoto_econ::{
    ArrivalLaw, BidAdjustPolicy, CostFunction, FeeDistribution, FeeMarket, MinerId, MinerSpec,
    PhiTilde, StopRule,
};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub network: Network,
    pub miners: Vec<Miner>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attack: Option<Attack>,
    pub run: Run,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos: Option<Pos>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Network {
    pub reward: f64,
    pub target_interval: f64,
    pub tx_rate: f64,
    pub block_capacity: u32,
    #[serde(default = "default_fee_distribution")]
    pub fee_distribution: FeeDistribution,
    #[serde(default = "default_arrival_law")]
    pub arrival_law: ArrivalLaw,
}

fn default_fee_distribution() -> FeeDistribution {
    FeeDistribution::Uniform { lo: 0.0, hi: 1.0 }
}

fn default_arrival_law() -> ArrivalLaw {
    ArrivalLaw::Poisson
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Miner {
    pub id: u32,
    pub cost: CostFunction,
}

/// One sweep axis entry for the attack length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthSpec {
    Time(f64),
    Named(NamedLength),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedLength {
    HittingTime,
}

impl fmt::Display for LengthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthSpec::Time(t) => write!(f, "{t}"),
            LengthSpec::Named(NamedLength::HittingTime) => write!(f, "hitting_time"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attack {
    /// Defaults to the lowest miner id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<u32>,
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    #[serde(default = "default_kappa")]
    pub kappa: Vec<f64>,
    /// Empty means "engine-chosen at every point".
    #[serde(default)]
    pub deployed: Vec<f64>,
    #[serde(default = "default_rented")]
    pub rented: Vec<f64>,
    #[serde(default = "default_retarget_blocks")]
    pub retarget_blocks: Vec<u64>,
    #[serde(default = "default_retarget_epoch")]
    pub retarget_epoch: u64,
    #[serde(default = "default_lengths")]
    pub lengths: Vec<LengthSpec>,
    #[serde(default)]
    pub v_attack: f64,
    #[serde(default = "default_phi_tilde")]
    pub phi_tilde: PhiTilde,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward_tilde: Option<f64>,
}

fn default_alpha() -> Vec<f64> {
    vec![1.0]
}
fn default_kappa() -> Vec<f64> {
    vec![1.0]
}
fn default_rented() -> Vec<f64> {
    vec![0.0]
}
fn default_retarget_blocks() -> Vec<u64> {
    vec![0]
}
fn default_retarget_epoch() -> u64 {
    2016
}
fn default_lengths() -> Vec<LengthSpec> {
    vec![LengthSpec::Named(NamedLength::HittingTime)]
}
fn default_phi_tilde() -> PhiTilde {
    PhiTilde::FeeMarket
}

impl Default for Attack {
    fn default() -> Self {
        Attack {
            attacker: None,
            alpha: default_alpha(),
            kappa: default_kappa(),
            deployed: Vec::new(),
            rented: default_rented(),
            retarget_blocks: default_retarget_blocks(),
            retarget_epoch: default_retarget_epoch(),
            lengths: default_lengths(),
            v_attack: 0.0,
            phi_tilde: default_phi_tilde(),
            reward_tilde: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Simulate,
    Cross,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Cross => "cross",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Run {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: u32,
    #[serde(default = "default_event_budget")]
    pub event_budget: u64,
    #[serde(default = "default_stop_rule")]
    pub stop_rule: StopRule,
    #[serde(default = "default_bid_policy")]
    pub bid_policy: BidAdjustPolicy,
    #[serde(default = "default_out_dir")]
    pub out_dir: String,
}

fn default_mode() -> Mode {
    Mode::Analytic
}
fn default_replications() -> u32 {
    10_000
}
fn default_seed() -> u64 {
    42
}
fn default_samples() -> u32 {
    20_000
}
fn default_event_budget() -> u64 {
    10_000_000
}
fn default_stop_rule() -> StopRule {
    StopRule::LeadByOne
}
fn default_bid_policy() -> BidAdjustPolicy {
    BidAdjustPolicy::None
}
fn default_out_dir() -> String {
    "out".to_string()
}

impl Default for Run {
    fn default() -> Self {
        Run {
            mode: default_mode(),
            replications: default_replications(),
            seed: default_seed(),
            samples: default_samples(),
            event_budget: default_event_budget(),
            stop_rule: default_stop_rule(),
            bid_policy: default_bid_policy(),
            out_dir: default_out_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pos {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slot_time: Option<f64>,
    pub reward: f64,
    pub interest_rate: f64,
    pub exchange_rate: f64,
    pub attacker_share: f64,
    #[serde(default = "default_horizon_slots")]
    pub horizon_slots: u64,
    #[serde(default)]
    pub v_attack: f64,
}

fn default_horizon_slots() -> u64 {
    100_000
}

impl Scenario {
    /// Parse and semantically validate a scenario file.
    pub fn load(path: &Path) -> Result<Scenario, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("cannot read scenario {}: {e}", path.display()))
        })?;
        let mut s: Scenario = toml::from_str(&text).map_err(|e| {
            // toml's error Display carries line/column and the failing key
            CliError::validation(format!("scenario {}: {e}", path.display()))
        })?;
        s.apply_defaults();
        s.validate()?;
        Ok(s)
    }

    /// Materialize the remaining implicit defaults so the echo is complete.
    pub fn apply_defaults(&mut self) {
        if let Some(a) = &mut self.attack {
            if a.attacker.is_none() {
                a.attacker = self.miners.iter().map(|m| m.id).min();
            }
        }
        if let Some(p) = &mut self.pos {
            if p.slot_time.is_none() {
                p.slot_time = Some(self.network.target_interval);
            }
        }
    }

    /// The fully-resolved scenario as TOML (the echo artifact).
    pub fn echo(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self)
            .map_err(|e| CliError::validation(format!("cannot serialize scenario echo: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: String| Err(CliError::validation(msg));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "schema_version: expected {SCHEMA_VERSION}, got {}",
                self.schema_version
            ));
        }
        let n = &self.network;
        if !(n.reward >= 0.0 && n.reward.is_finite()) {
            return fail(format!("network.reward: must be >= 0 (got {})", n.reward));
        }
        self.fee_market()
            .validate()
            .map_err(|e| CliError::validation(format!("network: {e}")))?;

        if self.miners.is_empty() {
            return fail("miners: at least one miner is required".into());
        }
        let mut ids = std::collections::BTreeSet::new();
        for m in &self.miners {
            if !ids.insert(m.id) {
                return fail(format!("miners: duplicate id {}", m.id));
            }
            m.cost
                .validate()
                .map_err(|e| CliError::validation(format!("miners[id={}].cost: {e}", m.id)))?;
        }

        if let Some(a) = &self.attack {
            let attacker = a.attacker.expect("defaulted in apply_defaults");
            if !ids.contains(&attacker) {
                return fail(format!("attack.attacker: no miner with id {attacker}"));
            }
            let axis_nonempty: [(&str, bool); 5] = [
                ("attack.alpha", a.alpha.is_empty()),
                ("attack.kappa", a.kappa.is_empty()),
                ("attack.rented", a.rented.is_empty()),
                ("attack.retarget_blocks", a.retarget_blocks.is_empty()),
                ("attack.lengths", a.lengths.is_empty()),
            ];
            for (name, empty) in axis_nonempty {
                if empty {
                    return fail(format!("{name}: sweep axis must be non-empty"));
                }
            }
            for &x in &a.alpha {
                if !((0.0..=1.0).contains(&x) && x.is_finite()) {
                    return fail(format!("attack.alpha: entries must lie in [0, 1] (got {x})"));
                }
            }
            for &x in &a.kappa {
                if !(x >= 1.0 && x.is_finite()) {
                    return fail(format!("attack.kappa: entries must be >= 1 (got {x})"));
                }
            }
            for &x in &a.deployed {
                if !(x >= 0.0 && x.is_finite()) {
                    return fail(format!("attack.deployed: entries must be >= 0 (got {x})"));
                }
            }
            for &x in &a.rented {
                if !(x >= 0.0 && x.is_finite()) {
                    return fail(format!("attack.rented: entries must be >= 0 (got {x})"));
                }
            }
            if a.retarget_blocks.iter().any(|&d| d > 0) {
                if a.retarget_epoch == 0 {
                    return fail("attack.retarget_epoch: must be >= 1".into());
                }
                for &d in &a.retarget_blocks {
                    if d > a.retarget_epoch {
                        return fail(format!(
                            "attack.retarget_blocks: {d} exceeds retarget_epoch {}",
                            a.retarget_epoch
                        ));
                    }
                }
                if a.rented.iter().any(|&r| r > 0.0) {
                    return fail(
                        "attack: rented power cannot be combined with a retarget sweep \
                         (the rented flow is priced at the pre-retarget difficulty only)"
                            .into(),
                    );
                }
            }
            for &l in &a.lengths {
                if let LengthSpec::Time(t) = l {
                    if !(t > 0.0 && t.is_finite()) {
                        return fail(format!("attack.lengths: times must be > 0 (got {t})"));
                    }
                }
            }
            if !(a.v_attack >= 0.0 && a.v_attack.is_finite()) {
                return fail(format!("attack.v_attack: must be >= 0 (got {})", a.v_attack));
            }
            if let PhiTilde::Fixed { value } = a.phi_tilde {
                if !(value >= 0.0 && value.is_finite()) {
                    return fail(format!("attack.phi_tilde: must be >= 0 (got {value})"));
                }
            }
            if let Some(r) = a.reward_tilde {
                if !(r >= 0.0 && r.is_finite()) {
                    return fail(format!("attack.reward_tilde: must be >= 0 (got {r})"));
                }
            }
        }

        let r = &self.run;
        if r.replications == 0 {
            return fail("run.replications: must be >= 1".into());
        }
        if r.samples == 0 {
            return fail("run.samples: must be >= 1".into());
        }
        if r.event_budget == 0 {
            return fail("run.event_budget: must be >= 1".into());
        }
        if let StopRule::FixedDuration { .. } = r.stop_rule {
            return fail(
                "run.stop_rule: fixed_duration is chosen per row by putting a time \
                 on attack.lengths; configure lead_by_one or escrow here"
                    .into(),
            );
        }
        r.bid_policy
            .validate()
            .map_err(|e| CliError::validation(format!("run.bid_policy: {e}")))?;
        if r.out_dir.is_empty() {
            return fail("run.out_dir: must be non-empty".into());
        }

        if let Some(p) = &self.pos {
            let slot = p.slot_time.expect("defaulted in apply_defaults");
            if !(slot > 0.0 && slot.is_finite()) {
                return fail(format!("pos.slot_time: must be > 0 (got {slot})"));
            }
            if !(p.reward >= 0.0 && p.reward.is_finite()) {
                return fail(format!("pos.reward: must be >= 0 (got {})", p.reward));
            }
            if !(p.interest_rate > 0.0 && p.interest_rate.is_finite()) {
                return fail(format!(
                    "pos.interest_rate: must be > 0 (got {})",
                    p.interest_rate
                ));
            }
            if !(p.exchange_rate > 0.0 && p.exchange_rate.is_finite()) {
                return fail(format!(
                    "pos.exchange_rate: must be > 0 (got {})",
                    p.exchange_rate
                ));
            }
            if !(p.attacker_share > 0.0 && p.attacker_share <= 1.0) {
                return fail(format!(
                    "pos.attacker_share: must lie in (0, 1] (got {})",
                    p.attacker_share
                ));
            }
            if p.horizon_slots == 0 {
                return fail("pos.horizon_slots: must be >= 1".into());
            }
            if !(p.v_attack >= 0.0 && p.v_attack.is_finite()) {
                return fail(format!("pos.v_attack: must be >= 0 (got {})", p.v_attack));
            }
        }
        Ok(())
    }

    /// The benchmark fee market described by `[network]`.
    #[must_use]
    pub fn fee_market(&self) -> FeeMarket {
        FeeMarket {
            target_interval: self.network.target_interval,
            tx_rate: self.network.tx_rate,
            block_capacity: self.network.block_capacity,
            fee_dist: self.network.fee_distribution.clone(),
            arrival_law: self.network.arrival_law,
        }
    }

    /// The miner population in core types.
    #[must_use]
    pub fn miner_specs(&self) -> Vec<MinerSpec> {
        self.miners
            .iter()
            .map(|m| MinerSpec { id: MinerId(m.id), cost: m.cost.clone() })
            .collect()
    }

    /// The attack block, defaulted if the file omitted it entirely.
    #[must_use]
    pub fn attack_or_default(&self) -> Attack {
        match &self.attack {
            Some(a) => a.clone(),
            None => {
                let mut a = Attack::default();
                a.attacker = self.miners.iter().map(|m| m.id).min();
                a
            }
        }
    }
}
