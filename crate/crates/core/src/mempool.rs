//! A shared transaction pool with independent per-chain extraction views.
//!
//! One arrival stream feeds every competing chain. Each chain owns a
//! [`ChainView`]: the set of transactions it has already confirmed. A
//! transaction appears in at most one block *per view*, but a secret fork may
//! confirm transactions that the public chain also confirmed — those public
//! blocks orphan if the fork wins, which is exactly why the attacker treats
//! them as available.
//!
//! The pool is persistent: nothing expires, unconfirmed transactions stay
//! pending forever. Arrivals are generated lazily as the simulation clock
//! advances, so the horizon never needs to be known in advance.
//!
//! Fee bids react to observable congestion through [`BidAdjustPolicy`]: users
//! watch the *public* chain only (a secret fork is invisible), and a
//! transaction's bid is fixed at its arrival instant. When the benchmark
//! market is uncongested every bid is zero (see
//! [`FeeMarket::is_congested`]) and the adjustment has nothing to scale.

use crate::error::{EconError, Result};
use crate::fees::{ArrivalLaw, FeeDistribution, FeeMarket};
use crate::rng::rng_from_seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transaction {
    /// Arrival sequence number, the final tie-breaker in the extraction
    /// order.
    pub seq: u64,
    pub arrival: f64,
    /// Fee bid, fixed at arrival (already includes any adjustment).
    pub fee: f64,
}

/// How users adjust fee bids to observed confirmation slowdowns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BidAdjustPolicy {
    /// Bids are i.i.d. draws regardless of chain conditions.
    None,
    /// A user arriving while the public chain's observed mean inter-block
    /// time is `Y` multiplies its draw by `1 + beta * max(0, Y/tau - 1)`:
    /// upward-only, proportional to the observed slowdown.
    Multiplicative { beta: f64 },
}

impl BidAdjustPolicy {
    pub fn validate(&self) -> Result<()> {
        if let BidAdjustPolicy::Multiplicative { beta } = self {
            if !(beta.is_finite() && *beta >= 0.0) {
                return Err(EconError::domain(format!(
                    "bid adjustment slope must be >= 0 (got {beta})"
                )));
            }
        }
        Ok(())
    }

    fn factor(&self, observed_interval: f64, target_interval: f64) -> f64 {
        match self {
            BidAdjustPolicy::None => 1.0,
            BidAdjustPolicy::Multiplicative { beta } => {
                1.0 + beta * (observed_interval / target_interval - 1.0).max(0.0)
            }
        }
    }
}

/// The shared arrival stream plus the public-chain history that bid
/// adjustment observes.
pub struct Mempool {
    arrivals: Vec<Transaction>,
    fee_dist: FeeDistribution,
    tx_rate: f64,
    arrival_law: ArrivalLaw,
    target_interval: f64,
    bid: BidAdjustPolicy,
    rng: ChaCha8Rng,
    next_arrival: f64,
    generated_up_to: f64,
    public_blocks: u64,
    last_public_block: f64,
    total_fees: f64,
}

impl Mempool {
    /// Build the stream for `market` with the given bid policy and seed.
    /// An uncongested benchmark forces all fees to zero.
    pub fn new(market: &FeeMarket, bid: BidAdjustPolicy, seed: u64) -> Result<Mempool> {
        market.validate()?;
        bid.validate()?;
        let fee_dist = if market.is_congested() {
            market.fee_dist.clone()
        } else {
            FeeDistribution::Degenerate { value: 0.0 }
        };
        let mut rng = rng_from_seed(seed);
        let next_arrival = first_gap(market.tx_rate, market.arrival_law, &mut rng);
        Ok(Mempool {
            arrivals: Vec::new(),
            fee_dist,
            tx_rate: market.tx_rate,
            arrival_law: market.arrival_law,
            target_interval: market.target_interval,
            bid,
            rng,
            next_arrival,
            generated_up_to: 0.0,
            public_blocks: 0,
            last_public_block: 0.0,
            total_fees: 0.0,
        })
    }

    /// Mean inter-block time of the public chain as observed "now": total
    /// elapsed time to its latest block over its block count, or the target
    /// interval before any block exists.
    #[must_use]
    pub fn observed_mean_interval(&self) -> f64 {
        if self.public_blocks == 0 {
            self.target_interval
        } else {
            self.last_public_block / self.public_blocks as f64
        }
    }

    /// Generate all arrivals up to and including time `t`.
    pub fn advance_to(&mut self, t: f64) {
        debug_assert!(t >= self.generated_up_to, "clock must move forward");
        while self.next_arrival <= t {
            let arrival = self.next_arrival;
            let base = self.fee_dist.sample(&mut self.rng);
            let fee = base * self.bid.factor(self.observed_mean_interval(), self.target_interval);
            self.arrivals.push(Transaction {
                seq: self.arrivals.len() as u64,
                arrival,
                fee,
            });
            self.total_fees += fee;
            self.next_arrival = arrival + first_gap(self.tx_rate, self.arrival_law, &mut self.rng);
        }
        self.generated_up_to = t;
    }

    /// Tell the pool the public chain produced a block at `t`. Must be called
    /// in non-decreasing time order, after `advance_to(t)`.
    pub fn record_public_block(&mut self, t: f64) {
        debug_assert!(t >= self.last_public_block);
        self.public_blocks += 1;
        self.last_public_block = t;
    }

    #[must_use]
    pub fn arrivals(&self) -> &[Transaction] {
        &self.arrivals
    }

    /// Sum of all fees that have arrived so far.
    #[must_use]
    pub fn total_fees(&self) -> f64 {
        self.total_fees
    }
}

fn first_gap(tx_rate: f64, law: ArrivalLaw, rng: &mut ChaCha8Rng) -> f64 {
    if tx_rate <= 0.0 {
        return f64::INFINITY;
    }
    match law {
        ArrivalLaw::Poisson => {
            let u: f64 = rng.random();
            -(1.0 - u).ln() / tx_rate
        }
        ArrivalLaw::Fixed => 1.0 / tx_rate,
    }
}

/// Heap key implementing the deterministic extraction order:
/// fee descending, then arrival ascending, then sequence ascending.
#[derive(Clone)]
struct HeapEntry {
    fee: f64,
    arrival: f64,
    seq: u64,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.fee
            .partial_cmp(&other.fee)
            .expect("fees are finite")
            .then_with(|| other.arrival.partial_cmp(&self.arrival).expect("times are finite"))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// One chain's confirmed-set bookkeeping over the shared pool. Cloning a
/// view forks its confirmation history: both copies treat everything
/// extracted so far as spent, then diverge independently.
#[derive(Clone)]
pub struct ChainView {
    cursor: usize,
    heap: BinaryHeap<HeapEntry>,
    extracted_seqs: Vec<u64>,
    extracted_fees: f64,
}

impl ChainView {
    #[must_use]
    pub fn new() -> ChainView {
        ChainView {
            cursor: 0,
            heap: BinaryHeap::new(),
            extracted_seqs: Vec::new(),
            extracted_fees: 0.0,
        }
    }

    /// Fill one block at time `now`: take the best `capacity` transactions
    /// that have arrived by `now` and are not yet confirmed in *this* view.
    /// Returns the block's fee total. The pool must already be advanced to
    /// `now`.
    pub fn extract(&mut self, pool: &Mempool, now: f64, capacity: u32) -> f64 {
        debug_assert!(pool.generated_up_to >= now, "advance the pool first");
        while self.cursor < pool.arrivals.len() && pool.arrivals[self.cursor].arrival <= now {
            let tx = &pool.arrivals[self.cursor];
            self.heap.push(HeapEntry {
                fee: tx.fee,
                arrival: tx.arrival,
                seq: tx.seq,
            });
            self.cursor += 1;
        }
        let mut total = 0.0;
        for _ in 0..capacity {
            match self.heap.pop() {
                Some(e) => {
                    total += e.fee;
                    self.extracted_seqs.push(e.seq);
                }
                None => break,
            }
        }
        self.extracted_fees += total;
        total
    }

    /// Sequence numbers confirmed by this view, in confirmation order.
    #[must_use]
    pub fn extracted_seqs(&self) -> &[u64] {
        &self.extracted_seqs
    }

    /// Total fees this view has confirmed.
    #[must_use]
    pub fn extracted_fees(&self) -> f64 {
        self.extracted_fees
    }
}

impl Default for ChainView {
    fn default() -> Self {
        ChainView::new()
    }
}

/// Replay one arrival stream against a given block schedule and return each
/// block's fee total.
///
/// The schedule is also the public chain that bid adjustment observes.
/// `block_times` must be strictly increasing, positive, and within
/// `horizon`.
pub fn simulate_mempool(
    market: &FeeMarket,
    seed: u64,
    horizon: f64,
    block_times: &[f64],
    bid: BidAdjustPolicy,
) -> Result<Vec<f64>> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(EconError::domain(format!(
            "horizon must be finite and >= 0 (got {horizon})"
        )));
    }
    let mut prev = 0.0;
    for (i, &t) in block_times.iter().enumerate() {
        if !(t > prev) {
            return Err(EconError::domain(format!(
                "block times must be strictly increasing and > 0 (index {i}: {t} after {prev})"
            )));
        }
        if t > horizon {
            return Err(EconError::domain(format!(
                "block time {t} exceeds horizon {horizon}"
            )));
        }
        prev = t;
    }
    let mut pool = Mempool::new(market, bid, seed)?;
    let mut view = ChainView::new();
    let mut out = Vec::with_capacity(block_times.len());
    for &t in block_times {
        pool.advance_to(t);
        pool.record_public_block(t);
        out.push(view.extract(&pool, t, market.block_capacity));
    }
    Ok(out)
}
