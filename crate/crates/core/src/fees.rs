//! Fee distributions and Monte Carlo estimators of per-block fee revenue.
//!
//! The model: users submit unit-size transactions as a Poisson stream with
//! rate `tx_rate`; each carries a fee drawn i.i.d. from a [`FeeDistribution`];
//! a block holds at most `block_capacity` transactions and a revenue-seeking
//! block producer always includes the best-paying ones.
//!
//! Congestion is a property of the benchmark chain: with target interval
//! `tau`, blocks fill on average iff `tau * tx_rate > block_capacity`. When
//! the benchmark is *uncongested* nobody ever bids a positive fee (a zero-fee
//! transaction still confirms quickly), so every estimator here returns an
//! exact zero in that regime, whatever interval is queried. All quantities
//! scale with the confirmation interval actually queried, which is how a
//! slower (attacking) chain earns more fees per block and a faster one fewer.
//!
//! The per-block estimator conditions on the arrival count: it combines
//! exact Poisson probabilities over a truncated count window with Monte
//! Carlo estimates of the expected top-`block_capacity` fee sum *given* the
//! count. The conditional estimates depend only on the count and the seed,
//! never on the interval, so the estimate is a smooth deterministic function
//! of the interval — root finders and fixed-point loops can iterate on it to
//! tight tolerances. The `Fixed` arrival law (used to pin order-statistics
//! oracles in tests) and the windowed second-tier estimator sample blocks
//! directly instead.

use crate::error::{EconError, Result};
use crate::rng::{rng_from_seed, split};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeeDistribution {
    /// Every transaction pays exactly `value`.
    Degenerate { value: f64 },
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// Exponential with the given mean.
    Exponential { mean: f64 },
    /// Resample from an observed fee list (stored sorted ascending).
    Empirical { fees: Vec<f64> },
}

impl FeeDistribution {
    pub fn degenerate(value: f64) -> Result<Self> {
        let d = FeeDistribution::Degenerate { value };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = FeeDistribution::Uniform { lo, hi };
        d.validate()?;
        Ok(d)
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        let d = FeeDistribution::Exponential { mean };
        d.validate()?;
        Ok(d)
    }

    /// Sorts the sample; rejects empty lists and negative fees.
    pub fn empirical(mut fees: Vec<f64>) -> Result<Self> {
        fees.sort_by(|a, b| a.partial_cmp(b).expect("fee values must be comparable"));
        let d = FeeDistribution::Empirical { fees };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FeeDistribution::Degenerate { value } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(EconError::domain(format!(
                        "degenerate fee must be finite and >= 0 (got {value})"
                    )));
                }
            }
            FeeDistribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo >= 0.0 && hi >= lo) {
                    return Err(EconError::domain(format!(
                        "uniform fee range needs 0 <= lo <= hi (got [{lo}, {hi}])"
                    )));
                }
            }
            FeeDistribution::Exponential { mean } => {
                if !(mean.is_finite() && *mean > 0.0) {
                    return Err(EconError::domain(format!(
                        "exponential fee mean must be > 0 (got {mean})"
                    )));
                }
            }
            FeeDistribution::Empirical { fees } => {
                if fees.is_empty() {
                    return Err(EconError::domain("empirical fee list is empty".to_string()));
                }
                if fees
                    .iter()
                    .any(|f| !f.is_finite() || *f < 0.0)
                {
                    return Err(EconError::domain(
                        "empirical fees must be finite and >= 0".to_string(),
                    ));
                }
                if fees.windows(2).any(|w| w[0] > w[1]) {
                    return Err(EconError::domain(
                        "empirical fees must be sorted ascending".to_string(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            FeeDistribution::Degenerate { value } => *value,
            FeeDistribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            FeeDistribution::Exponential { mean } => *mean,
            FeeDistribution::Empirical { fees } => fees.iter().sum::<f64>() / fees.len() as f64,
        }
    }

    /// Inverse CDF at `u` (clamped into `[0, 1)`); sampling draws
    /// `quantile(U)`, so the two are consistent by construction.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0 - f64::EPSILON);
        match self {
            FeeDistribution::Degenerate { value } => *value,
            FeeDistribution::Uniform { lo, hi } => lo + u * (hi - lo),
            FeeDistribution::Exponential { mean } => -mean * (1.0 - u).ln(),
            FeeDistribution::Empirical { fees } => fees[(u * fees.len() as f64) as usize],
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// How many transactions arrive in a window of length `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrivalLaw {
    /// The model proper: `N ~ Poisson(tx_rate * w)`.
    Poisson,
    /// Deterministic `round(tx_rate * w)`; used to pin order-statistics
    /// oracles in tests.
    Fixed,
}

/// Sample size and seed for a Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub samples: u32,
    pub seed: u64,
}

impl McSettings {
    pub fn new(samples: u32, seed: u64) -> Self {
        McSettings { samples, seed }
    }
}

/// A Monte Carlo estimate with its standard error. `samples == 0` marks an
/// exact (non-sampled) value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeeEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u32,
}

impl FeeEstimate {
    pub const fn exact(value: f64) -> Self {
        FeeEstimate {
            mean: value,
            std_error: 0.0,
            samples: 0,
        }
    }
}

/// The fee environment of a chain: demand side (`tx_rate`, `fee_dist`),
/// supply side (`block_capacity`), and the benchmark target interval that
/// decides congestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeeMarket {
    /// Benchmark block interval `tau`.
    pub target_interval: f64,
    /// Transaction arrival rate `sigma` (transactions per unit time).
    pub tx_rate: f64,
    /// Transactions per block `b`.
    pub block_capacity: u32,
    pub fee_dist: FeeDistribution,
    pub arrival_law: ArrivalLaw,
}

impl FeeMarket {
    pub fn validate(&self) -> Result<()> {
        if !(self.target_interval > 0.0 && self.target_interval.is_finite()) {
            return Err(EconError::domain(format!(
                "target interval must be > 0 (got {})",
                self.target_interval
            )));
        }
        if !(self.tx_rate >= 0.0 && self.tx_rate.is_finite()) {
            return Err(EconError::domain(format!(
                "tx rate must be >= 0 (got {})",
                self.tx_rate
            )));
        }
        if self.block_capacity == 0 {
            return Err(EconError::domain(
                "block capacity must be >= 1".to_string(),
            ));
        }
        self.fee_dist.validate()
    }

    /// Benchmark congestion test: do blocks fill at the target interval?
    /// When this is false, equilibrium fee bids are zero and every estimator
    /// returns an exact 0.
    #[must_use]
    pub fn is_congested(&self) -> bool {
        self.target_interval * self.tx_rate > f64::from(self.block_capacity)
    }

    fn draw_count<R: Rng + ?Sized>(&self, window: f64, rng: &mut R) -> usize {
        let lambda = self.tx_rate * window;
        if lambda <= 0.0 {
            return 0;
        }
        match self.arrival_law {
            ArrivalLaw::Poisson => {
                let pois = Poisson::new(lambda).expect("lambda > 0 checked above");
                pois.sample(rng) as usize
            }
            ArrivalLaw::Fixed => lambda.round() as usize,
        }
    }

    /// Expected total fees collected by one block mined at confirmation
    /// interval `interval`. Exact 0 when the benchmark is uncongested.
    ///
    /// Under the `Poisson` law this mixes exact count probabilities with
    /// per-count Monte Carlo conditional means (see the module docs), making
    /// the result smooth in `interval`; under `Fixed` it averages
    /// `mc.samples` direct block draws.
    pub fn expected_fees_per_block(&self, interval: f64, mc: &McSettings) -> Result<FeeEstimate> {
        self.validate()?;
        if !(interval > 0.0 && interval.is_finite()) {
            return Err(EconError::domain(format!(
                "confirmation interval must be > 0 (got {interval})"
            )));
        }
        if mc.samples < 1 {
            return Err(EconError::domain(
                "Monte Carlo estimate needs at least 1 sample".to_string(),
            ));
        }
        if !self.is_congested() {
            return Ok(FeeEstimate::exact(0.0));
        }
        match self.arrival_law {
            ArrivalLaw::Fixed => {
                let mut rng = rng_from_seed(mc.seed);
                let b = self.block_capacity as usize;
                let mut sum = 0.0;
                let mut sum_sq = 0.0;
                let mut fees: Vec<f64> = Vec::new();
                for _ in 0..mc.samples {
                    let n = self.draw_count(interval, &mut rng);
                    fees.clear();
                    fees.extend((0..n).map(|_| self.fee_dist.sample(&mut rng)));
                    let total = top_k_sum(&mut fees, b);
                    sum += total;
                    sum_sq += total * total;
                }
                Ok(estimate_from_sums(sum, sum_sq, mc.samples))
            }
            ArrivalLaw::Poisson => {
                let lambda = self.tx_rate * interval;
                // Spread the sample budget across the count window; floor it
                // so thin budgets still give every count a usable estimate.
                let k = (mc.samples / 100).max(64).min(mc.samples).max(1);
                let (lo, weights) = poisson_window(lambda);
                let mut mean = 0.0;
                let mut var = 0.0;
                for (i, w) in weights.iter().enumerate() {
                    if *w < 1e-16 {
                        continue;
                    }
                    let n = lo + i as u64;
                    let (m, v) = self.conditional_top_b(n, k, mc.seed);
                    mean += w * m;
                    var += w * w * v;
                }
                Ok(FeeEstimate {
                    mean,
                    std_error: var.sqrt(),
                    samples: mc.samples,
                })
            }
        }
    }

    /// Monte Carlo estimate of the expected top-`block_capacity` fee sum
    /// among exactly `n` arrivals: `k` draws on a stream derived from
    /// `(seed, n)` only. Returns the mean and the variance of the mean.
    fn conditional_top_b(&self, n: u64, k: u32, seed: u64) -> (f64, f64) {
        if n == 0 {
            return (0.0, 0.0);
        }
        let mut rng = rng_from_seed(split(seed, n + 1));
        let b = self.block_capacity as usize;
        let mut fees = vec![0.0_f64; n as usize];
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..k {
            for f in fees.iter_mut() {
                *f = self.fee_dist.sample(&mut rng);
            }
            let total = top_k_sum(&mut fees, b);
            sum += total;
            sum_sq += total * total;
        }
        let kf = f64::from(k);
        let mean = sum / kf;
        let variance = if k > 1 {
            ((sum_sq - sum * sum / kf) / (kf - 1.0)).max(0.0)
        } else {
            0.0
        };
        (mean, variance / kf)
    }

    /// Expected fees available to the *one extra block* an attacking chain
    /// fits into a window of length `attack_len`: draw the window's arrivals,
    /// discard the best `floor(attack_len / tau) * block_capacity` of them
    /// (already claimed by benchmark-rate blocks), and sum the best
    /// `block_capacity` of what remains. Exact 0 when uncongested.
    pub fn second_tier_fees(&self, attack_len: f64, mc: &McSettings) -> Result<FeeEstimate> {
        self.validate()?;
        if !(attack_len >= 0.0 && attack_len.is_finite()) {
            return Err(EconError::domain(format!(
                "attack length must be >= 0 (got {attack_len})"
            )));
        }
        if mc.samples < 1 {
            return Err(EconError::domain(
                "Monte Carlo estimate needs at least 1 sample".to_string(),
            ));
        }
        if !self.is_congested() {
            return Ok(FeeEstimate::exact(0.0));
        }
        let b = self.block_capacity as usize;
        let skip = (attack_len / self.target_interval + 1e-9).floor() as usize * b;
        let mut rng = rng_from_seed(mc.seed);
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        let mut fees: Vec<f64> = Vec::new();
        for _ in 0..mc.samples {
            let n = self.draw_count(attack_len, &mut rng);
            fees.clear();
            fees.extend((0..n).map(|_| self.fee_dist.sample(&mut rng)));
            let total = if n <= skip {
                0.0
            } else {
                fees.sort_unstable_by(|a, b| b.partial_cmp(a).expect("fees are finite"));
                fees[skip..].iter().take(b).sum()
            };
            sum += total;
            sum_sq += total * total;
        }
        Ok(estimate_from_sums(sum, sum_sq, mc.samples))
    }
}

/// Poisson(lambda) probabilities for counts in a window around the mean
/// wide enough that the discarded tail mass is far below every tolerance
/// used with these estimates (~12 standard deviations plus a constant).
/// Returns the first count of the window and the renormalized weights.
fn poisson_window(lambda: f64) -> (u64, Vec<f64>) {
    let sd = lambda.sqrt();
    let lo = (lambda - 12.0 * sd - 40.0).floor().max(0.0) as u64;
    let hi = (lambda + 12.0 * sd + 40.0).ceil() as u64;
    let ln_lambda = lambda.ln();
    // log-weights up to a common constant: n ln(lambda) - ln(n!)
    let mut log_w = Vec::with_capacity((hi - lo + 1) as usize);
    let mut l = lo as f64 * ln_lambda - ln_factorial(lo);
    log_w.push(l);
    for n in lo + 1..=hi {
        l += ln_lambda - (n as f64).ln();
        log_w.push(l);
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = log_w.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    (lo, weights)
}

/// `ln(n!)`: exact accumulation for small `n`, Stirling's series beyond
/// (absolute error under 1e-12 for n >= 64).
fn ln_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n < 64 {
        return (2..=n).map(|k| (k as f64).ln()).sum();
    }
    let x = n as f64;
    (x + 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
}

fn estimate_from_sums(sum: f64, sum_sq: f64, n: u32) -> FeeEstimate {
    let nf = f64::from(n);
    let mean = sum / nf;
    let variance = if n > 1 {
        ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0)
    } else {
        0.0
    };
    FeeEstimate {
        mean,
        std_error: (variance / nf).sqrt(),
        samples: n,
    }
}

/// Sum of the `k` largest values (all of them if `k >= len`). Reorders the
/// buffer.
pub(crate) fn top_k_sum(values: &mut [f64], k: usize) -> f64 {
    if values.len() <= k {
        return values.iter().sum();
    }
    // Partition so the k largest sit in front, then sum just those.
    let (front, nth, _) = values.select_nth_unstable_by(k - 1, |a, b| {
        b.partial_cmp(a).expect("fees are finite")
    });
    front.iter().sum::<f64>() + *nth
}
