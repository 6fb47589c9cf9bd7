//! Small sample-statistics helpers used by the simulators and the
//! cross-validation layer.

use serde::Serialize;

/// One-sided 99% critical value of the standard normal distribution.
pub const Z_99: f64 = 2.326_347_874_040_841;

/// Mean / spread summary of a batch of replications.
///
/// Always computed in replication-index order so that summaries are
/// bit-identical regardless of the parallel schedule that produced the
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for n < 2).
    pub variance: f64,
    /// Standard error of the mean (0 for n < 2).
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleStats {
    pub fn from_samples(samples: &[f64]) -> SampleStats {
        let n = samples.len();
        if n == 0 {
            return SampleStats {
                n: 0,
                mean: f64::NAN,
                variance: f64::NAN,
                std_error: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let mut ss = 0.0;
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &x in samples {
            let d = x - mean;
            ss += d * d;
            min = min.min(x);
            max = max.max(x);
        }
        let variance = if n > 1 { ss / (n as f64 - 1.0) } else { 0.0 };
        SampleStats {
            n,
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
            min,
            max,
        }
    }
}

/// z statistic for the one-sided hypothesis `mean_a > mean_b` given two
/// independent sample means with their standard errors.
#[must_use]
pub fn one_sided_z(mean_a: f64, se_a: f64, mean_b: f64, se_b: f64) -> f64 {
    (mean_a - mean_b) / (se_a * se_a + se_b * se_b).sqrt()
}
