//! Two-sample tests and summary statistics for Monte Carlo comparisons.

mod energy;
mod histogram;
mod ks;

use serde::Serialize;

use crate::error::{Error, Result};

pub use energy::energy_distance_test;
pub use histogram::histogram_tv;
pub use ks::{kolmogorov_survival, ks_critical_value, ks_one_sample, ks_statistic, ks_two_sample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ks,
    Energy,
}

/// Outcome of a two-sample comparison. `seed` is the RNG seed that produced
/// the statistic (permutation tests) or the samples, when known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub method: Method,
    pub statistic: f64,
    pub p_value: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub seed: Option<u64>,
}

impl TestReport {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Sample mean and standard error `sqrt(var / n)`.
pub fn mc_mean_with_se(samples: &[f64]) -> Result<(f64, f64)> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::DegenerateSample(n));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok((mean, (var / nf).sqrt()))
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)
}
