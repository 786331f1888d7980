//! Forward simulation, RNG stream policy and two-sample statistics.

pub mod rng;
pub mod sde;
pub mod stats;

pub use rng::{RngPolicy, StreamRng};
pub use sde::{euler_maruyama, euler_maruyama_path, poisson_flip_path, poisson_flip_simulate};
pub use stats::{
    energy_distance_test, histogram_tv, ks_one_sample, ks_two_sample, mc_mean_with_se, normal_cdf, Method, TestReport,
};
