//! Bridge laws of a transition kernel: densities, marginals, likelihood
//! ratios, path sampling and reversal, and eigenfunction extraction.

pub mod disintegration;
pub mod extract;
pub mod law;
pub mod path;
pub mod sampler;

pub use disintegration::{disintegration_residual, DisintegrationReport};
pub use extract::{extract_eigen_ratio, extract_lambda, extract_psi, s_independence_spread};
pub use law::{
    bridge_likelihood_ratio, bridge_marginal_density, bridge_transition_density, multiplicative_functional, BridgeSpec,
};
pub use path::{reverse, PathPool, PathSample, TimeGrid};
pub use sampler::{
    sample_bridge, sample_bridge_with, sample_bridges, sample_forward, sample_forward_pool, Route, REJECTION_BUDGET,
};
