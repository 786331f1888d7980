//! Finite-state continuous-time chains: exact transition matrices, Perron
//! pairs, h-transforms, duals, bridge distributions, and recovery of an
//! h-transform from a single shared bridge.

pub mod bridge;
pub mod expm;
pub mod io;
pub mod model;
pub mod perron;
pub mod recover;

pub use bridge::{bridge_grid, bridges_equal, chain_bridge_distribution, BridgeComparison, BridgePoint};
pub use expm::expm;
pub use io::{chain_from_text, chain_to_text, parse_chain_source};
pub use model::{chain_h_transform, dual_chain, perron_eigen, stationary, transition_matrix, ChainModel, PerronPair};
pub use recover::{recover_from_single_bridge, Recovery};
