//! RNG stream policy: a master seed plus a 64-bit stream index selects an
//! independent ChaCha8 keystream. Streams of one seed never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RngPolicy {
    pub master_seed: u64,
}

impl RngPolicy {
    pub fn new(master_seed: u64) -> Self {
        RngPolicy { master_seed }
    }

    pub fn stream(&self, index: u64) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(index);
        rng
    }

    /// A policy for an independent sub-experiment, keyed by `label`.
    pub fn derive(&self, label: u64) -> RngPolicy {
        RngPolicy { master_seed: splitmix64(self.master_seed ^ splitmix64(label)) }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
