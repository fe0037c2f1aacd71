//! Counter-based random streams.
//!
//! A stream is a `(root seed, stream id)` pair mapped onto a ChaCha8 key and
//! stream number, so every replica owns an independent generator whose output
//! does not depend on scheduling or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Generator type handed out by [`RngStream::generator`].
pub type StreamRng = ChaCha8Rng;

/// Tags that keep the stream families of different procedures apart.
pub mod tags {
    pub const SIMULATION: u64 = 1;
    pub const COUPLING: u64 = 2;
    pub const STATIONARY_PAST: u64 = 3;
    pub const WEAK_L2: u64 = 4;
    pub const TV_DECAY: u64 = 5;
    pub const BETA_MIXING: u64 = 6;
    pub const CORRELATION: u64 = 7;
    pub const SEARCH: u64 = 8;
    pub const PAIR: u64 = 9;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub root_seed: u64,
    pub stream_id: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(root_seed: u64, stream_id: u64) -> Self {
        Self { root_seed, stream_id }
    }

    /// Root stream of an experiment.
    pub fn root(root_seed: u64) -> Self {
        Self::new(root_seed, 0)
    }

    /// Child stream `index` of family `tag`; a pure function of the parent.
    pub fn child(&self, tag: u64, index: u64) -> Self {
        let id = splitmix64(splitmix64(self.stream_id ^ splitmix64(tag)) ^ index);
        Self { root_seed: self.root_seed, stream_id: id }
    }

    pub fn generator(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}
