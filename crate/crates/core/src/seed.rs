//! Named random sub-streams derived from a single root seed.
//!
//! Every consumer of randomness asks for a stream by name (and optionally an
//! index such as the epoch). Streams are independent ChaCha8 instances, so
//! changing how much one consumer draws never shifts another consumer's
//! sequence.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DATASET: &str = "dataset";
pub const TESTSET: &str = "testset";
pub const CENTERS: &str = "centers";
pub const NOISE: &str = "noise";
pub const INIT: &str = "init";
pub const BATCH_ORDER: &str = "batch-order";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    root: u64,
}

impl SeedStreams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn rng(&self, name: &str) -> ChaCha8Rng {
        self.rng_indexed(name, 0)
    }

    pub fn rng_indexed(&self, name: &str, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.root ^ splitmix64(index)));
        rng.set_stream(fnv1a(name));
        rng
    }
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
