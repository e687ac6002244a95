//! Seed derivation and counter-based random streams.
//!
//! Every random decision in the crate draws from a stream identified by a
//! root seed plus a path of keys (image id, chain index, run index, ...).
//! Streams are ChaCha8 instances: the root seed selects the key and the
//! hashed path selects the 64-bit stream id, so two different paths never
//! share state and the order in which streams are opened cannot change what
//! any of them produce. That is what keeps parallel batch output identical
//! to sequential output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of a string (FNV-1a followed by a SplitMix64 finalizer).
pub fn hash_str(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    mix64(h)
}

/// A position in the tree of random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngKey {
    seed: u64,
    path: u64,
}

impl RngKey {
    pub fn root(seed: u64) -> Self {
        RngKey { seed, path: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives a child key. Children of one parent with distinct keys are distinct.
    pub fn child(self, key: u64) -> Self {
        RngKey {
            seed: self.seed,
            path: mix64(self.path.rotate_left(17) ^ mix64(key)),
        }
    }

    pub fn child_str(self, key: &str) -> Self {
        self.child(hash_str(key))
    }

    pub fn rng(self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path);
        rng
    }
}
