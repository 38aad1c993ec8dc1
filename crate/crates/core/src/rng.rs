//! Deterministic RNG stream derivation.
//!
//! Every random draw in the crate comes from a `ChaCha8Rng` seeded by a
//! stable hash of (root seed, namespace, indices). Streams for different
//! (prompt, rollout, step, ...) coordinates are therefore independent of
//! iteration order and of any parallel schedule.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Incremental FNV-1a over the labels that identify a stream.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey {
    hash: u64,
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        StreamKey { hash: FNV_OFFSET }.mix_u64(seed)
    }

    pub fn mix_bytes(mut self, bytes: &[u8]) -> Self {
        for &b in bytes {
            self.hash ^= u64::from(b);
            self.hash = self.hash.wrapping_mul(FNV_PRIME);
        }
        // Terminator so ("ab", "c") and ("a", "bc") hash differently.
        self.hash ^= 0xff;
        self.hash = self.hash.wrapping_mul(FNV_PRIME);
        self
    }

    pub fn mix_str(self, s: &str) -> Self {
        self.mix_bytes(s.as_bytes())
    }

    pub fn mix_u64(self, x: u64) -> Self {
        self.mix_bytes(&x.to_le_bytes())
    }

    pub fn value(self) -> u64 {
        self.hash
    }

    /// Finalize into a ChaCha8 stream.
    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.hash)
    }
}

/// Stream for (seed, namespace) with no further coordinates.
pub fn stream(seed: u64, namespace: &str) -> ChaCha8Rng {
    StreamKey::new(seed).mix_str(namespace).rng()
}
