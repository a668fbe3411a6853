//! Deterministic stream derivation.
//!
//! Every random draw in the workspace comes from a ChaCha8 stream keyed by
//! `(seed, domain, a, b)`. Distinct coordinates give independent streams, so
//! concurrent consumers never share generator state and replays are exact.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Keeping these distinct is what guarantees e.g. rollout
/// sampling never reuses the stream that drew the batch's task instances.
pub mod domain {
    pub const INIT: u64 = 1;
    pub const ROLLOUT: u64 = 2;
    pub const BATCH: u64 = 3;
    pub const HELD_OUT: u64 = 4;
    pub const VALIDATION: u64 = 5;
    pub const EVAL: u64 = 6;
    pub const TASK_GEN: u64 = 7;
}

/// Derive an independent ChaCha8 stream from a seed and three coordinates.
pub fn derive_rng(seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&a.to_le_bytes());
    key[24..32].copy_from_slice(&b.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Pack a (prompt index, sample index) pair into one coordinate.
pub fn pack(hi: u64, lo: u64) -> u64 {
    (hi << 32) | (lo & 0xffff_ffff)
}
