//! Seeded random streams.
//!
//! Every stochastic step draws from ChaCha8 keyed by a 64-bit seed with an
//! explicit stream id, so a value depends only on `(seed, stream, position)`
//! and never on thread scheduling or the order work is handed out.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub fn stream(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream id for a (trial, channel, purpose) triple.
pub fn trial_stream(trial: usize, channel: usize, purpose: u8) -> u64 {
    ((trial as u64) << 24) | ((channel as u64 & 0xFFFF) << 8) | purpose as u64
}

/// Derive a child seed from a master seed and a string key.
pub fn derive_seed(master: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}
