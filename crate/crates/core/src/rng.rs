//! Random streams for simulation.
//!
//! Every stream is a ChaCha8 block generator (`rand_chacha::ChaCha8Rng`, a
//! counter-based construction) keyed by a single 64-bit seed: the seed is
//! written little-endian into the first 8 bytes of the 32-byte key, the
//! remaining key bytes are zero and the stream id is 0. Uniform doubles are
//! `(next_u64 >> 11) * 2^-53`; Gaussian draws use the `rand_distr`
//! ziggurat sampler.
//!
//! Replicate `r` of an experiment with base seed `b` runs on the stream keyed
//! by `b ^ (r * 0x9E3779B97F4A7C15)` (wrapping multiply).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Name recorded in run manifests.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha 0.9; key = seed LE || 0^24, stream 0)";

/// Golden-ratio increment used for replicate seed splitting.
pub const SEED_SPLIT: u64 = 0x9E37_79B9_7F4A_7C15;

pub type Stream = ChaCha8Rng;

/// Opens the stream keyed by `seed`.
pub fn stream(seed: u64) -> Stream {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Seed of replicate `replicate` under `base_seed`.
pub fn replicate_seed(base_seed: u64, replicate: u64) -> u64 {
    base_seed ^ replicate.wrapping_mul(SEED_SPLIT)
}
