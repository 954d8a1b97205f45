//! Seed derivation for reproducible, order-independent experiment streams.
//!
//! Every random stream used by the harness is derived from
//! `(replication seed, task index, iteration, stream tag)` through the
//! SplitMix64 finalizer, so no stream depends on how many draws another
//! consumer made or on the order in which runs execute.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG type used throughout the crate.
pub type SeededRng = ChaCha8Rng;

/// Stream tags keep scheduler and benchmark-noise streams disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Scheduler = 0x5343_4845_4455_4c45,
    Noise = 0x4e4f_4953_4520_2020,
    Benchmark = 0x4245_4e43_484d_4b20,
}

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a sequence of words into one 64-bit seed.
pub fn mix(words: &[u64]) -> u64 {
    words
        .iter()
        .fold(0x6a09_e667_f3bc_c908, |acc, &w| splitmix64(acc ^ w))
}

/// Seed for `(seed, task, iteration)` on the given stream.
pub fn derive_seed(seed: u64, task: usize, iteration: usize, stream: Stream) -> u64 {
    mix(&[seed, task as u64, iteration as u64, stream as u64])
}

pub fn derive_rng(seed: u64, task: usize, iteration: usize, stream: Stream) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(seed, task, iteration, stream))
}

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}
