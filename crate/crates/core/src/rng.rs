//! Seeding helpers.
//!
//! Every stochastic routine takes an explicit seed. Multi-chain runs derive one
//! stream per chain with [`chain_seed`], so results do not depend on the order
//! in which a thread pool happens to schedule the chains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used by all chains.
pub type ChainRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of chain `index` in a run with global seed `seed`:
/// `mix64(seed ^ mix64(index))`.
pub fn chain_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index))
}

pub fn rng_from_seed(seed: u64) -> ChainRng {
    ChainRng::seed_from_u64(seed)
}

pub fn chain_rng(seed: u64, index: u64) -> ChainRng {
    rng_from_seed(chain_seed(seed, index))
}
