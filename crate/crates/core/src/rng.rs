//! Counter-based random draws.
//!
//! Every draw is a pure function of a key built from `(seed, level, index)`,
//! so the value at a given dyadic point never depends on how many other
//! values were generated before it, or on which thread generated it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of a `(seed, level, index)` triple.
#[inline]
pub fn counter_key(seed: u64, level: u32, index: u64) -> u64 {
    let a = mix64(seed.wrapping_add(GOLDEN));
    let b = mix64(a ^ (u64::from(level).wrapping_add(1)).wrapping_mul(GOLDEN));
    mix64(b ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Standard normal draw addressed by `(seed, level, index)`.
pub fn normal_at(seed: u64, level: u32, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(counter_key(seed, level, index));
    rng.sample(StandardNormal)
}

/// Independent generator for a named stream of a seed (sample sets, centers).
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ GOLDEN));
    rng.set_stream(stream);
    rng
}
