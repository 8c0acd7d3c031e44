//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream. A
//! stream is identified by a 64-bit seed plus a 64-bit stream id, so
//! independent consumers (truth tensor, noise, solver restarts) never share
//! draws. Trial seeds are derived from `(master_seed, trial_index)` with a
//! SplitMix64 finalizer, which makes trial `i` reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream ids used inside one trial.
pub mod purpose {
    pub const TRUTH: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SOLVER: u64 = 3;
    pub const AUX: u64 = 4;
}

/// SplitMix64 output function.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    mix64(master ^ mix64(index))
}

/// Stream `stream` of generator `seed`.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on `[0, 1)`.
pub fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    rng.random()
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| gaussian(rng)).collect()
}
