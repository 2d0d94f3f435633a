//! Seeded, splittable randomness.
//!
//! Every randomized operation in the crate takes an explicit `u64` seed (or
//! a stream derived from one), so runs are reproducible and independent
//! streams can be drawn in parallel without coordination. Streams are
//! xoshiro256++ generators keyed by `(seed, index)`; entries produced by one
//! stream never depend on how many other streams were opened, which keeps
//! results independent of any parallel work split.
//!
//! The generators are statistically solid but not cryptographically secure;
//! cryptographic-grade sampling is out of scope for this toolkit.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

/// A deterministic random stream.
pub type Stream = Xoshiro256PlusPlus;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Opens stream `index` of the family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut state = seed ^ index.wrapping_mul(GOLDEN) ^ 0x6a09_e667_f3bc_c909;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    Stream::from_seed(key)
}

/// Derives a child seed, for handing an independent seed space to a
/// sub-component (e.g. one seed per simulation step).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut state = seed ^ index.wrapping_mul(GOLDEN);
    splitmix64(&mut state)
}

/// Uniform double in [0, 1) with 53 random bits.
pub fn uniform_f64(rng: &mut impl Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal deviate (Box-Muller, one of the pair).
pub fn standard_normal(rng: &mut impl Rng) -> f64 {
    // u1 in (0, 1] so the log is finite.
    let u1 = 1.0 - uniform_f64(rng);
    let u2 = uniform_f64(rng);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Rounded continuous Gaussian with standard deviation `sigma`.
///
/// `sigma == 0` short-circuits to 0 so deterministic tests consume no
/// randomness for the error term.
pub fn sample_gaussian_rounded(rng: &mut impl Rng, sigma: f64) -> i128 {
    if sigma == 0.0 {
        return 0;
    }
    (standard_normal(rng) * sigma).round() as i128
}
