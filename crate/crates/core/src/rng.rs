//! Counter-addressable Gaussian variates.
//!
//! Each path seed keys a ChaCha8 stream; the variate pair for
//! (frequency, component) lives at a fixed word offset, so sampling order
//! and thread scheduling never change the output.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const WORDS_PER_PAIR: u128 = 4;

/// Seed for replicate `replicate` of an ensemble keyed by `seed`.
pub fn derive_seed(seed: u64, replicate: u64) -> u64 {
    splitmix64(seed ^ splitmix64(replicate.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub struct GaussianStream {
    rng: ChaCha8Rng,
    width: usize,
}

impl GaussianStream {
    /// `width` is the number of components per frequency.
    pub fn new(seed: u64, width: usize) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), width }
    }

    /// Independent standard normal pair addressed by (frequency, component).
    pub fn pair_at(&mut self, frequency: usize, component: usize) -> (f64, f64) {
        let index = (frequency * self.width + component) as u128;
        self.rng.set_word_pos(index * WORDS_PER_PAIR);
        self.next_pair()
    }

    /// Next pair in counter order; equivalent to `pair_at` walked
    /// frequency-major, component-minor from the start of the stream.
    pub fn next_pair(&mut self) -> (f64, f64) {
        // u1 in (0, 1], u2 in [0, 1)
        let u1 = ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
        (r * c, r * s)
    }
}
