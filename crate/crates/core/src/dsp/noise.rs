//! Position-addressable complex Gaussian noise and seed derivation.
//!
//! Every sample index owns a fixed slice of a ChaCha keystream, so any
//! subset of the receive stream sees the same noise as the full stream.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORDS_PER_SAMPLE: u128 = 4;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a list of integers into one well-mixed seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(0x5F0_1AB5_EED5_u64, |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// Circular complex Gaussian noise with variance `variance` per sample.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSource {
    seed: u64,
    scale: f64,
}

impl NoiseSource {
    pub fn new(seed: u64, variance: f64) -> Self {
        Self { seed, scale: (variance / 2.0).sqrt() }
    }

    pub fn variance(&self) -> f64 {
        2.0 * self.scale * self.scale
    }

    /// Adds the noise of sample indices `start..start + out.len()` to `out`.
    pub fn add_to(&self, start: u64, out: &mut [Complex64]) {
        if self.scale == 0.0 || out.is_empty() {
            return;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(start as u128 * WORDS_PER_SAMPLE);
        for o in out.iter_mut() {
            let u1 = 1.0 - unit(rng.next_u64());
            let u2 = unit(rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt() * self.scale;
            *o += Complex64::from_polar(r, TAU * u2);
        }
    }

    /// Noise samples for indices `start..start + len`.
    pub fn samples(&self, start: u64, len: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); len];
        self.add_to(start, &mut out);
        out
    }
}

fn unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
