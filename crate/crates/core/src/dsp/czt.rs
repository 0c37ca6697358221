//! Chirp-z transform on the unit circle (Bluestein's algorithm).
//!
//! Evaluates `out[k] = Σ_q x[q]·e^{jφqk}` for `k < len_out` with an
//! arbitrary real step `φ`. Setting `φ = 2πρ/N` samples a band-limited
//! periodic signal on a grid with spacing `ρ`, which is how the channel
//! renders receiver sample instants that fall between transmit samples.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::Fft;

use super::fft;

/// Precomputed chirp-z plan for fixed input length, output length and step.
#[derive(Clone)]
pub struct ChirpZ {
    len_in: usize,
    len_out: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    filter: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChirpZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChirpZ")
            .field("len_in", &self.len_in)
            .field("len_out", &self.len_out)
            .field("fft_len", &self.filter.len())
            .finish()
    }
}

fn chirp(step: f64, l: usize) -> Complex64 {
    let l = l as f64;
    Complex64::cis((0.5 * step * l * l).rem_euclid(TAU))
}

impl ChirpZ {
    /// Plans `out[k] = Σ_{q<len_in} x[q]·e^{j·step·q·k}` for `k < len_out`.
    pub fn new(len_in: usize, len_out: usize, step: f64) -> Self {
        assert!(len_in > 0 && len_out > 0, "chirp-z lengths must be positive");
        let size = (len_in + len_out - 1).next_power_of_two();
        let pre: Vec<Complex64> = (0..len_in).map(|q| chirp(step, q)).collect();
        let post: Vec<Complex64> = (0..len_out).map(|k| chirp(step, k)).collect();

        let mut filter = vec![Complex64::new(0.0, 0.0); size];
        for (l, slot) in filter.iter_mut().enumerate().take(len_out) {
            *slot = chirp(step, l).conj();
        }
        for l in 1..len_in {
            filter[size - l] = chirp(step, l).conj();
        }
        let fwd = fft::forward(size);
        let inv = fft::inverse(size);
        fwd.process(&mut filter);
        let scale = 1.0 / size as f64;
        for f in &mut filter {
            *f *= scale;
        }
        Self { len_in, len_out, pre, post, filter, fwd, inv }
    }

    pub fn len_in(&self) -> usize {
        self.len_in
    }

    pub fn len_out(&self) -> usize {
        self.len_out
    }

    /// Scratch length required by [`ChirpZ::process`].
    pub fn scratch_len(&self) -> usize {
        self.filter.len()
    }

    /// Transforms `input` (length `len_in`) into the first `out.len()`
    /// outputs (`out.len() ≤ len_out`). `scratch` is resized as needed.
    pub fn process(&self, input: &[Complex64], out: &mut [Complex64], scratch: &mut Vec<Complex64>) {
        assert_eq!(input.len(), self.len_in, "chirp-z input length");
        assert!(out.len() <= self.len_out, "chirp-z output length");
        let size = self.filter.len();
        scratch.clear();
        scratch.resize(size, Complex64::new(0.0, 0.0));
        for ((s, x), c) in scratch.iter_mut().zip(input).zip(&self.pre) {
            *s = x * c;
        }
        self.fwd.process(scratch);
        for (s, f) in scratch.iter_mut().zip(&self.filter) {
            *s *= f;
        }
        self.inv.process(scratch);
        for ((o, s), c) in out.iter_mut().zip(scratch.iter()).zip(&self.post) {
            *o = s * c;
        }
    }

    /// Allocating convenience wrapper around [`ChirpZ::process`].
    pub fn transform(&self, input: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len_out];
        let mut scratch = Vec::new();
        self.process(input, &mut out, &mut scratch);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(x: &[Complex64], len_out: usize, step: f64) -> Vec<Complex64> {
        (0..len_out)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(q, v)| v * Complex64::cis(step * q as f64 * k as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let x: Vec<Complex64> = (0..37)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        for &(len_out, step) in &[(37usize, 0.1f64), (50, -0.77), (5, 2.9)] {
            let got = ChirpZ::new(x.len(), len_out, step).transform(&x);
            let want = direct(&x, len_out, step);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).norm() < 1e-10, "{g} vs {w}");
            }
        }
    }

    #[test]
    fn reduces_to_dft_on_the_fft_grid() {
        let n = 16;
        let x: Vec<Complex64> = (0..n).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let got = ChirpZ::new(n, n, -TAU / n as f64).transform(&x);
        let mut want = x.clone();
        fft::forward(n).process(&mut want);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() < 1e-10);
        }
    }
}
