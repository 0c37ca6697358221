//! SFO removal: Farrow resampling of the stream or ZF phase equalisation
//! of the grid.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::phase_rotation;
use crate::error::{Error, Result};
use crate::ofdm::{FrameGrid, OfdmConfig, SampleStream};

/// Polynomial structure of the fractional-delay filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FarrowStructure {
    /// 4-tap cubic Lagrange.
    #[default]
    Cubic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResamplerConfig {
    pub structure: FarrowStructure,
    /// Output samples per parallel block.
    pub block_len: usize,
}

impl Default for ResamplerConfig {
    fn default() -> Self {
        Self { structure: FarrowStructure::Cubic, block_len: 8192 }
    }
}

/// Cubic Lagrange interpolation of `x` at fractional index `u`; samples
/// outside `x` read as zero.
pub fn farrow_cubic(x: &[Complex64], u: f64) -> Complex64 {
    let i = u.floor() as i64;
    let mu = u - i as f64;
    let at = |k: i64| {
        if k >= 0 && (k as usize) < x.len() {
            x[k as usize]
        } else {
            Complex64::new(0.0, 0.0)
        }
    };
    let (xm1, x0, x1, x2) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    let c0 = x0;
    let c1 = -xm1 / 3.0 - x0 / 2.0 + x1 - x2 / 6.0;
    let c2 = (xm1 + x1) / 2.0 - x0;
    let c3 = (x2 - xm1) / 6.0 + (x0 - x1) / 2.0;
    ((c3 * mu + c2) * mu + c1) * mu + c0
}

/// Resamples the receive stream back onto the transmit time base:
/// output sample `s` is the input evaluated at index `s/(1−δ̂)`.
pub fn farrow_resample(rx: &SampleStream, delta_hat: f64, cfg: &OfdmConfig) -> Result<SampleStream> {
    farrow_resample_with(rx, delta_hat, cfg, &ResamplerConfig::default())
}

pub fn farrow_resample_with(
    rx: &SampleStream,
    delta_hat: f64,
    cfg: &OfdmConfig,
    config: &ResamplerConfig,
) -> Result<SampleStream> {
    if !(delta_hat.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("|delta_hat| must be below 1, got {delta_hat}")));
    }
    if config.block_len < 4 {
        return Err(Error::InvalidArgument(format!("block length must be at least 4, got {}", config.block_len)));
    }
    let len = cfg.frame_len();
    let scale = 1.0 / (1.0 - delta_hat);
    let input = &rx.samples;
    let mut samples = vec![Complex64::new(0.0, 0.0); len];
    samples.par_chunks_mut(config.block_len).enumerate().for_each(|(b, out)| {
        let start = b * config.block_len;
        for (i, o) in out.iter_mut().enumerate() {
            let u = (start + i) as f64 * scale;
            if u < input.len() as f64 {
                *o = match config.structure {
                    FarrowStructure::Cubic => farrow_cubic(input, u),
                };
            }
        }
    });
    Ok(SampleStream { samples, sample_rate: rx.sample_rate })
}

/// ZF equalisation of the SFO phase term: `Ŷ = Y·e^{−jψ(δ̂)}`, with the
/// amplitude term taken as 1.
pub fn zf_phase_correct(y: &FrameGrid, delta_hat: f64, cfg: &OfdmConfig) -> Result<FrameGrid> {
    y.check_frame(cfg)?;
    let mut out = y.clone();
    out.par_columns_mut().enumerate().for_each(|(m, col)| {
        for (r, v) in col.iter_mut().enumerate() {
            *v *= Complex64::cis(-phase_rotation(cfg.subcarrier_index(r), m, delta_hat, cfg));
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn cfg() -> OfdmConfig {
        OfdmConfig { n_subcarriers: 64, n_symbols: 8, cp_len: 16, ..OfdmConfig::table1() }
    }

    #[test]
    fn cubic_reproduces_cubics() {
        let x: Vec<Complex64> = (0..10).map(|k| {
            let t = k as f64;
            Complex64::new(t * t * t - 2.0 * t, 0.5 * t * t)
        }).collect();
        for u in [1.0, 2.25, 4.5, 6.99] {
            let want = Complex64::new(u * u * u - 2.0 * u, 0.5 * u * u);
            assert!((farrow_cubic(&x, u) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn zero_offset_is_identity() {
        let c = cfg();
        let s = SampleStream {
            samples: (0..c.frame_len()).map(|k| Complex64::cis(0.37 * k as f64)).collect(),
            sample_rate: c.bandwidth,
        };
        assert_eq!(farrow_resample(&s, 0.0, &c).unwrap(), s);
        let y = FrameGrid::from_fn(64, 8, |r, m| Complex64::new(r as f64, m as f64));
        assert_eq!(zf_phase_correct(&y, 0.0, &c).unwrap(), y);
    }

    #[test]
    fn tone_frequency_scales() {
        let c = cfg();
        let f = 0.05;
        let delta = 2e-3;
        let s = SampleStream {
            samples: (0..c.frame_len()).map(|k| Complex64::cis(TAU * f * k as f64)).collect(),
            sample_rate: c.bandwidth,
        };
        let out = farrow_resample(&s, delta, &c).unwrap();
        let w = TAU * f / (1.0 - delta);
        for k in 10..c.frame_len() - 10 {
            assert!((out.samples[k] - Complex64::cis(w * k as f64)).norm() < 1e-3);
        }
        let tail = c.frame_len() - 1;
        assert_eq!(out.samples[tail], Complex64::new(0.0, 0.0));
    }
}
