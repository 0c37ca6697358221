//! Bistatic range-Doppler imaging and peak/EVM metrics.
//!
//! The image is the windowed 2-D transform of the element-wise division
//! `F = Y/X`: an IDFT over subcarriers (range) followed by a DFT over
//! symbols (Doppler), both unnormalised. Range bins are `c_0/(ζB)` apart
//! and Doppler bins `1/(ζ_D·M(N+N_CP)T_s)` apart, with zero Doppler in the
//! middle column.

use num_complex::Complex64;
use rayon::prelude::*;

pub use crate::dsp::WindowKind;
use crate::dsp::fft;
use crate::error::{Error, Result};
use crate::ofdm::{FrameGrid, OfdmConfig};
use crate::SPEED_OF_LIGHT;

/// Floor reported by [`evm_db`] for a perfect match.
pub const EVM_FLOOR_DB: f64 = -200.0;

/// Zero-padding factors ζ (range) and ζ_D (Doppler).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Padding {
    pub range: usize,
    pub doppler: usize,
}

impl Default for Padding {
    fn default() -> Self {
        Self { range: 1, doppler: 1 }
    }
}

/// Magnitude image, range-major: `pixels[r·n_doppler + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarImage {
    pub pixels: Vec<f64>,
    pub n_range: usize,
    pub n_doppler: usize,
    /// Metres, ascending from 0.
    pub range_axis: Vec<f64>,
    /// Hz, ascending with 0 Hz at index `n_doppler/2`.
    pub doppler_axis: Vec<f64>,
    pub window_kind: WindowKind,
    pub padding: Padding,
    /// Main-lobe half-widths in image bins (range, Doppler).
    pub lobe_half_width: (f64, f64),
}

impl RadarImage {
    pub fn get(&self, range_bin: usize, doppler_bin: usize) -> f64 {
        self.pixels[range_bin * self.n_doppler + doppler_bin]
    }

    pub fn range_bin_spacing(&self) -> f64 {
        if self.range_axis.len() > 1 {
            self.range_axis[1] - self.range_axis[0]
        } else {
            0.0
        }
    }

    pub fn doppler_bin_spacing(&self) -> f64 {
        if self.doppler_axis.len() > 1 {
            self.doppler_axis[1] - self.doppler_axis[0]
        } else {
            0.0
        }
    }

    /// Index of the strongest pixel as (range bin, Doppler bin).
    pub fn argmax(&self) -> (usize, usize) {
        let i = (0..self.pixels.len()).max_by(|&a, &b| self.pixels[a].total_cmp(&self.pixels[b])).unwrap_or(0);
        (i / self.n_doppler.max(1), i % self.n_doppler.max(1))
    }

    /// Bin of zero Doppler.
    pub fn zero_doppler_bin(&self) -> usize {
        self.n_doppler / 2
    }

    /// Circular roll by (`dr`, `dd`) bins; axes are kept.
    pub fn rolled(&self, dr: i64, dd: i64) -> RadarImage {
        let (nr, nd) = (self.n_range as i64, self.n_doppler as i64);
        let mut pixels = vec![0.0; self.pixels.len()];
        for r in 0..nr {
            let rr = (r + dr).rem_euclid(nr);
            for d in 0..nd {
                let dd2 = (d + dd).rem_euclid(nd);
                pixels[(rr * nd + dd2) as usize] = self.pixels[(r * nd + d) as usize];
            }
        }
        RadarImage { pixels, ..self.clone() }
    }

    fn in_lobe(&self, r: usize, d: usize, r0: usize, d0: usize, hr: usize, hd: usize) -> bool {
        let dist = |a: usize, b: usize, n: usize| {
            let x = (a + n - b) % n;
            x.min(n - x)
        };
        dist(r, r0, self.n_range) <= hr && dist(d, d0, self.n_doppler) <= hd
    }

    fn lobe_bins(&self) -> (usize, usize) {
        (self.lobe_half_width.0.ceil() as usize, self.lobe_half_width.1.ceil() as usize)
    }
}

/// Location and quality of one image peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakReport {
    pub range_bin: usize,
    pub doppler_bin: usize,
    pub range_m: f64,
    pub doppler_hz: f64,
    /// 20·log10 of the peak magnitude.
    pub magnitude_db: f64,
    /// Peak power over the mean power outside the main lobe, dB.
    pub sinr_db: f64,
}

/// Range-Doppler image from a receive grid and the known transmit grid.
pub fn range_doppler_image(
    y: &FrameGrid,
    x_known: &FrameGrid,
    cfg: &OfdmConfig,
    window: WindowKind,
    padding: Padding,
) -> Result<RadarImage> {
    cfg.validate()?;
    y.check_frame(cfg)?;
    x_known.check_frame(cfg)?;
    if padding.range == 0 || padding.doppler == 0 {
        return Err(Error::InvalidArgument("padding factors must be at least 1".into()));
    }
    for (i, x) in x_known.as_slice().iter().enumerate() {
        if x.norm_sqr() == 0.0 {
            return Err(Error::ZeroReference { row: i % cfg.n_subcarriers, col: i / cfg.n_subcarriers });
        }
    }
    let n = cfg.n_subcarriers;
    let m = cfg.n_symbols;
    let nr = padding.range * n;
    let nd = padding.doppler * m;
    let w_sub = window.coefficients(n);
    let w_sym = window.coefficients(m);

    let mut range = vec![Complex64::new(0.0, 0.0); nr * m];
    let ifft = fft::inverse(nr);
    range.par_chunks_mut(nr).enumerate().for_each(|(j, out)| {
        for (r, o) in out.iter_mut().take(n).enumerate() {
            *o = y.get(r, j) / x_known.get(r, j) * w_sub[r];
        }
        ifft.process(out);
    });

    let mut pixels = vec![0.0; nr * nd];
    let dfft = fft::forward(nd);
    pixels.par_chunks_mut(nd).enumerate().for_each(|(r, row)| {
        let mut buf = vec![Complex64::new(0.0, 0.0); nd];
        for j in 0..m {
            buf[j] = range[j * nr + r] * w_sym[j];
        }
        dfft.process(&mut buf);
        for (d, px) in row.iter_mut().enumerate() {
            *px = buf[(d + nd - nd / 2) % nd].norm();
        }
    });

    let range_step = SPEED_OF_LIGHT / (padding.range as f64 * cfg.bandwidth);
    let doppler_step = 1.0 / (nd as f64 * cfg.symbol_duration());
    Ok(RadarImage {
        pixels,
        n_range: nr,
        n_doppler: nd,
        range_axis: (0..nr).map(|r| r as f64 * range_step).collect(),
        doppler_axis: (0..nd).map(|d| (d as f64 - (nd / 2) as f64) * doppler_step).collect(),
        window_kind: window,
        padding,
        lobe_half_width: (
            window.mainlobe_half_width(n) * padding.range as f64,
            window.mainlobe_half_width(m) * padding.doppler as f64,
        ),
    })
}

/// Rolls the image so its strongest pixel sits at range 0 and zero Doppler.
pub fn recenter_on_reference(img: &RadarImage) -> RadarImage {
    let (r0, d0) = img.argmax();
    img.rolled(-(r0 as i64), img.zero_doppler_bin() as i64 - d0 as i64)
}

/// Peak power over mean power outside `±half_width` bins (circular).
pub fn peak_sinr_db(power: &[f64], peak: usize, half_width: usize) -> Result<f64> {
    if power.is_empty() {
        return Err(Error::Empty("power profile"));
    }
    let len = power.len();
    let mut sum = 0.0;
    let mut count = 0usize;
    for (k, p) in power.iter().enumerate() {
        let d = (k + len - peak) % len;
        if d.min(len - d) > half_width {
            sum += p;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Empty("region outside the main lobe"));
    }
    Ok(10.0 * (power[peak] / (sum / count as f64)).log10())
}

/// Report for the pixel at (`range_bin`, `doppler_bin`).
pub fn peak_report(img: &RadarImage, range_bin: usize, doppler_bin: usize) -> Result<PeakReport> {
    if range_bin >= img.n_range || doppler_bin >= img.n_doppler {
        return Err(Error::InvalidArgument("peak location outside the image".into()));
    }
    let (hr, hd) = img.lobe_bins();
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 0..img.n_range {
        for d in 0..img.n_doppler {
            if !img.in_lobe(r, d, range_bin, doppler_bin, hr, hd) {
                let v = img.get(r, d);
                sum += v * v;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Empty("region outside the main lobe"));
    }
    let peak = img.get(range_bin, doppler_bin);
    Ok(PeakReport {
        range_bin,
        doppler_bin,
        range_m: img.range_axis[range_bin],
        doppler_hz: img.doppler_axis[doppler_bin],
        magnitude_db: 20.0 * peak.log10(),
        sinr_db: 10.0 * (peak * peak / (sum / count as f64)).log10(),
    })
}

/// The `count` strongest peaks, each outside the main lobes of the
/// stronger ones, strongest first.
pub fn strongest_peaks(img: &RadarImage, count: usize) -> Result<Vec<PeakReport>> {
    let (hr, hd) = img.lobe_bins();
    let mut found: Vec<(usize, usize)> = Vec::new();
    for _ in 0..count {
        let mut best: Option<(usize, usize, f64)> = None;
        for r in 0..img.n_range {
            for d in 0..img.n_doppler {
                if found.iter().any(|&(r0, d0)| img.in_lobe(r, d, r0, d0, hr, hd)) {
                    continue;
                }
                let v = img.get(r, d);
                if best.is_none_or(|b| v > b.2) {
                    best = Some((r, d, v));
                }
            }
        }
        match best {
            Some((r, d, _)) => found.push((r, d)),
            None => break,
        }
    }
    found.into_iter().map(|(r, d)| peak_report(img, r, d)).collect()
}

/// EVM = 10·log10(Σ|rx−ref|² / Σ|ref|²), floored at [`EVM_FLOOR_DB`].
pub fn evm_db(rx: &[Complex64], reference: &[Complex64]) -> Result<f64> {
    if rx.is_empty() || reference.is_empty() {
        return Err(Error::Empty("symbol set"));
    }
    if rx.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} symbols", reference.len()),
            got: format!("{} symbols", rx.len()),
        });
    }
    let err: f64 = rx.iter().zip(reference).map(|(a, b)| (a - b).norm_sqr()).sum();
    let pow: f64 = reference.iter().map(|b| b.norm_sqr()).sum();
    if err == 0.0 {
        return Ok(EVM_FLOOR_DB);
    }
    Ok((10.0 * (err / pow).log10()).max(EVM_FLOOR_DB))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::NoiseSource;
    use std::f64::consts::TAU;

    fn cfg() -> OfdmConfig {
        OfdmConfig { n_subcarriers: 32, n_symbols: 16, cp_len: 8, pilot_subc_spacing: 2, pilot_sym_spacing: 2, ..OfdmConfig::table1() }
    }

    fn known(cfg: &OfdmConfig) -> FrameGrid {
        FrameGrid::from_fn(cfg.n_subcarriers, cfg.n_symbols, |r, m| Complex64::cis(0.9 * (r * 3 + m * 7) as f64))
    }

    #[test]
    fn integer_bin_peak_has_coherent_gain() {
        let c = cfg();
        let x = known(&c);
        let alpha = 0.3;
        let (kr, kd) = (5usize, 3i64);
        let y = FrameGrid::from_fn(c.n_subcarriers, c.n_symbols, |r, m| {
            let ph = -TAU * r as f64 * kr as f64 / c.n_subcarriers as f64 + TAU * m as f64 * kd as f64 / c.n_symbols as f64;
            x.get(r, m) * alpha * Complex64::cis(ph)
        });
        let img = range_doppler_image(&y, &x, &c, WindowKind::Rectangular, Padding::default()).unwrap();
        let (r, d) = img.argmax();
        assert_eq!(r, kr);
        assert_eq!(d as i64 - img.zero_doppler_bin() as i64, kd);
        let expected = (c.n_subcarriers * c.n_symbols) as f64 * alpha;
        assert!((img.get(r, d) - expected).abs() < 1e-9);
        assert!((img.range_bin_spacing() - SPEED_OF_LIGHT / c.bandwidth).abs() < 1e-9);
        assert!((img.doppler_bin_spacing() - 1.0 / (c.n_symbols as f64 * c.symbol_duration())).abs() < 1e-6);
    }

    #[test]
    fn recentering() {
        let c = cfg();
        let x = known(&c);
        let img = range_doppler_image(&x, &x, &c, WindowKind::Chebyshev100, Padding::default()).unwrap();
        let centred = recenter_on_reference(&img);
        assert_eq!(centred, img);
        let shifted = img.rolled(4, -3);
        assert_eq!(shifted.rolled(-4, 3), img);
        assert_eq!(recenter_on_reference(&shifted), img);
    }

    #[test]
    fn two_peaks_centre_on_the_stronger() {
        let c = cfg();
        let mut img = range_doppler_image(&known(&c), &known(&c), &c, WindowKind::Rectangular, Padding::default()).unwrap();
        img.pixels.iter_mut().for_each(|p| *p = 0.01);
        let nd = img.n_doppler;
        img.pixels[3 * nd + 2] = 5.0;
        img.pixels[10 * nd + 9] = 7.0;
        let c2 = recenter_on_reference(&img);
        assert_eq!(c2.argmax(), (0, img.zero_doppler_bin()));
        let peaks = strongest_peaks(&img, 2).unwrap();
        assert_eq!((peaks[0].range_bin, peaks[0].doppler_bin), (10, 9));
        assert_eq!((peaks[1].range_bin, peaks[1].doppler_bin), (3, 2));
    }

    #[test]
    fn evm_floor_and_noise() {
        let a = vec![Complex64::new(1.0, 0.0); 8];
        assert_eq!(evm_db(&a, &a).unwrap(), EVM_FLOOR_DB);
        assert!(evm_db(&[], &[]).is_err());
        let reference: Vec<Complex64> = (0..10_000).map(|i| Complex64::cis(0.5 + (i % 4) as f64 * TAU / 4.0)).collect();
        let mut rx = reference.clone();
        NoiseSource::new(3, 0.01).add_to(0, &mut rx);
        let e = evm_db(&rx, &reference).unwrap();
        assert!((e + 20.0).abs() < 0.3, "{e}");
    }

    #[test]
    fn sinr_of_a_clean_spike() {
        let mut p = vec![1.0; 100];
        p[10] = 1000.0;
        assert!((peak_sinr_db(&p, 10, 2).unwrap() - 30.0).abs() < 1e-12);
        assert!(peak_sinr_db(&[], 0, 1).is_err());
    }
}
