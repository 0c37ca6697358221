//! Tapering windows for CIR and range-Doppler processing.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft;

/// Sidelobe attenuation of the Chebyshev window used throughout, dB.
pub const CHEBYSHEV_ATTENUATION_DB: f64 = 100.0;

/// Window applied before a delay or Doppler transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WindowKind {
    Rectangular,
    /// Dolph-Chebyshev window with 100 dB sidelobe attenuation.
    #[default]
    Chebyshev100,
}

impl WindowKind {
    /// Window coefficients of length `len`, peak-normalised to 1.
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Chebyshev100 => chebyshev(len, CHEBYSHEV_ATTENUATION_DB),
        }
    }

    /// Half-width of the main lobe (centre to first null) in DFT bins of a
    /// length-`len` transform without zero padding.
    pub fn mainlobe_half_width(self, len: usize) -> f64 {
        match self {
            WindowKind::Rectangular => 1.0,
            WindowKind::Chebyshev100 => chebyshev_first_null(len, CHEBYSHEV_ATTENUATION_DB),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Rectangular => "rectangular",
            WindowKind::Chebyshev100 => "chebyshev-100dB",
        }
    }
}

impl std::str::FromStr for WindowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rect" | "rectangular" | "none" => Ok(WindowKind::Rectangular),
            "chebyshev" | "chebyshev100" | "chebyshev-100db" | "cheb" => Ok(WindowKind::Chebyshev100),
            other => Err(format!("unknown window '{other}'")),
        }
    }
}

/// SNR loss of a window against coherent integration, dB:
/// `10·log10(L·Σw² / (Σw)²)`.
pub fn snr_loss_db(w: &[f64]) -> f64 {
    let sum: f64 = w.iter().sum();
    let sum_sq: f64 = w.iter().map(|v| v * v).sum();
    10.0 * (w.len() as f64 * sum_sq / (sum * sum)).log10()
}

fn chebyshev_beta(len: usize, attenuation_db: f64) -> f64 {
    let order = (len - 1) as f64;
    (10f64.powf(attenuation_db.abs() / 20.0).acosh() / order).cosh()
}

/// Dolph-Chebyshev window of length `len` with the given sidelobe
/// attenuation, built from the Chebyshev polynomial samples by a DFT.
pub fn chebyshev(len: usize, attenuation_db: f64) -> Vec<f64> {
    if len <= 1 {
        return vec![1.0; len];
    }
    let order = (len - 1) as f64;
    let beta = chebyshev_beta(len, attenuation_db);
    let odd = len % 2 == 1;
    let mut p: Vec<Complex64> = (0..len)
        .map(|k| {
            let x = beta * (PI * k as f64 / len as f64).cos();
            let t = if x > 1.0 {
                (order * x.acosh()).cosh()
            } else if x < -1.0 {
                let sign = if odd { 1.0 } else { -1.0 };
                sign * (order * (-x).acosh()).cosh()
            } else {
                (order * x.acos()).cos()
            };
            if odd {
                Complex64::new(t, 0.0)
            } else {
                Complex64::cis(PI * k as f64 / len as f64) * t
            }
        })
        .collect();
    fft::forward(len).process(&mut p);
    let re: Vec<f64> = p.iter().map(|c| c.re).collect();
    let mut w = Vec::with_capacity(len);
    if odd {
        let n = len.div_ceil(2);
        w.extend(re[1..n].iter().rev());
        w.extend_from_slice(&re[..n]);
    } else {
        let n = len / 2 + 1;
        w.extend(re[1..n].iter().rev());
        w.extend_from_slice(&re[1..n]);
    }
    let max = w.iter().cloned().fold(f64::MIN, f64::max);
    w.iter().map(|v| v / max).collect()
}

/// Distance from the main-lobe peak to the first null, in bins.
pub fn chebyshev_first_null(len: usize, attenuation_db: f64) -> f64 {
    if len <= 1 {
        return 1.0;
    }
    let beta = chebyshev_beta(len, attenuation_db);
    let x0 = (PI / (2.0 * (len - 1) as f64)).cos();
    len as f64 / PI * (x0 / beta).acos()
}
