//! Pilot CFR extraction and the zero-padded delay/slow-time profile.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::Fft;

use crate::dsp::{fft, WindowKind};
use crate::error::{Error, Result};
use crate::ofdm::{FrameGrid, OfdmConfig, PilotGrid};

/// Least-squares CFR at the pilot cells, `N_pil × M_pil`:
/// `H[k, j] = Y[row_k, sym_j] / P[k, j]`.
pub fn extract_pilot_cfr(y: &FrameGrid, pilots: &PilotGrid) -> Result<FrameGrid> {
    if y.rows() != pilots.frame_rows || y.cols() != pilots.frame_cols {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{}", pilots.frame_rows, pilots.frame_cols),
            got: format!("{}×{}", y.rows(), y.cols()),
        });
    }
    for j in 0..pilots.n_symbols() {
        for k in 0..pilots.n_subcarriers() {
            if pilots.value(k, j).norm_sqr() == 0.0 {
                return Err(Error::ZeroReference { row: pilots.subcarrier_rows[k], col: pilots.symbol_indices[j] });
            }
        }
    }
    Ok(FrameGrid::from_fn(pilots.n_subcarriers(), pilots.n_symbols(), |k, j| {
        y.get(pilots.subcarrier_rows[k], pilots.symbol_indices[j]) / pilots.value(k, j)
    }))
}

/// Axis description of a delay profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileGeometry {
    /// η·N_pil delay bins per column.
    pub len: usize,
    /// N_pil
    pub n_pilots: usize,
    /// η
    pub zp_factor: usize,
    /// 1/(η·N_pil·Δf·ΔN_pil), seconds.
    pub bin_resolution: f64,
    /// Time between pilot symbols, seconds.
    pub pilot_symbol_period: f64,
    pub window: WindowKind,
}

impl ProfileGeometry {
    pub fn new(n_pilots: usize, eta: usize, window: WindowKind, cfg: &OfdmConfig) -> Result<Self> {
        if eta == 0 {
            return Err(Error::InvalidArgument("zero-padding factor must be at least 1".into()));
        }
        if n_pilots == 0 {
            return Err(Error::Empty("pilot CFR"));
        }
        let len = eta * n_pilots;
        Ok(Self {
            len,
            n_pilots,
            zp_factor: eta,
            bin_resolution: 1.0 / (len as f64 * cfg.subcarrier_spacing() * cfg.pilot_subc_spacing as f64),
            pilot_symbol_period: cfg.pilot_symbol_period(),
            window,
        })
    }

    /// Main-lobe half-width in profile bins (centre to first null).
    pub fn mainlobe_half_width(&self) -> f64 {
        self.window.mainlobe_half_width(self.n_pilots) * self.zp_factor as f64
    }

    /// Delay of bin `k`, seconds.
    pub fn delay_of_bin(&self, k: f64) -> f64 {
        k * self.bin_resolution
    }
}

/// Computes profile columns from CFR columns.
#[derive(Clone)]
pub struct ProfileBuilder {
    geometry: ProfileGeometry,
    weights: Vec<f64>,
    ifft: Arc<dyn Fft<f64>>,
}

impl ProfileBuilder {
    pub fn new(geometry: ProfileGeometry) -> Self {
        let mut weights = geometry.window.coefficients(geometry.n_pilots);
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Self { geometry, weights, ifft: fft::inverse(geometry.len) }
    }

    pub fn geometry(&self) -> &ProfileGeometry {
        &self.geometry
    }

    /// Windowed, zero-padded IDFT of one CFR column, normalised so a flat
    /// unit CFR gives a unit peak at bin 0.
    pub fn column(&self, cfr: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(cfr.len(), self.geometry.n_pilots, "CFR column length");
        assert_eq!(out.len(), self.geometry.len, "profile column length");
        out.fill(Complex64::new(0.0, 0.0));
        for ((o, h), w) in out.iter_mut().zip(cfr).zip(&self.weights) {
            *o = h * w;
        }
        self.ifft.process(out);
    }
}

/// Matrix of CIR estimates, one column per pilot symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct DelaySlowTimeProfile {
    /// `(η·N_pil) × M_pil`
    pub columns: FrameGrid,
    pub geometry: ProfileGeometry,
}

impl DelaySlowTimeProfile {
    pub fn bin_resolution(&self) -> f64 {
        self.geometry.bin_resolution
    }

    pub fn zp_factor(&self) -> usize {
        self.geometry.zp_factor
    }

    pub fn n_columns(&self) -> usize {
        self.columns.cols()
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        self.columns.column(j)
    }
}

/// Zero-padded CIR profile of a pilot CFR matrix.
pub fn cir_profile(cfr: &FrameGrid, eta: usize, window: WindowKind, cfg: &OfdmConfig) -> Result<DelaySlowTimeProfile> {
    let geometry = ProfileGeometry::new(cfr.rows(), eta, window, cfg)?;
    let builder = ProfileBuilder::new(geometry);
    let mut columns = FrameGrid::zeros(geometry.len, cfr.cols());
    columns.par_columns_mut().enumerate().for_each(|(j, out)| builder.column(cfr.column(j), out));
    Ok(DelaySlowTimeProfile { columns, geometry })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::build_pilot_grid;
    use std::f64::consts::TAU;

    fn cfg() -> OfdmConfig {
        OfdmConfig { n_subcarriers: 64, n_symbols: 8, cp_len: 16, pilot_subc_spacing: 2, pilot_sym_spacing: 2, ..OfdmConfig::table1() }
    }

    fn linear_phase(cfg: &OfdmConfig, delay: f64) -> FrameGrid {
        let step = cfg.subcarrier_spacing() * cfg.pilot_subc_spacing as f64;
        FrameGrid::from_fn(cfg.n_pilot_subcarriers(), cfg.n_pilot_symbols(), |k, _| {
            Complex64::cis(-TAU * k as f64 * step * delay)
        })
    }

    #[test]
    fn flat_cfr_peaks_at_zero() {
        let c = cfg();
        let p = cir_profile(&linear_phase(&c, 0.0), 4, WindowKind::Rectangular, &c).unwrap();
        let col = p.column(0);
        let peak = (0..col.len()).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap();
        assert_eq!(peak, 0);
        assert!((col[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn on_grid_delay_lands_on_its_bin() {
        let c = cfg();
        for window in [WindowKind::Rectangular, WindowKind::Chebyshev100] {
            let geo = ProfileGeometry::new(c.n_pilot_subcarriers(), 8, window, &c).unwrap();
            let p = cir_profile(&linear_phase(&c, 37.0 * geo.bin_resolution), 8, window, &c).unwrap();
            let col = p.column(3);
            let peak = (0..col.len()).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap();
            assert_eq!(peak, 37);
        }
    }

    #[test]
    fn zero_pilot_is_rejected() {
        let c = cfg();
        let mut pilots = build_pilot_grid(&c, 0).unwrap();
        pilots.values.set(1, 1, Complex64::new(0.0, 0.0));
        let y = FrameGrid::zeros(c.n_subcarriers, c.n_symbols);
        assert!(matches!(extract_pilot_cfr(&y, &pilots), Err(Error::ZeroReference { .. })));
    }
}
