//! Pilot-based SFO estimation.
//!
//! Delay-based pipeline: pilot CFR → zero-padded CIR per pilot symbol →
//! reference-path tracking → LS slope of the delay migration. TITO fits
//! only the leading pilot symbols whose migration steps stay physically
//! plausible; the full-delay method always fits all of them. The phase
//! method is the pilot phase-difference baseline.

pub mod fit;
pub mod phase;
pub mod profile;
pub mod tracking;

use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;

pub use fit::{ls_sfo, ls_slope, tito_select};
pub use phase::{phase_sfo, phase_sfo_from_cfr};
pub use profile::{cir_profile, extract_pilot_cfr, DelaySlowTimeProfile, ProfileBuilder, ProfileGeometry};
pub use tracking::{
    track_reference_delay, track_reference_delay_with, DelayTrack, DelayTracker, PeakInterpolation, SearchWindow,
    TrackerConfig,
};

use crate::dsp::{ChirpZ, WindowKind};
use crate::error::Result;
use crate::ofdm::{FrameGrid, OfdmConfig, PilotGrid};
use crate::radar::peak_sinr_db;

/// SFO estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Truncated LS over the plausible leading part of the delay track.
    Tito,
    /// LS over the whole delay track.
    FullDelay,
    /// Pilot phase-difference baseline.
    Phase,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Tito => "tito",
            Method::FullDelay => "full",
            Method::Phase => "phase",
        }
    }

    pub const ALL: [Method; 3] = [Method::Tito, Method::FullDelay, Method::Phase];
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tito" => Ok(Method::Tito),
            "full" | "full_delay" | "full-delay" => Ok(Method::FullDelay),
            "phase" => Ok(Method::Phase),
            other => Err(format!("unknown method '{other}' (expected tito, full or phase)")),
        }
    }
}

/// How CIR columns are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProfileEngine {
    /// η·N_pil-point zero-padded IDFT per column.
    #[default]
    ZeroPadded,
    /// N_pil-point IDFT, then a chirp-z zoom of ±1 coarse bin at the
    /// fine resolution around the coarse peak.
    CztZoom,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorParams {
    /// Zero-padding factor η.
    pub eta: usize,
    /// δ_max used by TITO.
    pub delta_max: f64,
    /// ε used by TITO.
    pub epsilon: f64,
    pub window: WindowKind,
    pub tracker: TrackerConfig,
    pub engine: ProfileEngine,
}

impl Default for EstimatorParams {
    fn default() -> Self {
        Self {
            eta: 20,
            delta_max: 1000e-6,
            epsilon: 0.1,
            window: WindowKind::Chebyshev100,
            tracker: TrackerConfig::default(),
            engine: ProfileEngine::ZeroPadded,
        }
    }
}

/// Result of one estimator run.
#[derive(Debug, Clone, PartialEq)]
pub struct SfoEstimate {
    pub delta_hat: f64,
    pub method: Method,
    /// Pilot symbols entering the fit.
    pub m_pil_used: usize,
    /// Delay track (delay-based methods only).
    pub track: Option<DelayTrack>,
}

impl SfoEstimate {
    /// Applies a delay-based method to an existing track.
    pub fn from_track(track: DelayTrack, method: Method, params: &EstimatorParams, cfg: &OfdmConfig) -> Result<Self> {
        let m_pil_used = match method {
            Method::Tito => tito_select(&track, params.delta_max, params.epsilon, cfg)?,
            Method::FullDelay | Method::Phase => track.len(),
        };
        let delta_hat = ls_sfo(&track, m_pil_used, cfg)?;
        Ok(Self { delta_hat, method, m_pil_used, track: Some(track) })
    }
}

const BATCH: usize = 32;

/// Reference-path delay track of a receive grid. Profile columns are
/// computed in parallel batches and discarded after tracking.
pub fn estimate_track(y: &FrameGrid, pilots: &PilotGrid, cfg: &OfdmConfig, params: &EstimatorParams) -> Result<DelayTrack> {
    let cfr = extract_pilot_cfr(y, pilots)?;
    track_from_cfr(&cfr, cfg, params)
}

pub fn track_from_cfr(cfr: &FrameGrid, cfg: &OfdmConfig, params: &EstimatorParams) -> Result<DelayTrack> {
    if cfr.cols() == 0 {
        return Err(crate::Error::Empty("pilot CFR"));
    }
    match params.engine {
        ProfileEngine::ZeroPadded => track_zero_padded(cfr, cfg, params),
        ProfileEngine::CztZoom => track_czt(cfr, cfg, params),
    }
}

fn track_zero_padded(cfr: &FrameGrid, cfg: &OfdmConfig, params: &EstimatorParams) -> Result<DelayTrack> {
    let geometry = ProfileGeometry::new(cfr.rows(), params.eta, params.window, cfg)?;
    let builder = ProfileBuilder::new(geometry);
    let mut tracker = DelayTracker::new(geometry, params.tracker);
    let mut batch = FrameGrid::zeros(geometry.len, BATCH);
    for start in (0..cfr.cols()).step_by(BATCH) {
        let count = BATCH.min(cfr.cols() - start);
        batch
            .par_columns_mut()
            .take(count)
            .enumerate()
            .for_each(|(i, out)| builder.column(cfr.column(start + i), out));
        for i in 0..count {
            tracker.push(batch.column(i));
        }
    }
    Ok(tracker.finish())
}

fn track_czt(cfr: &FrameGrid, cfg: &OfdmConfig, params: &EstimatorParams) -> Result<DelayTrack> {
    let fine = ProfileGeometry::new(cfr.rows(), params.eta, params.window, cfg)?;
    let coarse = ProfileGeometry::new(cfr.rows(), 1, params.window, cfg)?;
    let builder = ProfileBuilder::new(coarse);
    let np = cfr.rows();
    let eta = params.eta;
    let zoom = ChirpZ::new(np, 2 * eta + 1, TAU / (eta * np) as f64);
    let lobe = coarse.mainlobe_half_width().ceil() as usize;
    let weights: Vec<f64> = {
        let w = params.window.coefficients(np);
        let s: f64 = w.iter().sum();
        w.iter().map(|v| v / s).collect()
    };
    let mut tracker = DelayTracker::new(fine, params.tracker);
    let peaks: Vec<(f64, f64)> = (0..cfr.cols())
        .into_par_iter()
        .map(|j| {
            let mut col = vec![Complex64::new(0.0, 0.0); np];
            builder.column(cfr.column(j), &mut col);
            let power: Vec<f64> = col.iter().map(|c| c.norm_sqr()).collect();
            let p = (0..np).max_by(|&a, &b| power[a].total_cmp(&power[b]).then(b.cmp(&a))).unwrap_or(0);
            let start = p as f64 - 1.0;
            let input: Vec<Complex64> = cfr
                .column(j)
                .iter()
                .zip(&weights)
                .enumerate()
                .map(|(k, (h, w))| h * w * Complex64::cis(TAU * k as f64 * start / np as f64))
                .collect();
            let z = zoom.transform(&input);
            let best = (0..z.len()).max_by(|&a, &b| z[a].norm_sqr().total_cmp(&z[b].norm_sqr())).unwrap_or(eta);
            let pos = (start * eta as f64 + best as f64).rem_euclid((eta * np) as f64);
            let sinr = peak_sinr_db(&power, p, lobe).unwrap_or(f64::INFINITY);
            (pos, sinr)
        })
        .collect();
    for (pos, sinr) in peaks {
        tracker.push_peak(pos, sinr);
    }
    Ok(tracker.finish())
}

/// Full estimator pipeline on a receive grid.
pub fn estimate_sfo(
    y: &FrameGrid,
    pilots: &PilotGrid,
    cfg: &OfdmConfig,
    method: Method,
    params: &EstimatorParams,
) -> Result<SfoEstimate> {
    match method {
        Method::Phase => Ok(SfoEstimate {
            delta_hat: phase_sfo(y, pilots, cfg)?,
            method,
            m_pil_used: pilots.n_symbols(),
            track: None,
        }),
        _ => {
            let track = estimate_track(y, pilots, cfg, params)?;
            SfoEstimate::from_track(track, method, params, cfg)
        }
    }
}
