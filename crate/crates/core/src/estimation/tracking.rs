//! Reference-path delay tracking across pilot symbols.

use num_complex::Complex64;

use super::profile::{DelaySlowTimeProfile, ProfileGeometry};
use crate::error::{Error, Result};
use crate::radar::peak_sinr_db;

/// Where the tracker looks for the reference peak in each column.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SearchWindow {
    /// Whole column.
    #[default]
    Global,
    /// ±(1+ε)·|δ_max|·(pilot symbol period) around the previous peak.
    Bounded { delta_max: f64, epsilon: f64 },
}

/// Sub-bin refinement of the located peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PeakInterpolation {
    #[default]
    None,
    /// Three-point parabola on the magnitude.
    Parabolic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrackerConfig {
    pub search: SearchWindow,
    pub interpolation: PeakInterpolation,
}

/// Delay migration of the reference path per pilot symbol.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayTrack {
    /// Δτ̂ per pilot-symbol index, seconds; `migrations[0] = 0`.
    pub migrations: Vec<f64>,
    /// Peak SINR per pilot-symbol index, dB.
    pub peak_sinr_db: Vec<f64>,
    /// Located peak position per column, in profile bins.
    pub peak_bins: Vec<f64>,
}

impl DelayTrack {
    pub fn len(&self) -> usize {
        self.migrations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.migrations.is_empty()
    }

    /// Track built from migrations alone.
    pub fn from_migrations(migrations: Vec<f64>) -> Self {
        let n = migrations.len();
        Self { migrations, peak_sinr_db: vec![f64::NAN; n], peak_bins: vec![f64::NAN; n] }
    }
}

fn circular_distance(a: f64, b: f64, len: f64) -> f64 {
    let d = (a - b).rem_euclid(len);
    d.min(len - d)
}

fn wrap_half(d: f64, len: f64) -> f64 {
    let w = d.rem_euclid(len);
    if w >= len / 2.0 {
        w - len
    } else {
        w
    }
}

/// Incremental tracker fed one profile column at a time.
#[derive(Debug, Clone)]
pub struct DelayTracker {
    geometry: ProfileGeometry,
    config: TrackerConfig,
    lobe: usize,
    half_window: Option<usize>,
    prev: Option<f64>,
    unwrapped: f64,
    power: Vec<f64>,
    track: DelayTrack,
}

impl DelayTracker {
    pub fn new(geometry: ProfileGeometry, config: TrackerConfig) -> Self {
        let half_window = match config.search {
            SearchWindow::Global => None,
            SearchWindow::Bounded { delta_max, epsilon } => {
                let bins = (1.0 + epsilon) * delta_max.abs() * geometry.pilot_symbol_period / geometry.bin_resolution;
                if bins.is_finite() && bins < (geometry.len / 2) as f64 {
                    Some(bins.ceil() as usize)
                } else {
                    None
                }
            }
        };
        Self {
            geometry,
            config,
            lobe: geometry.mainlobe_half_width().ceil() as usize,
            half_window,
            prev: None,
            unwrapped: 0.0,
            power: Vec::with_capacity(geometry.len),
            track: DelayTrack::default(),
        }
    }

    fn candidates(&self) -> Vec<usize> {
        let len = self.geometry.len;
        match (self.half_window, self.prev) {
            (Some(h), Some(p)) => {
                let centre = p.round() as i64;
                (-(h as i64)..=h as i64).map(|o| (centre + o).rem_euclid(len as i64) as usize).collect()
            }
            _ => (0..len).collect(),
        }
    }

    /// Locates the peak of one column and appends it to the track.
    pub fn push(&mut self, column: &[Complex64]) {
        let len = self.geometry.len;
        assert_eq!(column.len(), len, "profile column length");
        self.power.clear();
        self.power.extend(column.iter().map(|c| c.norm_sqr()));
        let reference = self.prev.unwrap_or(0.0);
        let lenf = len as f64;
        let mut best = usize::MAX;
        let mut best_pow = f64::NEG_INFINITY;
        for k in self.candidates() {
            let p = self.power[k];
            if p > best_pow {
                best = k;
                best_pow = p;
            } else if p == best_pow
                && circular_distance(k as f64, reference, lenf) < circular_distance(best as f64, reference, lenf)
            {
                best = k;
            }
        }
        let mut pos = best as f64;
        if self.config.interpolation == PeakInterpolation::Parabolic && len >= 3 {
            let a = self.power[(best + len - 1) % len].sqrt();
            let b = self.power[best].sqrt();
            let c = self.power[(best + 1) % len].sqrt();
            let den = a - 2.0 * b + c;
            if den < 0.0 {
                pos += (0.5 * (a - c) / den).clamp(-0.5, 0.5);
            }
        }
        let sinr = peak_sinr_db(&self.power, best, self.lobe).unwrap_or(f64::INFINITY);
        self.push_peak(pos, sinr);
    }

    /// Appends an externally located peak (position in profile bins).
    pub fn push_peak(&mut self, pos: f64, sinr_db: f64) {
        let lenf = self.geometry.len as f64;
        match self.prev {
            None => self.unwrapped = 0.0,
            Some(prev) => self.unwrapped += wrap_half(pos - prev, lenf),
        }
        self.prev = Some(pos);
        self.track.migrations.push(self.unwrapped * self.geometry.bin_resolution);
        self.track.peak_sinr_db.push(sinr_db);
        self.track.peak_bins.push(pos);
    }

    pub fn finish(self) -> DelayTrack {
        self.track
    }
}

/// Tracks the reference path with the default configuration (global
/// argmax, no interpolation).
pub fn track_reference_delay(d: &DelaySlowTimeProfile) -> Result<DelayTrack> {
    track_reference_delay_with(d, &TrackerConfig::default())
}

pub fn track_reference_delay_with(d: &DelaySlowTimeProfile, config: &TrackerConfig) -> Result<DelayTrack> {
    if d.n_columns() == 0 || d.geometry.len == 0 {
        return Err(Error::Empty("delay profile"));
    }
    let mut tracker = DelayTracker::new(d.geometry, *config);
    for j in 0..d.n_columns() {
        tracker.push(d.column(j));
    }
    Ok(tracker.finish())
}
