//! Sampling frequency offset (SFO) estimation and correction for bistatic
//! OFDM sensing.
//!
//! The crate is organised along the signal chain:
//!
//! * [`ofdm`] builds pilot-bearing frames and moves between the
//!   frequency-domain grid and the time-domain sample stream.
//! * [`channel`] renders the multipath channel, the receiver time base
//!   `t = s·T(1−δ)` and AWGN, plus an analytic per-subcarrier model.
//! * [`analysis`] holds closed-form SFO effects, admissibility limits and
//!   accuracy bounds.
//! * [`estimation`] turns pilot CFRs into a delay/slow-time profile, tracks
//!   the reference path and fits the SFO (TITO, full-delay, phase baseline).
//! * [`correction`] removes the estimate by Farrow resampling or ZF phase
//!   equalisation.
//! * [`radar`] forms range-Doppler images and peak/EVM metrics.

pub mod analysis;
pub mod channel;
pub mod correction;
pub mod dsp;
pub mod error;
pub mod estimation;
pub mod ofdm;
pub mod radar;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Converts a power ratio to decibels.
pub fn db(power_ratio: f64) -> f64 {
    10.0 * power_ratio.log10()
}

/// Converts decibels to a linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
