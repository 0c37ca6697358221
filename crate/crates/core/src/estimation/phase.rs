//! Pilot phase-difference SFO estimator (baseline).
//!
//! Between pilot symbols `ΔM_pil` apart the SFO rotates subcarrier `n` by
//! `−2πδ·n·ΔM_pil(N+N_CP)/N`. Per symbol pair the phase differences are
//! unwrapped along the subcarriers, outward from the pilot nearest DC,
//! and fitted with a line through the origin; the per-pair slopes are
//! averaged.

use std::f64::consts::{PI, TAU};

use super::profile::extract_pilot_cfr;
use crate::error::{Error, Result};
use crate::ofdm::{FrameGrid, OfdmConfig, PilotGrid};

fn wrap(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

fn unwrap_from(phases: &mut [f64], anchor: usize) {
    for k in anchor + 1..phases.len() {
        phases[k] = phases[k - 1] + wrap(phases[k] - phases[k - 1]);
    }
    for k in (0..anchor).rev() {
        phases[k] = phases[k + 1] + wrap(phases[k] - phases[k + 1]);
    }
}

/// SFO estimate from a pilot CFR matrix whose rows sit at signed
/// subcarrier indices `subcarriers`.
pub fn phase_sfo_from_cfr(cfr: &FrameGrid, subcarriers: &[i64], cfg: &OfdmConfig) -> Result<f64> {
    if cfr.rows() != subcarriers.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} pilot rows", subcarriers.len()),
            got: format!("{} rows", cfr.rows()),
        });
    }
    if cfr.cols() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: cfr.cols() });
    }
    let anchor = (0..subcarriers.len()).min_by_key(|&k| subcarriers[k].abs()).ok_or(Error::Empty("pilot rows"))?;
    let sum_nn: f64 = subcarriers.iter().map(|&n| (n * n) as f64).sum();
    if sum_nn == 0.0 {
        return Err(Error::InvalidArgument("pilots only on the DC subcarrier".into()));
    }
    let scale = -(cfg.n_subcarriers as f64) / (TAU * (cfg.pilot_sym_spacing * cfg.symbol_len()) as f64);
    let mut phases = vec![0.0; subcarriers.len()];
    let mut total = 0.0;
    for j in 1..cfr.cols() {
        let (a, b) = (cfr.column(j - 1), cfr.column(j));
        for (p, (x, y)) in phases.iter_mut().zip(a.iter().zip(b)) {
            *p = (y * x.conj()).arg();
        }
        unwrap_from(&mut phases, anchor);
        let slope: f64 = phases.iter().zip(subcarriers).map(|(p, &n)| p * n as f64).sum::<f64>() / sum_nn;
        total += slope * scale;
    }
    Ok(total / (cfr.cols() - 1) as f64)
}

/// Phase-difference SFO estimate from a receive grid.
pub fn phase_sfo(y: &FrameGrid, pilots: &PilotGrid, cfg: &OfdmConfig) -> Result<f64> {
    let cfr = extract_pilot_cfr(y, pilots)?;
    let subcarriers: Vec<i64> = pilots.subcarrier_rows.iter().map(|&r| cfg.subcarrier_index(r)).collect();
    phase_sfo_from_cfr(&cfr, &subcarriers, cfg)
}
