//! Closed-form SFO effects, admissibility limits and accuracy bounds.
//!
//! `delta` is the normalised SFO δ throughout (1 ppm = 1e-6). Symbol `m`
//! starts its useful part at sample `s_m = m(N+N_CP)+N_CP`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::ofdm::OfdmConfig;
use crate::{BOLTZMANN, SPEED_OF_LIGHT};

/// Largest |δ| before ICI or ISI becomes significant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SfoLimits {
    /// 1/(5N)
    pub ici_limit: f64,
    /// Positive δ that consumes the whole CP by the last symbol.
    pub isi_limit: f64,
}

/// Delay and SFO accuracy bounds for one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub sigma_tau_crlb: f64,
    pub sigma_tau_mle: f64,
    pub sigma_delta_crlb: f64,
    pub sigma_delta_mle: f64,
}

/// τ^SFO_m = δ·[m(N+N_CP)+N_CP]·T_s
pub fn sfo_delay(m: usize, delta: f64, cfg: &OfdmConfig) -> f64 {
    delta * cfg.useful_start(m) as f64 * cfg.sample_period()
}

/// Δτ^SFO_m = δ·m(N+N_CP)·T_s
pub fn delay_migration(m: usize, delta: f64, cfg: &OfdmConfig) -> f64 {
    delta * (m * cfg.symbol_len()) as f64 * cfg.sample_period()
}

/// Range migration over the whole frame, c_0·δ·M(N+N_CP)·T_s, metres.
pub fn frame_range_migration(delta: f64, cfg: &OfdmConfig) -> f64 {
    SPEED_OF_LIGHT * delay_migration(cfg.n_symbols, delta, cfg)
}

/// f^SFO_n = δ·n·Δf
pub fn subcarrier_freq_shift(n: i64, delta: f64, cfg: &OfdmConfig) -> f64 {
    delta * n as f64 * cfg.subcarrier_spacing()
}

/// f^SFO_{N/2−1} − f^SFO_{−N/2}
pub fn freq_shift_migration(delta: f64, cfg: &OfdmConfig) -> f64 {
    let half = (cfg.n_subcarriers / 2) as i64;
    let last = cfg.n_subcarriers as i64 - half - 1;
    subcarrier_freq_shift(last, delta, cfg) - subcarrier_freq_shift(-half, delta, cfg)
}

/// α^SFO_n = sin(πδn)/(N·sin(πδn/N)), equal to 1 at δn = 0.
pub fn amplitude_modulation(n: i64, delta: f64, cfg: &OfdmConfig) -> f64 {
    let nn = cfg.n_subcarriers as f64;
    let a = PI * delta * n as f64;
    if a.abs() < 1e-300 {
        return 1.0;
    }
    a.sin() / (nn * (a / nn).sin())
}

/// ψ^SFO_{n,m} = −2πδn·s_m/N − πδn(N−1)/N
pub fn phase_rotation(n: i64, m: usize, delta: f64, cfg: &OfdmConfig) -> f64 {
    let nn = cfg.n_subcarriers as f64;
    let dn = delta * n as f64;
    -2.0 * PI * dn * cfg.useful_start(m) as f64 / nn - PI * dn * (nn - 1.0) / nn
}

pub fn sfo_limits(cfg: &OfdmConfig) -> SfoLimits {
    let n = cfg.n_subcarriers as f64;
    let m = cfg.n_symbols as f64;
    let span = ((m - 1.0) * cfg.symbol_len() as f64 + cfg.cp_len as f64) * cfg.sample_period();
    SfoLimits {
        ici_limit: 1.0 / (5.0 * n),
        isi_limit: cfg.cp_len as f64 / (cfg.bandwidth * span),
    }
}

/// Delay CRLB and quantised-MLE bound, seconds:
/// `σ_CRLB = sqrt(6/(SNR(N_pil²−1)N_pil))/(2πΔfΔN_pil)` and
/// `σ_MLE = √3/(6ηN_pilΔfΔN_pil)`.
pub fn delay_bounds(snr_linear: f64, eta: usize, cfg: &OfdmConfig) -> Result<(f64, f64)> {
    if !(snr_linear > 0.0) {
        return Err(Error::InvalidArgument(format!("SNR must be positive, got {snr_linear}")));
    }
    if eta == 0 {
        return Err(Error::InvalidArgument("zero-padding factor must be at least 1".into()));
    }
    let np = cfg.n_pilot_subcarriers() as f64;
    let step = cfg.subcarrier_spacing() * cfg.pilot_subc_spacing as f64;
    let crlb = (6.0 / (snr_linear * (np * np - 1.0) * np)).sqrt() / (2.0 * PI * step);
    let mle = 3f64.sqrt() / (6.0 * eta as f64 * np * step);
    Ok((crlb, mle))
}

/// Regressor of the LS fit: x_k = k·ΔM_pil(N+N_CP)T_s.
pub fn pilot_regressor(k: usize, cfg: &OfdmConfig) -> f64 {
    k as f64 * cfg.pilot_symbol_period()
}

/// Standard deviation of the LS slope for i.i.d. delay errors `sigma_tau`
/// over the first `m_pil_used` pilot symbols:
/// `σ_τ·√M / sqrt(M·Σx² − (Σx)²)`.
pub fn sfo_std_bounds(sigma_tau: f64, m_pil_used: usize, cfg: &OfdmConfig) -> Result<f64> {
    if m_pil_used < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: m_pil_used });
    }
    let (sx, sxx) = (0..m_pil_used).fold((0.0, 0.0), |(a, b), k| {
        let x = pilot_regressor(k, cfg);
        (a + x, b + x * x)
    });
    let m = m_pil_used as f64;
    Ok(sigma_tau * m.sqrt() / (m * sxx - sx * sx).sqrt())
}

/// Both bounds propagated to the SFO estimate over `m_pil_used` symbols.
pub fn bound_report(snr_linear: f64, eta: usize, m_pil_used: usize, cfg: &OfdmConfig) -> Result<BoundReport> {
    let (crlb, mle) = delay_bounds(snr_linear, eta, cfg)?;
    Ok(BoundReport {
        sigma_tau_crlb: crlb,
        sigma_tau_mle: mle,
        sigma_delta_crlb: sfo_std_bounds(crlb, m_pil_used, cfg)?,
        sigma_delta_mle: sfo_std_bounds(mle, m_pil_used, cfg)?,
    })
}

/// Link-budget SNR, linear: P_Tx·α²/(k_B·B·T·NF). `alpha` is the
/// composite reference-path amplitude including any relay gain.
pub fn link_budget_snr(p_tx: f64, alpha: f64, cfg: &OfdmConfig, noise_figure: f64, temperature: f64) -> Result<f64> {
    if !(p_tx > 0.0 && alpha > 0.0 && noise_figure > 0.0 && temperature > 0.0) {
        return Err(Error::InvalidArgument("link-budget inputs must be positive".into()));
    }
    Ok(p_tx * alpha * alpha / (BOLTZMANN * cfg.bandwidth * temperature * noise_figure))
}

/// Coherent processing gain over `count` samples, dB.
pub fn processing_gain_db(count: usize) -> f64 {
    10.0 * (count as f64).log10()
}
