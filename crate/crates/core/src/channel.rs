//! Bistatic multipath channel with SFO, residual STO/CFO and AWGN.
//!
//! The receiver samples the continuous-time channel output at
//! `t = s·T_s·(1−δ)`. Between transmit samples the signal is evaluated
//! exactly from the symbol content: inside transmit symbol `m'` the
//! baseband waveform is `x(v) = N^{-1/2} Σ_n X_{n,m'} e^{j2πnv/N}` with `v`
//! the time in samples since the end of the CP. Runs of receiver samples
//! that fall in one transmit symbol form an arithmetic grid in `v`, so a
//! chirp-z transform renders each run in `O(N log N)`. A windowed-sinc
//! interpolator of the discrete stream is available as an alternative.
//!
//! Noise is complex AWGN scaled so the reference path alone reaches the
//! scenario SNR; `snr_db = +∞` disables it.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::dsp::{ChirpZ, NoiseSource};
use crate::error::{Error, Result};
use crate::ofdm::{demodulate, demodulate_symbol, FrameGrid, OfdmConfig, SampleStream};

/// One propagation path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationPath {
    /// τ_p, seconds
    pub delay: f64,
    /// f_D,p, Hz
    pub doppler: f64,
    /// α_p, linear amplitude
    pub attenuation: f64,
    pub is_reference: bool,
}

impl PropagationPath {
    /// Static line-of-sight path between the base stations.
    pub fn reference(delay: f64, attenuation: f64) -> Self {
        Self { delay, doppler: 0.0, attenuation, is_reference: true }
    }

    pub fn target(delay: f64, doppler: f64, attenuation: f64) -> Self {
        Self { delay, doppler, attenuation, is_reference: false }
    }
}

/// Paths plus receiver impairments.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelScenario {
    pub paths: Vec<PropagationPath>,
    /// Normalised SFO δ.
    pub delta: f64,
    /// Reference-path SNR, dB. `f64::INFINITY` means noiseless.
    pub snr_db: f64,
    /// τ_Δ, seconds
    pub residual_sto: f64,
    /// f_Δ, Hz
    pub residual_cfo: f64,
    /// ψ_Δ, radians
    pub residual_phase: f64,
    pub noise_seed: u64,
}

impl ChannelScenario {
    /// Unit-gain reference path at zero delay.
    pub fn single_path(delta: f64, snr_db: f64, noise_seed: u64) -> Self {
        Self {
            paths: vec![PropagationPath::reference(0.0, 1.0)],
            delta,
            snr_db,
            residual_sto: 0.0,
            residual_cfo: 0.0,
            residual_phase: 0.0,
            noise_seed,
        }
    }

    pub fn with_path(mut self, path: PropagationPath) -> Self {
        self.paths.push(path);
        self
    }

    pub fn reference_path(&self) -> Option<&PropagationPath> {
        self.paths.iter().find(|p| p.is_reference)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        let refs = self.paths.iter().filter(|p| p.is_reference).count();
        if refs != 1 {
            return bad(format!("expected exactly one reference path, found {refs}"));
        }
        if self.reference_path().is_some_and(|p| p.doppler != 0.0) {
            return bad("the reference path must have zero Doppler".into());
        }
        for p in &self.paths {
            if !(p.delay >= 0.0 && p.delay.is_finite()) {
                return bad(format!("path delay must be non-negative, got {}", p.delay));
            }
            if !(p.attenuation >= 0.0 && p.attenuation.is_finite()) {
                return bad(format!("path attenuation must be non-negative, got {}", p.attenuation));
            }
            if !p.doppler.is_finite() {
                return bad("path Doppler must be finite".into());
            }
        }
        if !(self.delta.abs() < 1.0) {
            return bad(format!("|delta| must be below 1, got {}", self.delta));
        }
        if self.snr_db.is_nan() {
            return bad("SNR is NaN".into());
        }
        Ok(())
    }

    /// Per-sample noise variance for transmit power `signal_power`.
    pub fn noise_variance(&self, signal_power: f64) -> f64 {
        if self.snr_db == f64::INFINITY {
            return 0.0;
        }
        let alpha = self.reference_path().map_or(1.0, |p| p.attenuation);
        alpha * alpha * signal_power / 10f64.powf(self.snr_db / 10.0)
    }
}

/// How the continuous-time channel output is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Interpolation {
    /// Exact evaluation from the OFDM symbol content.
    #[default]
    OfdmSynthesis,
    /// Kaiser-windowed sinc interpolation of the discrete stream.
    WindowedSinc { taps: usize },
}

fn check_positive(values: &[(f64, &str)]) -> Result<()> {
    for &(v, name) in values {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// α_0 = sqrt(G_Tx·G_Rx·λ²/((4π)³·R_0⁴))
pub fn reference_attenuation(g_tx: f64, g_rx: f64, lambda0: f64, r0: f64) -> Result<f64> {
    check_positive(&[(g_tx, "g_tx"), (g_rx, "g_rx"), (lambda0, "lambda0"), (r0, "r0")])?;
    Ok((g_tx * g_rx * lambda0 * lambda0 / ((4.0 * PI).powi(3) * r0.powi(4))).sqrt())
}

/// α_p = sqrt(G_Tx·G_Rx·σ·λ²/((4π)³·R_Tx,T²·R_T,Rx²))
pub fn target_attenuation(g_tx: f64, g_rx: f64, rcs: f64, lambda0: f64, r_tx_t: f64, r_t_rx: f64) -> Result<f64> {
    check_positive(&[
        (g_tx, "g_tx"),
        (g_rx, "g_rx"),
        (rcs, "rcs"),
        (lambda0, "lambda0"),
        (r_tx_t, "r_tx_t"),
        (r_t_rx, "r_t_rx"),
    ])?;
    let den = (4.0 * PI).powi(3) * r_tx_t * r_tx_t * r_t_rx * r_t_rx;
    Ok((g_tx * g_rx * rcs * lambda0 * lambda0 / den).sqrt())
}

/// f_D = (2v/λ)·cos(γ)·cos(ψ/2)
pub fn bistatic_doppler(speed: f64, aspect_angle: f64, bistatic_angle: f64, lambda0: f64) -> Result<f64> {
    check_positive(&[(lambda0, "lambda0")])?;
    Ok(2.0 * speed / lambda0 * aspect_angle.cos() * (bistatic_angle / 2.0).cos())
}

#[derive(Debug, Clone, Copy)]
struct PathModel {
    delay_samples: f64,
    doppler: f64,
    gain: f64,
}

/// Residual CFO/phase rotation and AWGN, shared by both interpolators.
#[derive(Debug, Clone, Copy)]
struct Impairments {
    rho: f64,
    sample_period: f64,
    cfo: f64,
    phase: f64,
    noise: NoiseSource,
}

impl Impairments {
    fn apply(&self, start: usize, out: &mut [Complex64]) {
        if self.cfo != 0.0 || self.phase != 0.0 {
            let w = TAU * self.cfo * self.rho * self.sample_period;
            for (i, o) in out.iter_mut().enumerate() {
                *o *= Complex64::cis(w * (start + i) as f64 + self.phase);
            }
        }
        self.noise.add_to(start as u64, out);
    }
}

fn path_models(scenario: &ChannelScenario, cfg: &OfdmConfig) -> Vec<PathModel> {
    scenario
        .paths
        .iter()
        .filter(|p| p.attenuation > 0.0)
        .map(|p| PathModel {
            delay_samples: (p.delay + scenario.residual_sto) / cfg.sample_period(),
            doppler: p.doppler,
            gain: p.attenuation,
        })
        .collect()
}

/// Receiver front end for one transmit frame and scenario. Any window of
/// receive samples can be rendered independently, including the noise.
pub struct Receiver<'a> {
    cfg: OfdmConfig,
    frame: &'a FrameGrid,
    paths: Vec<PathModel>,
    czt: ChirpZ,
    half_turn: Vec<Complex64>,
    impairments: Impairments,
}

impl<'a> Receiver<'a> {
    pub fn new(frame: &'a FrameGrid, scenario: &ChannelScenario, cfg: &OfdmConfig) -> Result<Self> {
        cfg.validate()?;
        scenario.validate()?;
        frame.check_frame(cfg)?;
        let n = cfg.n_subcarriers;
        let rho = 1.0 - scenario.delta;
        let czt = ChirpZ::new(n, n, TAU * rho / n as f64);
        let half_turn = (0..n).map(|k| Complex64::cis(-PI * rho * k as f64)).collect();
        let noise = NoiseSource::new(scenario.noise_seed, scenario.noise_variance(frame.mean_power()));
        Ok(Self {
            cfg: *cfg,
            frame,
            paths: path_models(scenario, cfg),
            czt,
            half_turn,
            impairments: Impairments {
                rho,
                sample_period: cfg.sample_period(),
                cfo: scenario.residual_cfo,
                phase: scenario.residual_phase,
                noise,
            },
        })
    }

    pub fn config(&self) -> &OfdmConfig {
        &self.cfg
    }

    /// Per-sample noise variance.
    pub fn noise_variance(&self) -> f64 {
        self.impairments.noise.variance()
    }

    /// Receive samples `start..start + out.len()`.
    pub fn render(&self, start: usize, out: &mut [Complex64]) {
        out.fill(Complex64::new(0.0, 0.0));
        let mut work = Work::new(self.cfg.n_subcarriers);
        for path in &self.paths {
            self.render_path(path, start, out, &mut work);
        }
        self.impairments.apply(start, out);
    }

    fn render_path(&self, path: &PathModel, start: usize, out: &mut [Complex64], work: &mut Work) {
        let n = self.cfg.n_subcarriers;
        let nsym = self.cfg.symbol_len() as f64;
        let ncp = self.cfg.cp_len as f64;
        let rho = self.impairments.rho;
        let d = path.delay_samples;
        let m_total = self.cfg.n_symbols as i64;
        let u_at = |s: usize| s as f64 * rho - d;
        let sym_at = |s: usize| (u_at(s) / nsym).floor() as i64;
        let end = start + out.len();
        let mut s = start;
        while s < end {
            let mm = sym_at(s);
            if mm >= m_total {
                break;
            }
            if mm < 0 {
                let mut first = ((d / rho).ceil() as usize).max(s + 1);
                while first > s + 1 && sym_at(first - 1) >= 0 {
                    first -= 1;
                }
                while sym_at(first) < 0 {
                    first += 1;
                }
                s = first;
                continue;
            }
            let mut e = ((((mm + 1) as f64 * nsym + d) / rho).ceil() as usize).max(s + 1);
            while e > s + 1 && sym_at(e - 1) > mm {
                e -= 1;
            }
            while sym_at(e) == mm {
                e += 1;
            }
            let run_end = e.min(end);
            let mut k0 = s;
            while k0 < run_end {
                let count = (run_end - k0).min(n);
                let v0 = u_at(k0) - mm as f64 * nsym - ncp;
                self.synthesize(path, mm as usize, v0, k0, &mut out[k0 - start..k0 - start + count], work);
                k0 += count;
            }
            s = run_end;
        }
    }

    /// Adds path `path`'s contribution of transmit symbol `m` at
    /// `v = v0 + kρ` (k = 0..out.len()) for receive samples from `s0`.
    fn synthesize(&self, path: &PathModel, m: usize, v0: f64, s0: usize, out: &mut [Complex64], work: &mut Work) {
        let n = self.cfg.n_subcarriers;
        let col = self.frame.column(m);
        let step = TAU * v0 / n as f64;
        let w = Complex64::cis(step);
        let mut cur = Complex64::new(1.0, 0.0);
        for (q, (a, x)) in work.input.iter_mut().zip(col).enumerate() {
            if q % 256 == 0 {
                cur = Complex64::cis(step * q as f64);
            }
            *a = x * cur;
            cur *= w;
        }
        let count = out.len();
        self.czt.process(&work.input, &mut work.output[..count], &mut work.scratch);
        let scale = path.gain / (n as f64).sqrt();
        let lead = Complex64::cis(-PI * v0) * scale;
        let fd_step = TAU * path.doppler * self.impairments.rho * self.impairments.sample_period;
        let mut dop = Complex64::new(1.0, 0.0);
        let dop_w = Complex64::cis(fd_step);
        for (k, (o, v)) in out.iter_mut().zip(&work.output[..count]).enumerate() {
            if path.doppler != 0.0 && k % 256 == 0 {
                dop = Complex64::cis(fd_step * (s0 + k) as f64);
            }
            *o += v * self.half_turn[k] * lead * dop;
            if path.doppler != 0.0 {
                dop *= dop_w;
            }
        }
    }

    /// The whole receive stream, `M(N+N_CP)` samples.
    pub fn stream(&self) -> SampleStream {
        let mut samples = vec![Complex64::new(0.0, 0.0); self.cfg.frame_len()];
        let block = self.cfg.symbol_len();
        samples.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
            self.render(b * block, chunk);
        });
        SampleStream { samples, sample_rate: self.cfg.bandwidth }
    }

    /// Demodulated column `m` with the nominal FFT window.
    pub fn symbol(&self, m: usize) -> Vec<Complex64> {
        let n = self.cfg.n_subcarriers;
        let mut window = vec![Complex64::new(0.0, 0.0); n];
        self.render(self.cfg.useful_start(m), &mut window);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        demodulate_symbol(&self.cfg, &window, &mut col);
        col
    }

    /// Receive grid with only the listed columns demodulated; other
    /// columns are zero.
    pub fn grid(&self, columns: &[usize]) -> Result<FrameGrid> {
        let mut want = vec![false; self.cfg.n_symbols];
        for &m in columns {
            if m >= self.cfg.n_symbols {
                return Err(Error::InvalidArgument(format!("symbol {m} outside the frame")));
            }
            want[m] = true;
        }
        let mut grid = FrameGrid::zeros(self.cfg.n_subcarriers, self.cfg.n_symbols);
        grid.par_columns_mut().enumerate().for_each(|(m, col)| {
            if want[m] {
                col.copy_from_slice(&self.symbol(m));
            }
        });
        Ok(grid)
    }
}

struct Work {
    input: Vec<Complex64>,
    output: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Work {
    fn new(n: usize) -> Self {
        Self {
            input: vec![Complex64::new(0.0, 0.0); n],
            output: vec![Complex64::new(0.0, 0.0); n],
            scratch: Vec::new(),
        }
    }
}

/// Receive grid for a transmit frame, demodulating only `columns`.
pub fn receive_grid(frame: &FrameGrid, scenario: &ChannelScenario, cfg: &OfdmConfig, columns: &[usize]) -> Result<FrameGrid> {
    Receiver::new(frame, scenario, cfg)?.grid(columns)
}

/// Full receive stream for a transmit frame.
pub fn receive_stream(frame: &FrameGrid, scenario: &ChannelScenario, cfg: &OfdmConfig) -> Result<SampleStream> {
    Ok(Receiver::new(frame, scenario, cfg)?.stream())
}

/// Channel applied to a modulated transmit stream. The stream is read
/// through its OFDM symbol content, i.e. each CP is taken as cyclic.
pub fn apply_channel(tx: &SampleStream, scenario: &ChannelScenario, cfg: &OfdmConfig) -> Result<SampleStream> {
    apply_channel_with(tx, scenario, cfg, Interpolation::OfdmSynthesis)
}

pub fn apply_channel_with(
    tx: &SampleStream,
    scenario: &ChannelScenario,
    cfg: &OfdmConfig,
    interpolation: Interpolation,
) -> Result<SampleStream> {
    cfg.validate()?;
    scenario.validate()?;
    if tx.len() < cfg.frame_len() {
        return Err(Error::StreamTooShort { needed: cfg.frame_len(), available: tx.len() });
    }
    match interpolation {
        Interpolation::OfdmSynthesis => {
            let frame = demodulate(tx, cfg)?;
            receive_stream(&frame, scenario, cfg)
        }
        Interpolation::WindowedSinc { taps } => sinc_channel(tx, scenario, cfg, taps),
    }
}

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

const SINC_KAISER_BETA: f64 = 10.0;
const SINC_TABLE_PHASES: usize = 2048;

/// Kaiser-windowed sinc kernel tabulated on a fine grid.
struct SincKernel {
    half: usize,
    table: Vec<f64>,
}

impl SincKernel {
    fn new(taps: usize) -> Self {
        let half = (taps / 2).max(2);
        let len = 2 * half * SINC_TABLE_PHASES + 1;
        let norm = bessel_i0(SINC_KAISER_BETA);
        let table = (0..len)
            .map(|i| {
                let t = i as f64 / SINC_TABLE_PHASES as f64 - half as f64;
                let r = t / half as f64;
                if r.abs() >= 1.0 {
                    return 0.0;
                }
                let sinc = if t == 0.0 { 1.0 } else { (PI * t).sin() / (PI * t) };
                sinc * bessel_i0(SINC_KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect();
        Self { half, table }
    }

    fn eval(&self, t: f64) -> f64 {
        let pos = (t + self.half as f64) * SINC_TABLE_PHASES as f64;
        if pos <= 0.0 || pos >= (self.table.len() - 1) as f64 {
            return 0.0;
        }
        let i = pos.floor() as usize;
        let f = pos - i as f64;
        self.table[i] * (1.0 - f) + self.table[i + 1] * f
    }
}

fn sinc_channel(tx: &SampleStream, scenario: &ChannelScenario, cfg: &OfdmConfig, taps: usize) -> Result<SampleStream> {
    if taps < 4 {
        return Err(Error::InvalidArgument(format!("sinc kernel needs at least 4 taps, got {taps}")));
    }
    let kernel = SincKernel::new(taps);
    let paths = path_models(scenario, cfg);
    let rho = 1.0 - scenario.delta;
    let impairments = Impairments {
        rho,
        sample_period: cfg.sample_period(),
        cfo: scenario.residual_cfo,
        phase: scenario.residual_phase,
        noise: NoiseSource::new(scenario.noise_seed, scenario.noise_variance(tx.mean_power())),
    };
    let x = &tx.samples[..cfg.frame_len()];
    let len = x.len() as i64;
    let half = kernel.half as i64;
    let mut samples = vec![Complex64::new(0.0, 0.0); cfg.frame_len()];
    let block = cfg.symbol_len();
    samples.par_chunks_mut(block).enumerate().for_each(|(b, chunk)| {
        let start = b * block;
        for (i, o) in chunk.iter_mut().enumerate() {
            let s = (start + i) as f64;
            for p in &paths {
                let u = s * rho - p.delay_samples;
                let base = u.floor() as i64;
                let mut acc = Complex64::new(0.0, 0.0);
                for j in (base - half + 1)..=(base + half) {
                    if j < 0 || j >= len {
                        continue;
                    }
                    acc += x[j as usize] * kernel.eval(u - j as f64);
                }
                let rot = Complex64::cis(TAU * p.doppler * s * rho * cfg.sample_period());
                *o += acc * p.gain * rot;
            }
        }
        impairments.apply(start, chunk);
    });
    Ok(SampleStream { samples, sample_rate: cfg.bandwidth })
}

/// D(a) = (1/N)·Σ_{i<N} e^{j2πia/N}
fn dirichlet(a: f64, n: usize) -> Complex64 {
    let nf = n as f64;
    let den = (PI * a / nf).sin();
    if den.abs() < 1e-15 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::cis(PI * a * (nf - 1.0) / nf) * ((PI * a).sin() / (nf * den))
}

/// Per-subcarrier SFO model: `Y_{n,m} = α_n·Ỹ_{n,m}·e^{jψ_{n,m}} + ξ_{n,m}`
/// with the ICI term evaluated as the full sum over the other
/// subcarriers. `frame` is the SFO-free receive grid Ỹ. Valid while no
/// ISI occurs. Cost `O(N²M)`.
pub fn analytic_subcarrier_oracle(frame: &FrameGrid, delta: f64, cfg: &OfdmConfig) -> Result<FrameGrid> {
    oracle(frame, delta, cfg, true)
}

/// As [`analytic_subcarrier_oracle`] with the ICI term forced to zero.
pub fn analytic_diagonal_model(frame: &FrameGrid, delta: f64, cfg: &OfdmConfig) -> Result<FrameGrid> {
    oracle(frame, delta, cfg, false)
}

fn oracle(frame: &FrameGrid, delta: f64, cfg: &OfdmConfig, with_ici: bool) -> Result<FrameGrid> {
    cfg.validate()?;
    frame.check_frame(cfg)?;
    if !(delta.abs() < 1.0) {
        return Err(Error::InvalidArgument(format!("|delta| must be below 1, got {delta}")));
    }
    let n = cfg.n_subcarriers;
    let mut out = FrameGrid::zeros(n, cfg.n_symbols);
    out.par_columns_mut().enumerate().for_each(|(m, col)| {
        let input = frame.column(m);
        let s_m = cfg.useful_start(m) as f64;
        for (r, y) in col.iter_mut().enumerate() {
            let nn = cfg.subcarrier_index(r);
            let alpha = crate::analysis::amplitude_modulation(nn, delta, cfg);
            let psi = crate::analysis::phase_rotation(nn, m, delta, cfg);
            let mut acc = input[r] * alpha * Complex64::cis(psi);
            if with_ici {
                for (l_row, &x) in input.iter().enumerate() {
                    if l_row == r || x == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    let l = cfg.subcarrier_index(l_row) as f64;
                    let a = (1.0 - delta) * l - nn as f64;
                    acc += x * dirichlet(a, n) * Complex64::cis(-TAU * delta * l * s_m / n as f64);
                }
            }
            *y = acc;
        }
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{build_pilot_grid, generate_frame, modulate};

    fn small() -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: 32,
            n_symbols: 4,
            cp_len: 8,
            pilot_subc_spacing: 2,
            pilot_sym_spacing: 2,
            ..OfdmConfig::table1()
        }
    }

    fn tx(cfg: &OfdmConfig) -> (FrameGrid, SampleStream) {
        let pilots = build_pilot_grid(cfg, 1).unwrap();
        let frame = generate_frame(cfg, &pilots, 2).unwrap();
        let stream = modulate(&frame, cfg).unwrap();
        (frame, stream)
    }

    #[test]
    fn geometry_examples() {
        let a = reference_attenuation(1.0, 1.0, 1.0, 1.0).unwrap();
        assert!((a - 0.022_448_390_265_645_823).abs() < 1e-15);
        let far = reference_attenuation(1.0, 1.0, 1.0, 2.0).unwrap();
        assert!((far - a / 4.0).abs() < 1e-15);
        assert!((reference_attenuation(4.0, 1.0, 1.0, 1.0).unwrap() - 2.0 * a).abs() < 1e-15);
        assert!((target_attenuation(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap() - a).abs() < 1e-15);
        let t = target_attenuation(1.0, 1.0, 4.0, 1.0, 1.0, 1.0).unwrap();
        assert!((t - 2.0 * a).abs() < 1e-15);
        let t = target_attenuation(1.0, 1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        assert!((t - a / 2.0).abs() < 1e-15);
        assert!(reference_attenuation(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(target_attenuation(1.0, 1.0, -1.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn doppler_examples() {
        assert_eq!(bistatic_doppler(0.0, 0.3, 0.2, 0.01).unwrap(), 0.0);
        assert!((bistatic_doppler(3.0, 0.0, 0.0, 0.5).unwrap() - 12.0).abs() < 1e-12);
        let f = bistatic_doppler(10.0, PI / 3.0, PI / 2.0, 0.011_45).unwrap();
        assert!((f - 617.560_507_586_504_4).abs() < 1e-9);
    }

    #[test]
    fn scenario_validation() {
        let ok = ChannelScenario::single_path(0.0, 20.0, 1);
        assert!(ok.validate().is_ok());
        let mut none = ok.clone();
        none.paths.clear();
        assert!(none.validate().is_err());
        let two = ok.clone().with_path(PropagationPath::reference(1e-9, 1.0));
        assert!(two.validate().is_err());
        let fast = ChannelScenario { delta: 1.0, ..ok.clone() };
        assert!(fast.validate().is_err());
        let mut moving = ok.clone();
        moving.paths[0].doppler = 5.0;
        assert!(moving.validate().is_err());
    }

    #[test]
    fn identity_channel() {
        let cfg = small();
        let (_, s) = tx(&cfg);
        let sc = ChannelScenario::single_path(0.0, f64::INFINITY, 0);
        let y = apply_channel(&s, &sc, &cfg).unwrap();
        for (a, b) in s.samples.iter().zip(&y.samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn integer_delay_shifts_the_stream() {
        let cfg = small();
        let (_, s) = tx(&cfg);
        let k = 3;
        let mut sc = ChannelScenario::single_path(0.0, f64::INFINITY, 0);
        sc.paths[0].delay = k as f64 * cfg.sample_period();
        let y = apply_channel(&s, &sc, &cfg).unwrap();
        for i in 0..k {
            assert!(y.samples[i].norm() < 1e-12);
        }
        for i in k..s.len() {
            assert!((y.samples[i] - s.samples[i - k]).norm() < 1e-10, "sample {i}");
        }
    }

    #[test]
    fn rendered_windows_match_the_full_stream() {
        let cfg = small();
        let (frame, _) = tx(&cfg);
        let sc = ChannelScenario {
            delta: 3e-3,
            residual_cfo: 1e5,
            residual_phase: 0.3,
            ..ChannelScenario::single_path(0.0, 10.0, 5)
        }
        .with_path(PropagationPath::target(7.3e-9, 2e6, 0.5));
        let rx = Receiver::new(&frame, &sc, &cfg).unwrap();
        let full = rx.stream();
        let mut part = vec![Complex64::new(0.0, 0.0); 50];
        rx.render(17, &mut part);
        for (a, b) in part.iter().zip(&full.samples[17..67]) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn synthesis_matches_direct_evaluation() {
        let cfg = small();
        let (frame, _) = tx(&cfg);
        let delta = -2.5e-3;
        let delay = 2.7e-9;
        let fd = 3e6;
        let sc = ChannelScenario::single_path(delta, f64::INFINITY, 0).with_path(PropagationPath::target(delay, fd, 0.7));
        let y = receive_stream(&frame, &sc, &cfg).unwrap();
        let n = cfg.n_subcarriers;
        let nsym = cfg.symbol_len() as f64;
        let direct = |s: usize, d: f64| -> Complex64 {
            let u = s as f64 * (1.0 - delta) - d / cfg.sample_period();
            let m = (u / nsym).floor();
            if m < 0.0 || m >= cfg.n_symbols as f64 {
                return Complex64::new(0.0, 0.0);
            }
            let v = u - m * nsym - cfg.cp_len as f64;
            let col = frame.column(m as usize);
            col.iter()
                .enumerate()
                .map(|(r, x)| x * Complex64::cis(TAU * cfg.subcarrier_index(r) as f64 * v / n as f64))
                .sum::<Complex64>()
                / (n as f64).sqrt()
        };
        for s in 0..y.len() {
            let t = s as f64 * (1.0 - delta) * cfg.sample_period();
            let want = direct(s, 0.0) + direct(s, delay) * 0.7 * Complex64::cis(TAU * fd * t);
            assert!((y.samples[s] - want).norm() < 1e-10, "sample {s}");
        }
    }

    #[test]
    fn sinc_interpolator_agrees_away_from_symbol_edges() {
        let cfg = OfdmConfig { n_subcarriers: 256, n_symbols: 3, cp_len: 64, ..small() };
        let frame = FrameGrid::from_fn(256, 3, |r, m| {
            let n = cfg.subcarrier_index(r);
            if n.abs() <= 64 {
                Complex64::cis(0.37 * (r * 7 + m * 3) as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let s = modulate(&frame, &cfg).unwrap();
        let delta = 1e-3;
        let sc = ChannelScenario::single_path(delta, f64::INFINITY, 0);
        let exact = apply_channel(&s, &sc, &cfg).unwrap();
        let sinc = apply_channel_with(&s, &sc, &cfg, Interpolation::WindowedSinc { taps: 64 }).unwrap();
        let nsym = cfg.symbol_len() as f64;
        let (mut err, mut pow) = (0.0, 0.0);
        for k in 0..exact.len() {
            let pos = (k as f64 * (1.0 - delta)).rem_euclid(nsym);
            if pos > 40.0 && pos < nsym - 40.0 {
                err += (exact.samples[k] - sinc.samples[k]).norm_sqr();
                pow += exact.samples[k].norm_sqr();
            }
        }
        assert!(err / pow < 1e-8, "relative error {}", err / pow);
    }

    #[test]
    fn oracle_identity_at_zero_sfo() {
        let cfg = small();
        let (frame, _) = tx(&cfg);
        let y = analytic_subcarrier_oracle(&frame, 0.0, &cfg).unwrap();
        for (a, b) in frame.as_slice().iter().zip(y.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
