//! Experiment specifications and their TOML form.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Deserialize;
use sfo_core::dsp::WindowKind;
use sfo_core::estimation::{EstimatorParams, Method, PeakInterpolation, ProfileEngine, SearchWindow, TrackerConfig};
use sfo_core::ofdm::OfdmConfig;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Table1,
    #[default]
    Desk,
}

impl Preset {
    pub fn config(self) -> OfdmConfig {
        match self {
            Preset::Table1 => OfdmConfig::table1(),
            Preset::Desk => OfdmConfig::desk(),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table1" => Ok(Preset::Table1),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Config(format!("unknown preset '{other}' (expected table1 or desk)"))),
        }
    }
}

/// What an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Closed-form SFO effects along subcarriers and symbols.
    Effects,
    /// Per-symbol EVM.
    Evm,
    /// Range-Doppler images with optional correction.
    Image,
    /// Delay-slow-time profile of one frame.
    DelayProfile,
    /// Reference-peak SINR in selected profile columns.
    Sinr,
    /// RMSE, bias and TITO symbol counts of the estimators.
    Estimation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Effects => "effects",
            ExperimentKind::Evm => "evm",
            ExperimentKind::Image => "image",
            ExperimentKind::DelayProfile => "delay-profile",
            ExperimentKind::Sinr => "sinr",
            ExperimentKind::Estimation => "estimation",
        }
    }
}

/// Receive-side processing applied before a metric is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Processing {
    /// Nominal demodulation, no SFO handling.
    Uncorrected,
    /// Estimate with the given method, then Farrow resampling.
    Farrow(Method),
    /// Farrow resampling with the true δ.
    FarrowTrue,
    /// Phase-based estimate followed by per-symbol integer window shifts.
    PhaseResidual,
}

impl Processing {
    pub fn name(self) -> &'static str {
        match self {
            Processing::Uncorrected => "none",
            Processing::Farrow(m) => m.name(),
            Processing::FarrowTrue => "true",
            Processing::PhaseResidual => "phase-residual",
        }
    }

    pub fn estimator(self) -> Option<Method> {
        match self {
            Processing::Farrow(m) => Some(m),
            Processing::PhaseResidual => Some(Method::Phase),
            _ => None,
        }
    }
}

impl FromStr for Processing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "uncorrected" => Ok(Processing::Uncorrected),
            "true" | "oracle" => Ok(Processing::FarrowTrue),
            "phase-residual" => Ok(Processing::PhaseResidual),
            other => other
                .parse::<Method>()
                .map(Processing::Farrow)
                .map_err(|_| Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

impl std::fmt::Display for Processing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OfdmOverrides {
    pub n_subcarriers: Option<usize>,
    pub n_symbols: Option<usize>,
    pub cp_len: Option<usize>,
    pub bandwidth_hz: Option<f64>,
    pub carrier_hz: Option<f64>,
    pub pilot_subc_spacing: Option<usize>,
    pub pilot_sym_spacing: Option<usize>,
}

impl OfdmOverrides {
    pub fn apply(&self, mut cfg: OfdmConfig) -> OfdmConfig {
        cfg.n_subcarriers = self.n_subcarriers.unwrap_or(cfg.n_subcarriers);
        cfg.n_symbols = self.n_symbols.unwrap_or(cfg.n_symbols);
        cfg.cp_len = self.cp_len.unwrap_or(cfg.cp_len);
        cfg.bandwidth = self.bandwidth_hz.unwrap_or(cfg.bandwidth);
        cfg.carrier_freq = self.carrier_hz.unwrap_or(cfg.carrier_freq);
        cfg.pilot_subc_spacing = self.pilot_subc_spacing.unwrap_or(cfg.pilot_subc_spacing);
        cfg.pilot_sym_spacing = self.pilot_sym_spacing.unwrap_or(cfg.pilot_sym_spacing);
        cfg
    }
}

/// Point target added to the reference path.
#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    /// Bistatic range relative to the reference path, metres.
    pub range_m: f64,
    pub doppler_hz: f64,
    /// Target power relative to the reference path, dB.
    #[serde(default = "default_target_power")]
    pub relative_power_db: f64,
}

fn default_target_power() -> f64 {
    -6.0
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSpec {
    /// Used when the sweep has no SNR axis.
    pub snr_db: f64,
    pub reference_delay_ns: f64,
    pub target: Option<TargetSpec>,
    pub residual_sto_ns: f64,
    pub residual_cfo_hz: f64,
    pub residual_phase_rad: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            snr_db: 20.0,
            reference_delay_ns: 0.0,
            target: None,
            residual_sto_ns: 0.0,
            residual_cfo_hz: 0.0,
            residual_phase_rad: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub snr_db: Vec<f64>,
    pub delta_ppm: Vec<f64>,
    pub methods: Vec<String>,
    /// Symbol indices for `evm`.
    pub symbols: Vec<usize>,
    /// Pilot-symbol (profile column) indices for `sinr`.
    pub columns: Vec<usize>,
    /// Leading pilot symbols entering the fit, for `estimation`.
    pub m_pil: Vec<usize>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSpec {
    pub eta: usize,
    pub delta_max_ppm: f64,
    pub epsilon: f64,
    pub window: String,
    /// `zero-padded` or `czt`.
    pub engine: String,
    /// `none` or `parabolic`.
    pub interpolation: String,
    /// `global` or `bounded`.
    pub search: String,
}

impl Default for EstimatorSpec {
    fn default() -> Self {
        Self {
            eta: 20,
            delta_max_ppm: 1000.0,
            epsilon: 0.1,
            window: "chebyshev".into(),
            engine: "zero-padded".into(),
            interpolation: "none".into(),
            search: "global".into(),
        }
    }
}

impl EstimatorSpec {
    pub fn params(&self) -> Result<EstimatorParams> {
        if self.eta == 0 {
            return Err(Error::Config("estimator.eta must be at least 1".into()));
        }
        if !(self.delta_max_ppm > 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::Config("estimator.delta_max_ppm must be positive and epsilon non-negative".into()));
        }
        let window = parse_window(&self.window)?;
        let engine = match self.engine.as_str() {
            "zero-padded" | "zp" => ProfileEngine::ZeroPadded,
            "czt" => ProfileEngine::CztZoom,
            other => return Err(Error::Config(format!("unknown profile engine '{other}'"))),
        };
        let interpolation = match self.interpolation.as_str() {
            "none" => PeakInterpolation::None,
            "parabolic" => PeakInterpolation::Parabolic,
            other => return Err(Error::Config(format!("unknown peak interpolation '{other}'"))),
        };
        let delta_max = self.delta_max_ppm * 1e-6;
        let search = match self.search.as_str() {
            "global" => SearchWindow::Global,
            "bounded" => SearchWindow::Bounded { delta_max, epsilon: self.epsilon },
            other => return Err(Error::Config(format!("unknown search window '{other}'"))),
        };
        Ok(EstimatorParams {
            eta: self.eta,
            delta_max,
            epsilon: self.epsilon,
            window,
            tracker: TrackerConfig { search, interpolation },
            engine,
        })
    }
}

pub fn parse_window(s: &str) -> Result<WindowKind> {
    s.parse::<WindowKind>().map_err(Error::Config)
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ImageSpec {
    pub window: String,
    pub padding_range: usize,
    pub padding_doppler: usize,
    pub recenter: bool,
    /// Half-size of the written crop around the reference, bins; 0 keeps everything.
    pub crop_range: usize,
    pub crop_doppler: usize,
    pub dynamic_range_db: f64,
}

impl Default for ImageSpec {
    fn default() -> Self {
        Self {
            window: "chebyshev".into(),
            padding_range: 1,
            padding_doppler: 1,
            recenter: false,
            crop_range: 0,
            crop_doppler: 0,
            dynamic_range_db: 80.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    /// Directory for PNG images; defaults to the CSV's directory.
    pub image_dir: Option<PathBuf>,
    /// Plot abscissa: `snr_db`, `delta_ppm` or `index`.
    pub plot_x: Option<String>,
    /// Plot ordinate: `rmse_ppm`, `bias_ppm`, `mean_mpil_used`, `mean_sinr_db` or `mean_evm_db`.
    pub plot_y: Option<String>,
}

/// One experiment: configuration, scenario template, sweep axes and outputs.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub preset: Preset,
    #[serde(default)]
    pub ofdm: OfdmOverrides,
    #[serde(default)]
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub estimator: EstimatorSpec,
    #[serde(default)]
    pub image: ImageSpec,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_trials() -> usize {
    1
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut spec = Self::from_toml(&text)?;
        spec.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }

    /// Makes relative output paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.output.csv, &mut self.output.plot, &mut self.output.image_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn ofdm_config(&self) -> OfdmConfig {
        self.ofdm.apply(self.preset.config())
    }

    /// SNR axis, falling back to the scenario SNR.
    pub fn snr_axis(&self) -> Vec<f64> {
        if self.sweep.snr_db.is_empty() {
            vec![self.scenario.snr_db]
        } else {
            self.sweep.snr_db.clone()
        }
    }

    pub fn processing(&self) -> Result<Vec<Processing>> {
        if self.sweep.methods.is_empty() {
            return Ok(match self.kind {
                ExperimentKind::Estimation => Method::ALL.iter().map(|&m| Processing::Farrow(m)).collect(),
                ExperimentKind::Image => vec![Processing::Uncorrected, Processing::Farrow(Method::Tito)],
                _ => vec![Processing::Uncorrected],
            });
        }
        self.sweep.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let cfg = self.ofdm_config();
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        if self.n_trials == 0 {
            return bad("n_trials must be at least 1".into());
        }
        if self.sweep.delta_ppm.is_empty() {
            return bad("sweep.delta_ppm must not be empty".into());
        }
        if let Some(d) = self.sweep.delta_ppm.iter().find(|d| !(d.abs() < 1e6)) {
            return bad(format!("delta {d} ppm is out of range"));
        }
        if self.snr_axis().iter().any(|s| s.is_nan()) {
            return bad("SNR values must not be NaN".into());
        }
        self.estimator.params()?;
        parse_window(&self.image.window)?;
        if self.image.padding_range == 0 || self.image.padding_doppler == 0 {
            return bad("image padding factors must be at least 1".into());
        }
        let processing = self.processing()?;
        match self.kind {
            ExperimentKind::Estimation => {
                if processing.iter().any(|p| !matches!(p, Processing::Farrow(_))) {
                    return bad("estimation experiments take the methods tito, full and phase".into());
                }
                if !self.sweep.m_pil.is_empty() {
                    if processing.contains(&Processing::Farrow(Method::Phase)) {
                        return bad("sweep.m_pil applies to the delay-based methods only".into());
                    }
                    let max = cfg.n_pilot_symbols();
                    if let Some(m) = self.sweep.m_pil.iter().find(|&&m| m < 2 || m > max) {
                        return bad(format!("m_pil {m} outside 2..={max}"));
                    }
                }
            }
            ExperimentKind::Evm => {
                if self.sweep.symbols.is_empty() {
                    return bad("sweep.symbols must list the symbols to evaluate".into());
                }
                if let Some(m) = self.sweep.symbols.iter().find(|&&m| m >= cfg.n_symbols) {
                    return bad(format!("symbol {m} outside the frame of {} symbols", cfg.n_symbols));
                }
            }
            ExperimentKind::Sinr => {
                if self.sweep.columns.is_empty() {
                    return bad("sweep.columns must list the profile columns to evaluate".into());
                }
                if let Some(j) = self.sweep.columns.iter().find(|&&j| j >= cfg.n_pilot_symbols()) {
                    return bad(format!("column {j} outside the {} pilot symbols", cfg.n_pilot_symbols()));
                }
            }
            _ => {}
        }
        if let Some(x) = self.output.plot_x.as_deref() {
            if !["snr_db", "delta_ppm", "index"].contains(&x) {
                return bad(format!("unknown plot abscissa '{x}'"));
            }
        }
        if let Some(y) = self.output.plot_y.as_deref() {
            if !["rmse_ppm", "bias_ppm", "mean_mpil_used", "mean_sinr_db", "mean_evm_db"].contains(&y) {
                return bad(format!("unknown plot ordinate '{y}'"));
            }
        }
        Ok(())
    }
}
