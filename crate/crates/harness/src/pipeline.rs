//! One Monte-Carlo trial: frame, channel, estimation and correction.
//!
//! The receive stream, the pilot grid and the delay track are computed on
//! first use and shared by every processing chain of the trial.

use std::cell::OnceCell;

use sfo_core::channel::{ChannelScenario, PropagationPath, Receiver};
use sfo_core::correction::farrow_resample;
use sfo_core::dsp::derive_seed;
use sfo_core::estimation::{estimate_track, phase_sfo, DelayTrack, EstimatorParams, Method, SfoEstimate};
use sfo_core::ofdm::{build_pilot_grid, demodulate, demodulate_with_offsets, generate_frame, FrameGrid, OfdmConfig, PilotGrid, SampleStream};
use sfo_core::SPEED_OF_LIGHT;

use crate::config::{Processing, ScenarioSpec};
use crate::error::Result;

/// Waveform and pilot layout shared by all trials of an experiment.
#[derive(Debug, Clone)]
pub struct Setup {
    pub cfg: OfdmConfig,
    pub pilots: PilotGrid,
}

impl Setup {
    pub fn new(cfg: OfdmConfig, base_seed: u64) -> Result<Self> {
        let pilots = build_pilot_grid(&cfg, derive_seed(&[base_seed, 0x9170]))?;
        Ok(Self { cfg, pilots })
    }

    /// Transmit frame with a payload drawn from `seed`.
    pub fn frame(&self, seed: u64) -> Result<FrameGrid> {
        Ok(generate_frame(&self.cfg, &self.pilots, seed)?)
    }
}

/// Channel scenario for one trial.
pub fn scenario(spec: &ScenarioSpec, delta: f64, snr_db: f64, noise_seed: u64) -> ChannelScenario {
    let tau0 = spec.reference_delay_ns * 1e-9;
    let mut sc = ChannelScenario {
        paths: vec![PropagationPath::reference(tau0, 1.0)],
        delta,
        snr_db,
        residual_sto: spec.residual_sto_ns * 1e-9,
        residual_cfo: spec.residual_cfo_hz,
        residual_phase: spec.residual_phase_rad,
        noise_seed,
    };
    if let Some(t) = spec.target {
        let amp = 10f64.powf(t.relative_power_db / 20.0);
        sc.paths.push(PropagationPath::target(tau0 + t.range_m / SPEED_OF_LIGHT, t.doppler_hz, amp));
    }
    sc
}

/// Seeds of one trial at one axis point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub payload: u64,
    pub noise: u64,
}

impl TrialSeeds {
    pub fn derive(base_seed: u64, point: u64, trial: u64) -> Self {
        Self {
            payload: derive_seed(&[base_seed, point, trial, 1]),
            noise: derive_seed(&[base_seed, point, trial, 2]),
        }
    }
}

/// Lazily evaluated receive chain of one trial.
pub struct TrialRun<'a> {
    setup: &'a Setup,
    frame: &'a FrameGrid,
    rx: Receiver<'a>,
    delta: f64,
    params: EstimatorParams,
    stream: OnceCell<SampleStream>,
    pilot_grid: OnceCell<FrameGrid>,
    track: OnceCell<DelayTrack>,
}

impl<'a> TrialRun<'a> {
    pub fn new(setup: &'a Setup, frame: &'a FrameGrid, scenario: &ChannelScenario, params: EstimatorParams) -> Result<Self> {
        Ok(Self {
            setup,
            frame,
            rx: Receiver::new(frame, scenario, &setup.cfg)?,
            delta: scenario.delta,
            params,
            stream: OnceCell::new(),
            pilot_grid: OnceCell::new(),
            track: OnceCell::new(),
        })
    }

    pub fn cfg(&self) -> &OfdmConfig {
        &self.setup.cfg
    }

    /// True δ of the scenario.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn frame(&self) -> &FrameGrid {
        self.frame
    }

    pub fn receiver(&self) -> &Receiver<'a> {
        &self.rx
    }

    pub fn stream(&self) -> &SampleStream {
        self.stream.get_or_init(|| self.rx.stream())
    }

    /// Receive grid with only the pilot-bearing symbols demodulated.
    pub fn pilot_grid(&self) -> Result<&FrameGrid> {
        if let Some(g) = self.pilot_grid.get() {
            return Ok(g);
        }
        let g = match self.stream.get() {
            Some(s) => demodulate(s, self.cfg())?,
            None => self.rx.grid(&self.setup.pilots.symbol_indices)?,
        };
        Ok(self.pilot_grid.get_or_init(|| g))
    }

    pub fn track(&self) -> Result<&DelayTrack> {
        if let Some(t) = self.track.get() {
            return Ok(t);
        }
        let t = estimate_track(self.pilot_grid()?, &self.setup.pilots, self.cfg(), &self.params)?;
        Ok(self.track.get_or_init(|| t))
    }

    pub fn estimate(&self, method: Method) -> Result<SfoEstimate> {
        match method {
            Method::Phase => Ok(SfoEstimate {
                delta_hat: phase_sfo(self.pilot_grid()?, &self.setup.pilots, self.cfg())?,
                method,
                m_pil_used: self.setup.pilots.n_symbols(),
                track: None,
            }),
            _ => Ok(SfoEstimate::from_track(self.track()?.clone(), method, &self.params, self.cfg())?),
        }
    }

    /// Demodulated grid after `processing`. Without correction only
    /// `columns` are demodulated; corrected chains return every column.
    pub fn processed_grid(&self, processing: Processing, columns: &[usize]) -> Result<(FrameGrid, Option<SfoEstimate>)> {
        let cfg = self.cfg();
        match processing {
            Processing::Uncorrected => Ok((self.rx.grid(columns)?, None)),
            Processing::FarrowTrue => Ok((demodulate(&farrow_resample(self.stream(), self.delta, cfg)?, cfg)?, None)),
            Processing::Farrow(method) => {
                let est = self.estimate(method)?;
                let grid = demodulate(&farrow_resample(self.stream(), est.delta_hat, cfg)?, cfg)?;
                Ok((grid, Some(est)))
            }
            Processing::PhaseResidual => {
                let est = self.estimate(Method::Phase)?;
                let offsets = window_offsets(est.delta_hat, cfg);
                Ok((demodulate_with_offsets(self.stream(), cfg, &offsets)?, Some(est)))
            }
        }
    }
}

/// Integer FFT-window shifts that follow a drift of `delta_hat`: transmit
/// sample `s` arrives near receive sample `s/(1−δ̂)`.
pub fn window_offsets(delta_hat: f64, cfg: &OfdmConfig) -> Vec<i64> {
    let scale = delta_hat / (1.0 - delta_hat);
    (0..cfg.n_symbols).map(|m| (cfg.useful_start(m) as f64 * scale).round() as i64).collect()
}
