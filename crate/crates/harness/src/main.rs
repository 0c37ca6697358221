use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use sfo_core::analysis::{
    amplitude_modulation, bound_report, frame_range_migration, freq_shift_migration, phase_rotation, sfo_limits,
    subcarrier_freq_shift,
};
use sfo_core::from_db;
use sfo_core::ofdm::OfdmConfig;
use sfo_lab::config::{ExperimentKind, ExperimentSpec, OutputSpec, Preset, Processing, SweepSpec};
use sfo_lab::experiment::run_experiment;
use sfo_lab::report::{table_csv, write_outputs};

/// Sampling frequency offset lab for bistatic OFDM sensing.
#[derive(Parser)]
#[command(name = "sfo-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form SFO effects for one δ.
    Effects(Common),
    /// ICI and ISI limits of a configuration.
    Limits(Common),
    /// Delay and SFO accuracy bounds.
    Bounds(Common),
    /// Monte-Carlo SFO estimation on generated frames.
    Estimate(Common),
    /// Range-Doppler image of one generated frame.
    Image(Common),
    /// Runs an experiment file.
    Sweep(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// Waveform preset: table1 or desk.
    #[arg(long)]
    preset: Option<Preset>,
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// SFO in ppm.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// Reference-path SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// tito, full, phase; `image` also takes none, true and phase-residual.
    #[arg(long)]
    method: Option<Processing>,
    /// Zero-padding factor η.
    #[arg(long)]
    eta: Option<usize>,
    /// δ_max of TITO in ppm.
    #[arg(long)]
    delta_max: Option<f64>,
    /// ε of TITO.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (CSV, or PNG for `image`).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn spec(&self, kind: ExperimentKind, default_preset: Preset) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentSpec {
                name: kind.name().to_string(),
                kind,
                preset: self.preset.unwrap_or(default_preset),
                ofdm: Default::default(),
                scenario: Default::default(),
                sweep: SweepSpec { delta_ppm: vec![0.0], ..Default::default() },
                estimator: Default::default(),
                image: Default::default(),
                n_trials: 1,
                base_seed: 0,
                output: OutputSpec::default(),
            },
        };
        if self.config.is_some() {
            if let Some(p) = self.preset {
                spec.preset = p;
            }
        }
        if let Some(d) = self.delta {
            spec.sweep.delta_ppm = vec![d];
        }
        if let Some(s) = self.snr {
            spec.scenario.snr_db = s;
            spec.sweep.snr_db.clear();
        }
        if let Some(m) = self.method {
            spec.sweep.methods = vec![m.name().to_string()];
        }
        if let Some(e) = self.eta {
            spec.estimator.eta = e;
        }
        if let Some(d) = self.delta_max {
            spec.estimator.delta_max_ppm = d;
        }
        if let Some(e) = self.epsilon {
            spec.estimator.epsilon = e;
        }
        if let Some(t) = self.trials {
            spec.n_trials = t;
        }
        if let Some(s) = self.seed {
            spec.base_seed = s;
        }
        spec.validate()?;
        Ok(spec)
    }

    fn ofdm(&self) -> Result<OfdmConfig> {
        Ok(match &self.config {
            Some(path) => {
                let mut spec = ExperimentSpec::load(path)?;
                if let Some(p) = self.preset {
                    spec.preset = p;
                }
                spec.ofdm_config()
            }
            None => self.preset.unwrap_or(Preset::Table1).config(),
        })
    }
}

fn describe(cfg: &OfdmConfig) -> String {
    format!(
        "N={} M={} N_CP={} B={} MHz f_c={} GHz pilots every {} subcarriers / {} symbols",
        cfg.n_subcarriers,
        cfg.n_symbols,
        cfg.cp_len,
        cfg.bandwidth / 1e6,
        cfg.carrier_freq / 1e9,
        cfg.pilot_subc_spacing,
        cfg.pilot_sym_spacing
    )
}

fn limits(c: &Common) -> Result<()> {
    let cfg = c.ofdm()?;
    let l = sfo_limits(&cfg);
    println!("{}", describe(&cfg));
    println!("ici_limit_ppm {:.3}", l.ici_limit * 1e6);
    println!("isi_limit_ppm {:.3}", l.isi_limit * 1e6);
    Ok(())
}

fn effects(c: &Common) -> Result<()> {
    let cfg = c.ofdm()?;
    let Some(ppm) = c.delta else { bail!("effects needs --delta <ppm>") };
    let delta = ppm * 1e-6;
    let half = (cfg.n_subcarriers / 2) as i64;
    let top = cfg.n_subcarriers as i64 - half - 1;
    println!("{}", describe(&cfg));
    println!("delta_ppm {ppm}");
    println!("range_migration_m {:.4}", frame_range_migration(delta, &cfg));
    println!("doppler_shift_low_khz {:.4}", -subcarrier_freq_shift(-half, delta, &cfg) / 1e3);
    println!("doppler_shift_high_khz {:.4}", -subcarrier_freq_shift(top, delta, &cfg) / 1e3);
    println!("doppler_migration_khz {:.4}", freq_shift_migration(delta, &cfg) / 1e3);
    println!("amplitude_edge {:.6}", amplitude_modulation(-half, delta, &cfg));
    println!("phase_last_symbol_edge_rad {:.4}", phase_rotation(-half, cfg.n_symbols - 1, delta, &cfg));
    if let Some(out) = &c.out {
        let mut spec = c.spec(ExperimentKind::Effects, Preset::Table1)?;
        spec.output.csv = Some(out.clone());
        for p in write_outputs(&spec, &run_experiment(&spec)?)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

fn bounds(c: &Common) -> Result<()> {
    let cfg = c.ofdm()?;
    let snr_db = c.snr.unwrap_or(20.0);
    let eta = c.eta.unwrap_or(20);
    let m_pil = cfg.n_pilot_symbols();
    let r = bound_report(from_db(snr_db), eta, m_pil, &cfg)?;
    println!("{}", describe(&cfg));
    println!("snr_db {snr_db} eta {eta} m_pil {m_pil}");
    println!("sigma_tau_crlb_ps {:.4}", r.sigma_tau_crlb * 1e12);
    println!("sigma_tau_mle_ps {:.4}", r.sigma_tau_mle * 1e12);
    println!("sigma_delta_crlb_ppm {:.6}", r.sigma_delta_crlb * 1e6);
    println!("sigma_delta_mle_ppm {:.6}", r.sigma_delta_mle * 1e6);
    if let Some(out) = &c.out {
        let mut w = csv::Writer::from_path(out)?;
        w.write_record(["m_pil", "sigma_delta_crlb_ppm", "sigma_delta_mle_ppm"])?;
        let mut m = 2;
        while m <= m_pil {
            let r = bound_report(from_db(snr_db), eta, m, &cfg)?;
            w.write_record([m.to_string(), (r.sigma_delta_crlb * 1e6).to_string(), (r.sigma_delta_mle * 1e6).to_string()])?;
            m = if m * 2 > m_pil && m != m_pil { m_pil } else { m * 2 };
        }
        w.flush()?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}

fn simulate(c: &Common, kind: ExperimentKind) -> Result<()> {
    let mut spec = c.spec(kind, Preset::Desk)?;
    if spec.kind != kind {
        bail!("the experiment file describes a '{}' experiment; use `sweep` to run it", spec.kind.name());
    }
    if kind == ExperimentKind::Image {
        if let Some(out) = &c.out {
            spec.output.image_dir = out.parent().map(|p| p.to_path_buf()).or(Some(PathBuf::from(".")));
        }
    } else if let Some(out) = &c.out {
        spec.output.csv = Some(out.clone());
    }
    let table = run_experiment(&spec)?;
    print!("{}", table_csv(&table)?);
    if kind == ExperimentKind::Image {
        if let (Some(out), Some((_, heat))) = (&c.out, table.images.first()) {
            heat.write_png(out)?;
            eprintln!("wrote {}", out.display());
        }
        for curve in &table.curves {
            eprintln!("{} {} {} = {}", curve.axis_point, curve.method, curve.quantity, curve.value);
        }
        if c.out.is_none() {
            for p in write_outputs(&spec, &table)? {
                eprintln!("wrote {}", p.display());
            }
        }
        return Ok(());
    }
    for p in write_outputs(&spec, &table)? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Effects(c) => effects(&c),
        Command::Limits(c) => limits(&c),
        Command::Bounds(c) => bounds(&c),
        Command::Estimate(c) => simulate(&c, ExperimentKind::Estimation),
        Command::Image(c) => simulate(&c, ExperimentKind::Image),
        Command::Sweep(c) => {
            if c.config.is_none() {
                bail!("sweep needs --config <path>");
            }
            let mut spec = c.spec(ExperimentKind::Estimation, Preset::Desk)?;
            if let Some(out) = &c.out {
                spec.output.csv = Some(out.clone());
            }
            let table = run_experiment(&spec)?;
            for p in write_outputs(&spec, &table)? {
                eprintln!("wrote {}", p.display());
            }
            if spec.output.csv.is_none() {
                print!("{}", table_csv(&table)?);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
