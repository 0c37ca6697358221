//! Monte-Carlo execution of an [`ExperimentSpec`].
//!
//! Every (axis point, trial) pair is an independent job seeded from
//! `(base_seed, point, trial)`. Jobs run on a rayon pool and are reduced
//! in job order, so the table does not depend on scheduling.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use sfo_core::analysis::{
    amplitude_modulation, bound_report, delay_migration, phase_rotation, subcarrier_freq_shift,
};
use sfo_core::estimation::{
    extract_pilot_cfr, ls_sfo, tito_select, DelayTracker, EstimatorParams, Method, ProfileBuilder, ProfileGeometry,
};
use sfo_core::radar::{peak_report, peak_sinr_db, range_doppler_image, recenter_on_reference, strongest_peaks, Padding};
use sfo_core::{from_db, SPEED_OF_LIGHT};

use crate::config::{parse_window, ExperimentKind, ExperimentSpec, Processing};
use crate::error::Result;
use crate::imaging::Heatmap;
use crate::pipeline::{scenario, Setup, TrialRun, TrialSeeds};

/// One line of the result CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub axis_point: String,
    pub method: String,
    pub trials: usize,
    pub rmse_ppm: f64,
    pub bias_ppm: f64,
    pub mean_mpil_used: f64,
    pub mean_sinr_db: f64,
    pub mean_evm_db: f64,
}

/// Numeric coordinates of a row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowCoords {
    pub snr_db: f64,
    pub delta_ppm: f64,
    pub index: Option<usize>,
}

/// Auxiliary curve sample (effects, tracks, bounds, peak positions).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub quantity: String,
    pub axis_point: String,
    pub method: String,
    pub index: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub name: String,
    pub kind: ExperimentKind,
    pub rows: Vec<ResultRow>,
    pub coords: Vec<RowCoords>,
    pub curves: Vec<CurveRow>,
    pub images: Vec<(String, Heatmap)>,
}

impl ResultTable {
    pub fn find(&self, axis_point: &str, method: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.axis_point == axis_point && r.method == method)
    }
}

/// Name of the sub-index axis of a kind, if any.
fn index_name(spec: &ExperimentSpec) -> Option<&'static str> {
    match spec.kind {
        ExperimentKind::Evm => Some("m"),
        ExperimentKind::Sinr => Some("column"),
        ExperimentKind::Estimation if !spec.sweep.m_pil.is_empty() => Some("m_pil"),
        _ => None,
    }
}

fn index_values(spec: &ExperimentSpec) -> Vec<Option<usize>> {
    let v = match spec.kind {
        ExperimentKind::Evm => &spec.sweep.symbols,
        ExperimentKind::Sinr => &spec.sweep.columns,
        ExperimentKind::Estimation => &spec.sweep.m_pil,
        _ => return vec![None],
    };
    if v.is_empty() {
        vec![None]
    } else {
        v.iter().map(|&i| Some(i)).collect()
    }
}

pub fn axis_label(spec: &ExperimentSpec, c: &RowCoords) -> String {
    let mut s = if spec.kind == ExperimentKind::Effects {
        format!("delta_ppm={}", c.delta_ppm)
    } else {
        format!("snr_db={};delta_ppm={}", c.snr_db, c.delta_ppm)
    };
    if let (Some(name), Some(i)) = (index_name(spec), c.index) {
        s.push_str(&format!(";{name}={i}"));
    }
    s
}

/// Per-trial contribution to one (index, method) cell.
#[derive(Debug, Clone, Copy, Default)]
struct Sample {
    err_ppm: Option<f64>,
    mpil: Option<f64>,
    sinr_db: Option<f64>,
    evm: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Acc {
    n: usize,
    err_n: usize,
    err_sum: f64,
    err_sq: f64,
    mpil_n: usize,
    mpil_sum: f64,
    sinr_n: usize,
    sinr_sum: f64,
    evm_err: f64,
    evm_pow: f64,
}

impl Acc {
    fn add(&mut self, s: &Sample) {
        self.n += 1;
        if let Some(e) = s.err_ppm {
            self.err_n += 1;
            self.err_sum += e;
            self.err_sq += e * e;
        }
        if let Some(m) = s.mpil {
            self.mpil_n += 1;
            self.mpil_sum += m;
        }
        if let Some(v) = s.sinr_db.filter(|v| v.is_finite()) {
            self.sinr_n += 1;
            self.sinr_sum += v;
        }
        if let Some((e, p)) = s.evm {
            self.evm_err += e;
            self.evm_pow += p;
        }
    }

    fn mean(sum: f64, n: usize) -> f64 {
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }

    fn row(&self, axis_point: String, method: String) -> ResultRow {
        let evm = if self.evm_pow > 0.0 {
            10.0 * (self.evm_err / self.evm_pow).max(1e-20).log10()
        } else {
            f64::NAN
        };
        ResultRow {
            axis_point,
            method,
            trials: self.n,
            rmse_ppm: Self::mean(self.err_sq, self.err_n).sqrt(),
            bias_ppm: Self::mean(self.err_sum, self.err_n),
            mean_mpil_used: Self::mean(self.mpil_sum, self.mpil_n),
            mean_sinr_db: Self::mean(self.sinr_sum, self.sinr_n),
            mean_evm_db: evm,
        }
    }
}

#[derive(Default)]
struct TrialOutput {
    /// Indexed by `index * n_methods + method`.
    samples: Vec<Sample>,
    curves: Vec<CurveRow>,
    images: Vec<(String, Heatmap)>,
}

struct Context<'a> {
    spec: &'a ExperimentSpec,
    setup: Setup,
    params: EstimatorParams,
    processing: Vec<Processing>,
    indices: Vec<Option<usize>>,
    points: Vec<RowCoords>,
}

/// Runs `f` on a pool capped by `SFO_LAB_THREADS` when set.
pub fn with_thread_cap<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var("SFO_LAB_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    match cap.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

/// Runs the experiment and returns its result table. Nothing is written.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let cfg = spec.ofdm_config();
    if spec.kind == ExperimentKind::Effects {
        return Ok(effects_table(spec));
    }
    let ctx = Context {
        spec,
        setup: Setup::new(cfg, spec.base_seed)?,
        params: spec.estimator.params()?,
        processing: spec.processing()?,
        indices: index_values(spec),
        points: spec
            .snr_axis()
            .iter()
            .flat_map(|&snr_db| spec.sweep.delta_ppm.iter().map(move |&delta_ppm| RowCoords { snr_db, delta_ppm, index: None }))
            .collect(),
    };
    let jobs: Vec<(usize, usize)> =
        (0..ctx.points.len()).flat_map(|p| (0..spec.n_trials).map(move |t| (p, t))).collect();
    let outputs: Vec<Result<TrialOutput>> =
        with_thread_cap(|| jobs.par_iter().map(|&(p, t)| run_trial(&ctx, p, t)).collect());

    let n_cells = ctx.indices.len() * ctx.processing.len();
    let mut accs = vec![Acc::default(); ctx.points.len() * n_cells];
    let mut curves = Vec::new();
    let mut images = Vec::new();
    for (&(p, _), out) in jobs.iter().zip(outputs) {
        let out = out?;
        for (c, s) in out.samples.iter().enumerate() {
            accs[p * n_cells + c].add(s);
        }
        curves.extend(out.curves);
        images.extend(out.images);
    }

    let mut rows = Vec::new();
    let mut coords = Vec::new();
    for (p, point) in ctx.points.iter().enumerate() {
        for (i, &index) in ctx.indices.iter().enumerate() {
            let c = RowCoords { index, ..*point };
            for (k, proc) in ctx.processing.iter().enumerate() {
                let acc = &accs[p * n_cells + i * ctx.processing.len() + k];
                rows.push(acc.row(axis_label(spec, &c), proc.name().to_string()));
                coords.push(c);
            }
        }
    }
    if spec.kind == ExperimentKind::Estimation {
        curves.extend(bound_curves(&ctx)?);
    }
    Ok(ResultTable { name: spec.name.clone(), kind: spec.kind, rows, coords, curves, images })
}

fn run_trial(ctx: &Context, p: usize, trial: usize) -> Result<TrialOutput> {
    let spec = ctx.spec;
    let point = ctx.points[p];
    let seeds = TrialSeeds::derive(spec.base_seed, p as u64, trial as u64);
    let frame = ctx.setup.frame(seeds.payload)?;
    let delta = point.delta_ppm * 1e-6;
    let sc = scenario(&spec.scenario, delta, point.snr_db, seeds.noise);
    let run = TrialRun::new(&ctx.setup, &frame, &sc, ctx.params)?;
    let label = axis_label(spec, &point);
    let mut out = TrialOutput { samples: vec![Sample::default(); ctx.indices.len() * ctx.processing.len()], ..Default::default() };
    match spec.kind {
        ExperimentKind::Estimation => estimation_trial(ctx, &run, delta, &mut out)?,
        ExperimentKind::Sinr => sinr_trial(ctx, &run, &mut out)?,
        ExperimentKind::Evm => evm_trial(ctx, &run, &mut out)?,
        ExperimentKind::Image => image_trial(ctx, &run, &label, trial, &mut out)?,
        ExperimentKind::DelayProfile => profile_trial(ctx, &run, delta, &label, trial, &mut out)?,
        ExperimentKind::Effects => unreachable!("effects are analytic"),
    }
    Ok(out)
}

fn estimation_trial(ctx: &Context, run: &TrialRun, delta: f64, out: &mut TrialOutput) -> Result<()> {
    let n_proc = ctx.processing.len();
    let cfg = run.cfg();
    for (k, proc) in ctx.processing.iter().enumerate() {
        let Some(method) = proc.estimator() else { continue };
        let est = run.estimate(method)?;
        let sinr = est.track.as_ref().and_then(|t| t.peak_sinr_db.first().copied());
        for (i, index) in ctx.indices.iter().enumerate() {
            let (delta_hat, m_used) = match (index, &est.track) {
                (Some(m), Some(track)) => {
                    let m_used = match method {
                        Method::Tito => tito_select(track, ctx.params.delta_max, ctx.params.epsilon, cfg)?.min(*m),
                        _ => *m,
                    };
                    (ls_sfo(track, m_used, cfg)?, m_used)
                }
                _ => (est.delta_hat, est.m_pil_used),
            };
            out.samples[i * n_proc + k] = Sample {
                err_ppm: Some((delta_hat - delta) * 1e6),
                mpil: Some(m_used as f64),
                sinr_db: sinr,
                evm: None,
            };
        }
    }
    Ok(())
}

fn profile_builder(ctx: &Context) -> Result<ProfileBuilder> {
    let geometry = ProfileGeometry::new(ctx.setup.pilots.n_subcarriers(), ctx.params.eta, ctx.params.window, &ctx.setup.cfg)?;
    Ok(ProfileBuilder::new(geometry))
}

fn sinr_trial(ctx: &Context, run: &TrialRun, out: &mut TrialOutput) -> Result<()> {
    let pilots = &ctx.setup.pilots;
    let columns: Vec<usize> = ctx.indices.iter().map(|j| pilots.symbol_indices[j.unwrap_or(0)]).collect();
    let builder = profile_builder(ctx)?;
    let geometry = *builder.geometry();
    let lobe = geometry.mainlobe_half_width().ceil() as usize;
    let n_proc = ctx.processing.len();
    let mut col = vec![Complex64::new(0.0, 0.0); geometry.len];
    for (k, &proc) in ctx.processing.iter().enumerate() {
        let (grid, _) = run.processed_grid(proc, &columns)?;
        let cfr = extract_pilot_cfr(&grid, pilots)?;
        for (i, index) in ctx.indices.iter().enumerate() {
            builder.column(cfr.column(index.unwrap_or(0)), &mut col);
            let power: Vec<f64> = col.iter().map(|c| c.norm_sqr()).collect();
            let peak = argmax(&power);
            out.samples[i * n_proc + k] = Sample { sinr_db: Some(peak_sinr_db(&power, peak, lobe)?), ..Default::default() };
        }
    }
    Ok(())
}

fn evm_trial(ctx: &Context, run: &TrialRun, out: &mut TrialOutput) -> Result<()> {
    let symbols: Vec<usize> = ctx.indices.iter().map(|m| m.unwrap_or(0)).collect();
    let n_proc = ctx.processing.len();
    for (k, &proc) in ctx.processing.iter().enumerate() {
        let (grid, est) = run.processed_grid(proc, &symbols)?;
        for (i, &m) in symbols.iter().enumerate() {
            let (e, p) = error_power(grid.column(m), run.frame().column(m));
            out.samples[i * n_proc + k] = Sample {
                err_ppm: est.as_ref().map(|e| (e.delta_hat - run.delta()) * 1e6),
                evm: Some((e, p)),
                ..Default::default()
            };
        }
    }
    Ok(())
}

fn image_trial(ctx: &Context, run: &TrialRun, label: &str, trial: usize, out: &mut TrialOutput) -> Result<()> {
    let cfg = run.cfg();
    let img_spec = &ctx.spec.image;
    let window = parse_window(&img_spec.window)?;
    let padding = Padding { range: img_spec.padding_range, doppler: img_spec.padding_doppler };
    let all: Vec<usize> = (0..cfg.n_symbols).collect();
    let expect_target = ctx.spec.scenario.target.is_some();
    for (k, &proc) in ctx.processing.iter().enumerate() {
        let (grid, est) = run.processed_grid(proc, &all)?;
        let evm = (!expect_target).then(|| error_power(grid.as_slice(), run.frame().as_slice()));
        let mut img = range_doppler_image(&grid, run.frame(), cfg, window, padding)?;
        if img_spec.recenter {
            img = recenter_on_reference(&img);
        }
        let peaks = strongest_peaks(&img, if expect_target { 2 } else { 1 })?;
        let reference = peak_report(&img, peaks[0].range_bin, peaks[0].doppler_bin)?;
        out.samples[k] = Sample {
            err_ppm: est.as_ref().map(|e| (e.delta_hat - run.delta()) * 1e6),
            mpil: est.as_ref().map(|e| e.m_pil_used as f64),
            sinr_db: Some(reference.sinr_db),
            evm,
        };
        for (name, pk) in ["reference", "target"].iter().zip(&peaks) {
            for (q, v) in [("range_m", pk.range_m), ("doppler_hz", pk.doppler_hz), ("magnitude_db", pk.magnitude_db), ("sinr_db", pk.sinr_db)] {
                out.curves.push(CurveRow {
                    quantity: format!("{name}_{q}"),
                    axis_point: label.to_string(),
                    method: proc.name().to_string(),
                    index: trial as f64,
                    value: v,
                });
            }
        }
        if trial == 0 {
            let heat = Heatmap::from_image(&img, img_spec.crop_range, img_spec.crop_doppler, img_spec.dynamic_range_db);
            out.images.push((format!("{}_{}_{}.png", ctx.spec.name, file_label(label), proc.name()), heat));
        }
    }
    Ok(())
}

/// Delay rows of a profile heatmap; taller crops are max-pooled.
const MAX_PROFILE_ROWS: usize = 2048;

fn profile_trial(ctx: &Context, run: &TrialRun, delta: f64, label: &str, trial: usize, out: &mut TrialOutput) -> Result<()> {
    let cfg = run.cfg();
    let pilots = &ctx.setup.pilots;
    let builder = profile_builder(ctx)?;
    let g = *builder.geometry();
    let lobe = g.mainlobe_half_width().ceil() as i64;
    let frame_delay = delay_migration(cfg.n_symbols, delta, cfg);
    let mig_bins = (frame_delay / g.bin_resolution).abs().ceil() as i64;
    let margin = 4 * lobe + 8;
    let (lo, hi) = if delta >= 0.0 { (-margin, mig_bins + margin) } else { (-mig_bins - margin, margin) };
    let span = ((hi - lo + 1) as usize).min(g.len);
    let lo = if span == g.len { 0 } else { lo };
    let pool = span.div_ceil(MAX_PROFILE_ROWS) as i64;
    let rows = span.div_ceil(pool as usize);
    let mut col = vec![Complex64::new(0.0, 0.0); g.len];
    for (k, &proc) in ctx.processing.iter().enumerate() {
        let (grid, _) = run.processed_grid(proc, &pilots.symbol_indices)?;
        let cfr = extract_pilot_cfr(&grid, pilots)?;
        let mut tracker = DelayTracker::new(g, ctx.params.tracker);
        let mut crop = Vec::with_capacity(rows * cfr.cols());
        for j in 0..cfr.cols() {
            builder.column(cfr.column(j), &mut col);
            tracker.push(&col);
            let at = |r: i64| col[(lo + r).rem_euclid(g.len as i64) as usize].norm();
            crop.extend((0..rows as i64).map(|q| (q * pool..((q + 1) * pool).min(span as i64)).map(at).fold(0.0, f64::max)));
        }
        let track = tracker.finish();
        let n = track.len() as f64;
        out.samples[k] = Sample {
            sinr_db: Some(track.peak_sinr_db.iter().sum::<f64>() / n),
            ..Default::default()
        };
        if trial == 0 {
            for (j, (&m, &s)) in track.migrations.iter().zip(&track.peak_sinr_db).enumerate() {
                for (q, v) in [("range_migration_m", m * SPEED_OF_LIGHT), ("peak_sinr_db", s)] {
                    out.curves.push(CurveRow {
                        quantity: q.into(),
                        axis_point: label.to_string(),
                        method: proc.name().to_string(),
                        index: j as f64,
                        value: v,
                    });
                }
            }
            let heat = Heatmap::from_columns(&crop, rows, cfr.cols(), ctx.spec.image.dynamic_range_db);
            out.images.push((format!("{}_{}_{}.png", ctx.spec.name, file_label(label), proc.name()), heat));
        }
    }
    Ok(())
}

fn bound_curves(ctx: &Context) -> Result<Vec<CurveRow>> {
    let cfg = &ctx.setup.cfg;
    let mut curves = Vec::new();
    for point in &ctx.points {
        for index in &ctx.indices {
            let m_used = index.unwrap_or(cfg.n_pilot_symbols());
            let c = RowCoords { index: *index, ..*point };
            let r = bound_report(from_db(point.snr_db), ctx.params.eta, m_used, cfg)?;
            for (q, v) in [("crlb_ppm", r.sigma_delta_crlb), ("mle_bound_ppm", r.sigma_delta_mle)] {
                curves.push(CurveRow {
                    quantity: q.into(),
                    axis_point: axis_label(ctx.spec, &c),
                    method: "bound".into(),
                    index: m_used as f64,
                    value: v * 1e6,
                });
            }
        }
    }
    Ok(curves)
}

/// Closed-form SFO effects; one row per δ, curves per subcarrier/symbol.
fn effects_table(spec: &ExperimentSpec) -> ResultTable {
    let cfg = spec.ofdm_config();
    let half = (cfg.n_subcarriers / 2) as i64;
    let subcarriers: Vec<i64> = (-half..cfg.n_subcarriers as i64 - half).collect();
    let last = cfg.n_symbols - 1;
    let mut rows = Vec::new();
    let mut coords = Vec::new();
    let mut curves = Vec::new();
    for &ppm in &spec.sweep.delta_ppm {
        let delta = ppm * 1e-6;
        let c = RowCoords { snr_db: f64::NAN, delta_ppm: ppm, index: None };
        let label = axis_label(spec, &c);
        rows.push(Acc { n: 1, ..Default::default() }.row(label.clone(), Processing::Uncorrected.name().into()));
        coords.push(c);
        let mut push = |q: &str, index: f64, value: f64| {
            curves.push(CurveRow { quantity: q.into(), axis_point: label.clone(), method: "analytic".into(), index, value })
        };
        for &n in &subcarriers {
            push("amplitude", n as f64, amplitude_modulation(n, delta, &cfg));
            push("phase_first_rad", n as f64, phase_rotation(n, 0, delta, &cfg));
            push("phase_last_rad", n as f64, phase_rotation(n, last, delta, &cfg));
            push("freq_shift_hz", n as f64, subcarrier_freq_shift(n, delta, &cfg));
        }
        for m in 0..=cfg.n_symbols {
            push("range_migration_m", m as f64, SPEED_OF_LIGHT * delay_migration(m, delta, &cfg));
        }
    }
    ResultTable { name: spec.name.clone(), kind: spec.kind, rows, coords, curves, images: Vec::new() }
}

fn argmax(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b]).then(b.cmp(&a))).unwrap_or(0)
}

fn error_power(rx: &[Complex64], reference: &[Complex64]) -> (f64, f64) {
    rx.iter().zip(reference).fold((0.0, 0.0), |(e, p), (a, b)| (e + (a - b).norm_sqr(), p + b.norm_sqr()))
}

fn file_label(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}
