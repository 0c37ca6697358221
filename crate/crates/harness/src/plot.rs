//! SVG line plots of result tables.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use crate::config::{ExperimentKind, ExperimentSpec};
use crate::error::{Error, Result};
use crate::experiment::{ResultRow, ResultTable, RowCoords};

type Series = Vec<(String, Vec<(f64, f64)>)>;

fn default_x(spec: &ExperimentSpec) -> &'static str {
    match spec.kind {
        ExperimentKind::Estimation if spec.snr_axis().len() > 1 => "snr_db",
        ExperimentKind::Estimation if !spec.sweep.m_pil.is_empty() => "index",
        ExperimentKind::Sinr if spec.sweep.columns.len() > 1 => "index",
        ExperimentKind::Evm => "index",
        _ => "delta_ppm",
    }
}

fn default_y(kind: ExperimentKind) -> &'static str {
    match kind {
        ExperimentKind::Estimation => "rmse_ppm",
        ExperimentKind::Evm => "mean_evm_db",
        _ => "mean_sinr_db",
    }
}

fn metric(row: &ResultRow, name: &str) -> f64 {
    match name {
        "rmse_ppm" => row.rmse_ppm,
        "bias_ppm" => row.bias_ppm,
        "mean_mpil_used" => row.mean_mpil_used,
        "mean_evm_db" => row.mean_evm_db,
        _ => row.mean_sinr_db,
    }
}

fn coord(c: &RowCoords, name: &str) -> f64 {
    match name {
        "snr_db" => c.snr_db,
        "index" => c.index.map_or(f64::NAN, |i| i as f64),
        _ => c.delta_ppm,
    }
}

/// Series of a row-based plot, keyed by method and the non-plotted axes.
fn row_series(table: &ResultTable, x: &str, y: &str, log_y: bool) -> Series {
    let others: Vec<&str> = ["snr_db", "delta_ppm", "index"].into_iter().filter(|&a| a != x).collect();
    let varies = |a: &str| {
        let first = table.coords.first().map(|c| coord(c, a));
        table.coords.iter().any(|c| {
            let v = coord(c, a);
            first.is_some_and(|f| !(v == f || (v.is_nan() && f.is_nan())))
        })
    };
    let keys: Vec<&str> = others.into_iter().filter(|a| varies(a)).collect();
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for (row, c) in table.rows.iter().zip(&table.coords) {
        let mut label = row.method.clone();
        for k in &keys {
            label.push_str(&format!(" {k}={}", coord(c, k)));
        }
        let mut v = metric(row, y);
        if log_y {
            v = v.log10();
        }
        if v.is_finite() {
            series.entry(label).or_default().push((coord(c, x), v));
        }
    }
    series.into_iter().collect()
}

fn curve_series(table: &ResultTable, quantity: &str) -> Series {
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for c in table.curves.iter().filter(|c| c.quantity == quantity) {
        series.entry(format!("{} {}", c.method, c.axis_point)).or_default().push((c.index, c.value));
    }
    series.into_iter().collect()
}

/// Draws the default plot of a table to an SVG file.
pub fn plot_table(spec: &ExperimentSpec, table: &ResultTable, path: &Path) -> Result<()> {
    let (series, x_label, y_label) = match table.kind {
        ExperimentKind::Effects | ExperimentKind::DelayProfile => {
            let x = if table.kind == ExperimentKind::Effects { "symbol" } else { "pilot symbol" };
            (curve_series(table, "range_migration_m"), x.to_string(), "range migration (m)".to_string())
        }
        _ => {
            let x = spec.output.plot_x.as_deref().unwrap_or_else(|| default_x(spec));
            let y = spec.output.plot_y.as_deref().unwrap_or_else(|| default_y(table.kind));
            let log_y = y == "rmse_ppm";
            let y_label = if log_y { format!("log10 {y}") } else { y.to_string() };
            (row_series(table, x, y, log_y), x.to_string(), y_label)
        }
    };
    line_plot(path, &table.name, &x_label, &y_label, &series)
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Plot(e.to_string())
}

pub fn line_plot(path: &Path, title: &str, x_label: &str, y_label: &str, series: &Series) -> Result<()> {
    let points = series.iter().flat_map(|(_, p)| p.iter()).filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let pad = |a: f64, b: f64| if b - a > 0.0 { 0.05 * (b - a) } else { 0.5 };
    let (px, py) = (pad(x0, x1), pad(y0, y1));

    let root = SVGBackend::new(path, (900, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d((x0 - px)..(x1 + px), (y0 - py)..(y1 + py))
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;
    for (i, (label, pts)) in series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        chart
            .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
    }
    if !series.is_empty() && series.len() <= 24 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}
