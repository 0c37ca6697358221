//! CSV, PNG and SVG emission for a [`ResultTable`].

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::error::{Error, Result};
use crate::experiment::ResultTable;
use crate::plot::plot_table;

pub const CSV_HEADER: &str = "axis_point,method,trials,rmse_ppm,bias_ppm,mean_mpil_used,mean_sinr_db,mean_evm_db";

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
        }
        _ => Ok(()),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    Ok(())
}

/// The result table as CSV text.
pub fn table_csv(table: &ResultTable) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &table.rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

/// Path of the auxiliary curve table next to `csv`.
pub fn curves_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    csv.with_file_name(format!("{stem}_curves.csv"))
}

/// Writes every output named in the spec; returns the written paths.
pub fn write_outputs(spec: &ExperimentSpec, table: &ResultTable) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if let Some(csv) = &spec.output.csv {
        write_rows(csv, &table.rows)?;
        written.push(csv.clone());
        if !table.curves.is_empty() {
            let p = curves_path(csv);
            write_rows(&p, &table.curves)?;
            written.push(p);
        }
    }
    let image_dir = spec
        .output
        .image_dir
        .clone()
        .or_else(|| spec.output.csv.as_ref().and_then(|c| c.parent().map(Path::to_path_buf)));
    if let Some(dir) = image_dir.filter(|_| !table.images.is_empty()) {
        std::fs::create_dir_all(&dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
        for (name, heat) in &table.images {
            let p = dir.join(name);
            heat.write_png(&p)?;
            written.push(p);
        }
    }
    if let Some(plot) = &spec.output.plot {
        create_parent(plot)?;
        plot_table(spec, table, plot)?;
        written.push(plot.clone());
    }
    Ok(written)
}
