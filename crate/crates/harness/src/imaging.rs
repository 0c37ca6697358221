//! Grayscale dB heatmaps written as PNG.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use sfo_core::radar::RadarImage;

use crate::error::{Error, Result};

/// Magnitudes in dB relative to the maximum, row-major, clipped to
/// `-dynamic_range_db`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub width: usize,
    pub height: usize,
    pub db: Vec<f64>,
    pub dynamic_range_db: f64,
}

impl Heatmap {
    /// Rows are `height` values of one column after another, i.e. the
    /// input is column-major.
    pub fn from_columns(magnitudes: &[f64], height: usize, width: usize, dynamic_range_db: f64) -> Self {
        let peak = magnitudes.iter().copied().fold(0.0f64, f64::max);
        let mut db = vec![0.0; height * width];
        for c in 0..width {
            for r in 0..height {
                db[r * width + c] = to_db(magnitudes[c * height + r], peak, dynamic_range_db);
            }
        }
        Self { width, height, db, dynamic_range_db }
    }

    /// Range on the vertical axis, Doppler on the horizontal. A non-zero
    /// crop keeps `±crop` bins around the strongest pixel.
    pub fn from_image(img: &RadarImage, crop_range: usize, crop_doppler: usize, dynamic_range_db: f64) -> Self {
        let (r0, d0) = img.argmax();
        let span = |crop: usize, n: usize, centre: usize| -> Vec<usize> {
            if crop == 0 || 2 * crop + 1 >= n {
                (0..n).collect()
            } else {
                (0..=2 * crop).map(|k| (centre + n + k - crop) % n).collect()
            }
        };
        let rows = span(crop_range, img.n_range, r0);
        let cols = span(crop_doppler, img.n_doppler, d0);
        let peak = img.get(r0, d0);
        let mut db = Vec::with_capacity(rows.len() * cols.len());
        for &r in &rows {
            for &d in &cols {
                db.push(to_db(img.get(r, d), peak, dynamic_range_db));
            }
        }
        Self { width: cols.len(), height: rows.len(), db, dynamic_range_db }
    }

    /// 8-bit grayscale, white at the maximum.
    pub fn pixels(&self) -> Vec<u8> {
        self.db
            .iter()
            .map(|&v| (255.0 * (1.0 + v / self.dynamic_range_db)).round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let mut enc = png::Encoder::new(BufWriter::new(file), self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.pixels())?;
        writer.finish()?;
        Ok(())
    }
}

fn to_db(v: f64, peak: f64, range: f64) -> f64 {
    if peak <= 0.0 || v <= 0.0 {
        return -range;
    }
    (20.0 * (v / peak).log10()).max(-range)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_input_is_transposed() {
        let h = Heatmap::from_columns(&[1.0, 0.1, 0.01, 0.0], 2, 2, 60.0);
        assert_eq!(h.db, vec![0.0, -40.0, -20.0, -60.0]);
        assert_eq!(h.pixels(), vec![255, 85, 170, 0]);
    }

    #[test]
    fn png_round_trips_its_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.png");
        let h = Heatmap::from_columns(&[1.0; 12], 3, 4, 40.0);
        h.write_png(&path).unwrap();
        let dec = png::Decoder::new(std::io::BufReader::new(File::open(&path).unwrap()));
        let reader = dec.read_info().unwrap();
        assert_eq!((reader.info().width, reader.info().height), (4, 3));
    }
}
