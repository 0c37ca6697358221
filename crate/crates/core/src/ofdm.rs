//! OFDM frame construction, modulation and demodulation.
//!
//! Subcarriers are indexed `n ∈ {−N/2, …, N/2−1}` and stored in row
//! `r = n + N/2`; the DFT bin of row `r` is `n mod N`. Transforms are
//! unitary (`1/√N` each way), so a unit-modulus frame has unit mean power
//! per time-domain sample and noise variance is the same in both domains.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dsp::fft;
use crate::error::{Error, Result};
use crate::SPEED_OF_LIGHT;

/// Waveform parameters. All derived quantities are methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    /// N
    pub n_subcarriers: usize,
    /// M
    pub n_symbols: usize,
    /// N_CP
    pub cp_len: usize,
    /// B, Hz
    pub bandwidth: f64,
    /// f_c, Hz
    pub carrier_freq: f64,
    /// ΔN_pil
    pub pilot_subc_spacing: usize,
    /// ΔM_pil
    pub pilot_sym_spacing: usize,
}

impl OfdmConfig {
    /// Full-scale parameters: N=2048, M=4096, N_CP=512, B=500 MHz,
    /// f_c=26.2 GHz, pilots on every 2nd subcarrier of every 4th symbol.
    pub fn table1() -> Self {
        Self {
            n_subcarriers: 2048,
            n_symbols: 4096,
            cp_len: 512,
            bandwidth: 500e6,
            carrier_freq: 26.2e9,
            pilot_subc_spacing: 2,
            pilot_sym_spacing: 4,
        }
    }

    /// Reduced parameters for quick runs: N=M=512, N_CP=128.
    pub fn desk() -> Self {
        Self { n_subcarriers: 512, n_symbols: 512, cp_len: 128, ..Self::table1() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_subcarriers == 0 || self.n_symbols == 0 {
            return bad("N and M must be at least 1".into());
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return bad(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.carrier_freq > 0.0 && self.carrier_freq.is_finite()) {
            return bad(format!("carrier frequency must be positive, got {}", self.carrier_freq));
        }
        if self.pilot_subc_spacing == 0 || self.pilot_subc_spacing > self.n_subcarriers {
            return bad(format!(
                "pilot subcarrier spacing {} outside [1, {}]",
                self.pilot_subc_spacing, self.n_subcarriers
            ));
        }
        if self.pilot_sym_spacing == 0 || self.pilot_sym_spacing > self.n_symbols {
            return bad(format!(
                "pilot symbol spacing {} outside [1, {}]",
                self.pilot_sym_spacing, self.n_symbols
            ));
        }
        Ok(())
    }

    /// Δf = B/N
    pub fn subcarrier_spacing(&self) -> f64 {
        self.bandwidth / self.n_subcarriers as f64
    }

    /// T_s = 1/B
    pub fn sample_period(&self) -> f64 {
        1.0 / self.bandwidth
    }

    /// λ_0 = c_0/f_c
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// N + N_CP
    pub fn symbol_len(&self) -> usize {
        self.n_subcarriers + self.cp_len
    }

    /// M·(N + N_CP)
    pub fn frame_len(&self) -> usize {
        self.n_symbols * self.symbol_len()
    }

    /// (N + N_CP)·T_s
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 * self.sample_period()
    }

    /// Spacing between pilot symbols, ΔM_pil·(N + N_CP)·T_s.
    pub fn pilot_symbol_period(&self) -> f64 {
        self.pilot_sym_spacing as f64 * self.symbol_duration()
    }

    /// N_pil: pilot rows 0, ΔN_pil, 2ΔN_pil, … that fit in the frame.
    pub fn n_pilot_subcarriers(&self) -> usize {
        (self.n_subcarriers - 1) / self.pilot_subc_spacing + 1
    }

    /// M_pil: pilot symbols 0, ΔM_pil, 2ΔM_pil, … that fit in the frame.
    pub fn n_pilot_symbols(&self) -> usize {
        (self.n_symbols - 1) / self.pilot_sym_spacing + 1
    }

    /// Signed subcarrier index of storage row `r`.
    pub fn subcarrier_index(&self, row: usize) -> i64 {
        row as i64 - (self.n_subcarriers / 2) as i64
    }

    /// Storage row of signed subcarrier index `n`.
    pub fn row_of(&self, n: i64) -> usize {
        (n + (self.n_subcarriers / 2) as i64) as usize
    }

    /// DFT bin holding storage row `r`.
    pub fn bin_of_row(&self, row: usize) -> usize {
        let n = self.n_subcarriers;
        (row + n - n / 2) % n
    }

    /// Storage row held in DFT bin `k`.
    pub fn row_of_bin(&self, bin: usize) -> usize {
        let n = self.n_subcarriers;
        (bin + n / 2) % n
    }

    /// Index of the first useful (post-CP) sample of symbol `m`:
    /// m·(N + N_CP) + N_CP.
    pub fn useful_start(&self, m: usize) -> usize {
        m * self.symbol_len() + self.cp_len
    }
}

/// Column-major complex matrix. Used for N×M frames and for smaller
/// matrices such as pilot CFRs and delay profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl FrameGrid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_columns(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[col * self.rows + row] = value;
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn columns(&self) -> std::slice::Chunks<'_, Complex64> {
        self.data.chunks(self.rows.max(1))
    }

    pub fn par_columns_mut(&mut self) -> rayon::slice::ChunksMut<'_, Complex64> {
        let rows = self.rows.max(1);
        self.data.par_chunks_mut(rows)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.data.len() as f64
    }

    fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}×{cols}"),
                got: format!("{}×{}", self.rows, self.cols),
            });
        }
        Ok(())
    }

    /// Fails unless the grid is `cfg.n_subcarriers × cfg.n_symbols`.
    pub fn check_frame(&self, cfg: &OfdmConfig) -> Result<()> {
        self.check_shape(cfg.n_subcarriers, cfg.n_symbols)
    }
}

/// Pilot lattice and values.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotGrid {
    /// Storage rows carrying pilots.
    pub subcarrier_rows: Vec<usize>,
    /// Symbol indices carrying pilots.
    pub symbol_indices: Vec<usize>,
    /// Pilot values, `N_pil × M_pil`.
    pub values: FrameGrid,
    /// Dimensions of the parent frame.
    pub frame_rows: usize,
    pub frame_cols: usize,
}

impl PilotGrid {
    pub fn n_subcarriers(&self) -> usize {
        self.subcarrier_rows.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.symbol_indices.len()
    }

    pub fn value(&self, k: usize, m_pil: usize) -> Complex64 {
        self.values.get(k, m_pil)
    }
}

/// Time-domain sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub samples: Vec<Complex64>,
    /// Hz
    pub sample_rate: f64,
}

impl SampleStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

const QPSK_AMP: f64 = std::f64::consts::FRAC_1_SQRT_2;

fn qpsk(bits: u64) -> Complex64 {
    let re = if bits & 1 == 0 { QPSK_AMP } else { -QPSK_AMP };
    let im = if bits & 2 == 0 { QPSK_AMP } else { -QPSK_AMP };
    Complex64::new(re, im)
}

/// Uniform pilot lattice with seeded unit-modulus QPSK values.
pub fn build_pilot_grid(cfg: &OfdmConfig, seed: u64) -> Result<PilotGrid> {
    cfg.validate()?;
    let subcarrier_rows: Vec<usize> =
        (0..cfg.n_pilot_subcarriers()).map(|k| k * cfg.pilot_subc_spacing).collect();
    let symbol_indices: Vec<usize> =
        (0..cfg.n_pilot_symbols()).map(|m| m * cfg.pilot_sym_spacing).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = 0u64;
    let mut left = 0;
    let values = FrameGrid::from_fn(subcarrier_rows.len(), symbol_indices.len(), |_, _| {
        if left == 0 {
            pool = rng.next_u64();
            left = 32;
        }
        let sym = qpsk(pool & 3);
        pool >>= 2;
        left -= 1;
        sym
    });
    Ok(PilotGrid {
        subcarrier_rows,
        symbol_indices,
        values,
        frame_rows: cfg.n_subcarriers,
        frame_cols: cfg.n_symbols,
    })
}

fn check_pilots(cfg: &OfdmConfig, pilots: &PilotGrid) -> Result<()> {
    if pilots.frame_rows != cfg.n_subcarriers || pilots.frame_cols != cfg.n_symbols {
        return Err(Error::DimensionMismatch {
            expected: format!("{}×{} frame", cfg.n_subcarriers, cfg.n_symbols),
            got: format!("pilots for {}×{}", pilots.frame_rows, pilots.frame_cols),
        });
    }
    if pilots.subcarrier_rows.iter().any(|&r| r >= cfg.n_subcarriers)
        || pilots.symbol_indices.iter().any(|&m| m >= cfg.n_symbols)
    {
        return Err(Error::DimensionMismatch {
            expected: "pilot indices inside the frame".into(),
            got: "out-of-range pilot index".into(),
        });
    }
    Ok(())
}

/// Transmit frame: pilots at their lattice cells, seeded QPSK elsewhere.
pub fn generate_frame(cfg: &OfdmConfig, pilots: &PilotGrid, payload_seed: u64) -> Result<FrameGrid> {
    cfg.validate()?;
    check_pilots(cfg, pilots)?;
    let n = cfg.n_subcarriers;
    let mut frame = FrameGrid::zeros(n, cfg.n_symbols);
    let mut is_pilot_row = vec![false; n];
    for &r in &pilots.subcarrier_rows {
        is_pilot_row[r] = true;
    }
    let mut pilot_col = vec![None; cfg.n_symbols];
    for (j, &m) in pilots.symbol_indices.iter().enumerate() {
        pilot_col[m] = Some(j);
    }
    frame.par_columns_mut().enumerate().for_each(|(m, col)| {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::dsp::derive_seed(&[payload_seed, m as u64]));
        let mut pool = 0u64;
        let mut left = 0;
        for x in col.iter_mut() {
            if left == 0 {
                pool = rng.next_u64();
                left = 32;
            }
            *x = qpsk(pool & 3);
            pool >>= 2;
            left -= 1;
        }
        if let Some(j) = pilot_col[m] {
            for (k, &r) in pilots.subcarrier_rows.iter().enumerate() {
                col[r] = pilots.value(k, j);
            }
        }
    });
    Ok(frame)
}

/// Unitary IDFT of one symbol column into `out` (length N), fftshift order.
pub fn modulate_symbol(cfg: &OfdmConfig, column: &[Complex64], out: &mut [Complex64]) {
    let n = cfg.n_subcarriers;
    for (r, &x) in column.iter().enumerate() {
        out[cfg.bin_of_row(r)] = x;
    }
    fft::inverse(n).process(out);
    let scale = 1.0 / (n as f64).sqrt();
    for v in out.iter_mut() {
        *v *= scale;
    }
}

/// Unitary DFT of N useful samples into a symbol column in storage order.
pub fn demodulate_symbol(cfg: &OfdmConfig, samples: &[Complex64], column: &mut [Complex64]) {
    let n = cfg.n_subcarriers;
    let mut buf = samples.to_vec();
    fft::forward(n).process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    for (bin, v) in buf.iter().enumerate() {
        column[cfg.row_of_bin(bin)] = v * scale;
    }
}

/// Per-symbol IDFT, CP insertion and serialisation.
pub fn modulate(frame: &FrameGrid, cfg: &OfdmConfig) -> Result<SampleStream> {
    cfg.validate()?;
    frame.check_frame(cfg)?;
    let n = cfg.n_subcarriers;
    let ncp = cfg.cp_len;
    let mut samples = vec![Complex64::new(0.0, 0.0); cfg.frame_len()];
    samples
        .par_chunks_mut(cfg.symbol_len())
        .zip(frame.as_slice().par_chunks(n))
        .for_each(|(block, col)| {
            let (cp, body) = block.split_at_mut(ncp);
            modulate_symbol(cfg, col, body);
            cp.copy_from_slice(&body[n - ncp..]);
        });
    Ok(SampleStream { samples, sample_rate: cfg.bandwidth })
}

/// CP removal and per-symbol DFT with the nominal symbol timing.
pub fn demodulate(stream: &SampleStream, cfg: &OfdmConfig) -> Result<FrameGrid> {
    cfg.validate()?;
    let needed = cfg.frame_len();
    if stream.len() < needed {
        return Err(Error::StreamTooShort { needed, available: stream.len() });
    }
    let offsets = vec![0i64; cfg.n_symbols];
    demodulate_with_offsets(stream, cfg, &offsets)
}

/// Demodulation with the FFT window of symbol `m` moved by `offsets[m]`
/// samples. Samples outside the stream read as zero.
pub fn demodulate_with_offsets(stream: &SampleStream, cfg: &OfdmConfig, offsets: &[i64]) -> Result<FrameGrid> {
    cfg.validate()?;
    if offsets.len() != cfg.n_symbols {
        return Err(Error::DimensionMismatch {
            expected: format!("{} offsets", cfg.n_symbols),
            got: format!("{} offsets", offsets.len()),
        });
    }
    let n = cfg.n_subcarriers;
    let mut grid = FrameGrid::zeros(n, cfg.n_symbols);
    let len = stream.len() as i64;
    grid.par_columns_mut().enumerate().for_each(|(m, col)| {
        let start = cfg.useful_start(m) as i64 + offsets[m];
        let window: Vec<Complex64> = (start..start + n as i64)
            .map(|s| {
                if s >= 0 && s < len {
                    stream.samples[s as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        demodulate_symbol(cfg, &window, col);
    });
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: 16,
            n_symbols: 6,
            cp_len: 4,
            pilot_subc_spacing: 2,
            pilot_sym_spacing: 2,
            ..OfdmConfig::table1()
        }
    }

    #[test]
    fn table1_counts() {
        let cfg = OfdmConfig::table1();
        assert_eq!(cfg.n_pilot_subcarriers(), 1024);
        assert_eq!(cfg.n_pilot_symbols(), 1024);
        assert_eq!(cfg.frame_len(), 10_485_760);
        assert!((cfg.subcarrier_spacing() - 244_140.625).abs() < 1e-9);
    }

    #[test]
    fn pilot_cells_for_tiny_lattice() {
        let cfg = OfdmConfig { n_subcarriers: 4, n_symbols: 2, cp_len: 1, pilot_subc_spacing: 2, pilot_sym_spacing: 1, ..small() };
        let pilots = build_pilot_grid(&cfg, 3).unwrap();
        assert_eq!(pilots.subcarrier_rows, vec![0, 2]);
        assert_eq!(pilots.symbol_indices, vec![0, 1]);
        let frame = generate_frame(&cfg, &pilots, 9).unwrap();
        for (j, &m) in pilots.symbol_indices.iter().enumerate() {
            for (k, &r) in pilots.subcarrier_rows.iter().enumerate() {
                assert_eq!(frame.get(r, m), pilots.value(k, j));
            }
        }
    }

    #[test]
    fn spacing_equal_to_n_gives_one_pilot() {
        let cfg = OfdmConfig { n_subcarriers: 8, pilot_subc_spacing: 8, ..small() };
        assert_eq!(cfg.n_pilot_subcarriers(), 1);
    }

    #[test]
    fn frame_is_unit_modulus_and_deterministic() {
        let cfg = small();
        let pilots = build_pilot_grid(&cfg, 1).unwrap();
        let a = generate_frame(&cfg, &pilots, 5).unwrap();
        let b = generate_frame(&cfg, &pilots, 5).unwrap();
        let c = generate_frame(&cfg, &pilots, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.as_slice().iter().all(|x| (x.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn dc_bin_gives_constant_signal() {
        let cfg = OfdmConfig { n_symbols: 1, pilot_sym_spacing: 1, ..small() };
        let mut frame = FrameGrid::zeros(16, 1);
        frame.set(cfg.row_of(0), 0, Complex64::new(1.0, 0.0));
        let s = modulate(&frame, &cfg).unwrap();
        for v in &s.samples {
            assert!((v - Complex64::new(0.25, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn round_trip_and_zero_stream() {
        let cfg = small();
        let pilots = build_pilot_grid(&cfg, 1).unwrap();
        let x = generate_frame(&cfg, &pilots, 2).unwrap();
        let s = modulate(&x, &cfg).unwrap();
        assert_eq!(s.len(), cfg.frame_len());
        let y = demodulate(&s, &cfg).unwrap();
        for (a, b) in x.as_slice().iter().zip(y.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
        let z = SampleStream { samples: vec![Complex64::new(0.0, 0.0); cfg.frame_len()], sample_rate: 1.0 };
        assert!(demodulate(&z, &cfg).unwrap().as_slice().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn short_stream_is_rejected() {
        let cfg = small();
        let s = SampleStream { samples: vec![Complex64::new(0.0, 0.0); 10], sample_rate: 1.0 };
        assert!(matches!(demodulate(&s, &cfg), Err(Error::StreamTooShort { .. })));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(OfdmConfig { n_subcarriers: 0, ..small() }.validate().is_err());
        assert!(OfdmConfig { pilot_subc_spacing: 0, ..small() }.validate().is_err());
        assert!(OfdmConfig { pilot_sym_spacing: 7, ..small() }.validate().is_err());
        assert!(OfdmConfig { bandwidth: -1.0, ..small() }.validate().is_err());
    }
}
