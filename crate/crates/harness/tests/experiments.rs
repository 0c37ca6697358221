use std::path::{Path, PathBuf};

use sfo_lab::config::{ExperimentKind, ExperimentSpec, OfdmOverrides, Preset};
use sfo_lab::experiment::run_experiment;
use sfo_lab::report::{table_csv, write_outputs, CSV_HEADER};

fn spec(text: &str) -> ExperimentSpec {
    ExperimentSpec::from_toml(text).unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn identical_seed_gives_identical_csv_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
        name = "det"
        kind = "estimation"
        n_trials = 1
        base_seed = 42
        [sweep]
        delta_ppm = [50.0, -120.0]
        snr_db = [10.0, 20.0]
    "#;
    let mut bytes = Vec::new();
    for run in 0..2 {
        let mut s = spec(text);
        s.output.csv = Some(dir.path().join(format!("run{run}.csv")));
        write_outputs(&s, &run_experiment(&s).unwrap()).unwrap();
        bytes.push(std::fs::read(s.output.csv.unwrap()).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
    let text = String::from_utf8(bytes[0].clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(text.lines().count(), 1 + 4 * 3);
}

#[test]
fn results_do_not_depend_on_the_pool_size() {
    let s = spec(
        r#"
        name = "pool"
        kind = "sinr"
        n_trials = 3
        base_seed = 7
        [sweep]
        delta_ppm = [0.0, 300.0]
        columns = [0, 5, 127]
    "#,
    );
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        table_csv(&pool.install(|| run_experiment(&s)).unwrap()).unwrap()
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn a_different_seed_changes_the_noise() {
    let text = |seed: u64| format!("name = \"s\"\nkind = \"estimation\"\nbase_seed = {seed}\n[sweep]\ndelta_ppm = [40.0]\n");
    let a = run_experiment(&spec(&text(1))).unwrap();
    let b = run_experiment(&spec(&text(2))).unwrap();
    assert_ne!(a.rows, b.rows);
}

/// Shrinks a checked-in experiment to the desk preset, one trial and at
/// most two values per axis.
fn scaled_down(mut s: ExperimentSpec, out: &Path) -> ExperimentSpec {
    s.preset = Preset::Desk;
    s.ofdm = OfdmOverrides::default();
    s.n_trials = 1;
    let cfg = s.ofdm_config();
    let two = |v: &mut Vec<f64>| v.truncate(2);
    two(&mut s.sweep.snr_db);
    if s.kind != ExperimentKind::Effects {
        two(&mut s.sweep.delta_ppm);
    }
    s.sweep.symbols.retain(|&m| m < cfg.n_symbols);
    s.sweep.symbols.truncate(3);
    s.sweep.columns.retain(|&j| j < cfg.n_pilot_symbols());
    s.sweep.columns.truncate(3);
    s.sweep.m_pil.retain(|&m| m <= cfg.n_pilot_symbols());
    s.output.csv = Some(out.join(format!("{}.csv", s.name)));
    s.output.plot = Some(out.join(format!("{}.svg", s.name)));
    s.output.image_dir = Some(out.join("images"));
    s
}

#[test]
fn every_checked_in_experiment_runs_scaled_down() {
    let dir = tempfile::tempdir().unwrap();
    let mut names = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(configs_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for path in entries.into_iter().filter(|p| p.extension().is_some_and(|e| e == "toml")) {
        let full = ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(Some(full.name.as_str()), path.file_stem().and_then(|s| s.to_str()));
        let s = scaled_down(full, dir.path());
        s.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let table = run_experiment(&s).unwrap();
        let indices = [s.sweep.symbols.len(), s.sweep.columns.len(), s.sweep.m_pil.len()].into_iter().max().unwrap().max(1);
        let snrs = if s.kind == ExperimentKind::Effects { 1 } else { s.snr_axis().len() };
        let expected = snrs * s.sweep.delta_ppm.len() * indices * s.processing().unwrap().len();
        assert_eq!(table.rows.len(), expected, "{}", s.name);
        let written = write_outputs(&s, &table).unwrap();
        for p in &written {
            assert!(std::fs::metadata(p).unwrap().len() > 0, "{}", p.display());
        }
        let csv = std::fs::read_to_string(s.output.csv.as_ref().unwrap()).unwrap();
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        names.push(s.name);
    }
    assert!(names.len() >= 10, "{names:?}");
}

#[test]
fn tito_beats_full_delay_once_the_window_leaves_the_symbol() {
    let s = spec(
        r#"
        name = "divergence"
        kind = "estimation"
        n_trials = 4
        base_seed = 3
        [ofdm]
        n_subcarriers = 256
        n_symbols = 2048
        cp_len = 64
        [sweep]
        delta_ppm = [150.0, 1000.0, -1000.0]
        methods = ["tito", "full"]
    "#,
    );
    let t = run_experiment(&s).unwrap();
    let plateau_tito = t.find("snr_db=20;delta_ppm=150", "tito").unwrap();
    let plateau_full = t.find("snr_db=20;delta_ppm=150", "full").unwrap();
    assert_eq!(plateau_tito.rmse_ppm, plateau_full.rmse_ppm);
    assert_eq!(plateau_tito.mean_mpil_used, 512.0);
    for d in ["1000", "-1000"] {
        let point = format!("snr_db=20;delta_ppm={d}");
        let tito = t.find(&point, "tito").unwrap();
        let full = t.find(&point, "full").unwrap();
        assert!(full.rmse_ppm > 10.0 * tito.rmse_ppm, "{d} ppm: full {} tito {}", full.rmse_ppm, tito.rmse_ppm);
        assert!(tito.mean_mpil_used < 512.0);
    }
}

#[test]
fn a_tenth_of_a_ppm_is_harder_than_one_ppm_at_high_snr() {
    let s = spec(
        r#"
        name = "quantisation"
        kind = "estimation"
        n_trials = 6
        base_seed = 5
        [sweep]
        snr_db = [40.0]
        delta_ppm = [0.1, 1.0]
        methods = ["tito"]
    "#,
    );
    let t = run_experiment(&s).unwrap();
    let fine = t.find("snr_db=40;delta_ppm=0.1", "tito").unwrap().rmse_ppm;
    let coarse = t.find("snr_db=40;delta_ppm=1", "tito").unwrap().rmse_ppm;
    assert!(fine > coarse, "0.1 ppm: {fine}, 1 ppm: {coarse}");
}

#[test]
fn farrow_with_the_estimate_restores_the_image() {
    let s = spec(
        r#"
        name = "restore"
        kind = "image"
        base_seed = 9
        [ofdm]
        n_subcarriers = 256
        n_symbols = 256
        cp_len = 8
        [scenario]
        snr_db = 20.0
        [sweep]
        delta_ppm = [0.0, 300.0]
        methods = ["none", "tito"]
    "#,
    );
    let t = run_experiment(&s).unwrap();
    let clean = t.find("snr_db=20;delta_ppm=0", "none").unwrap().mean_sinr_db;
    let raw = t.find("snr_db=20;delta_ppm=300", "none").unwrap().mean_sinr_db;
    let fixed = t.find("snr_db=20;delta_ppm=300", "tito").unwrap().mean_sinr_db;
    assert!(clean - raw > 10.0, "uncorrected loss {} dB", clean - raw);
    assert!(clean - fixed < 1.0, "corrected loss {} dB", clean - fixed);
}

#[test]
fn evm_grows_along_the_frame_without_correction() {
    let s = spec(
        r#"
        name = "evm"
        kind = "evm"
        n_trials = 3
        [scenario]
        snr_db = 30.0
        [sweep]
        delta_ppm = [2.0]
        symbols = [0, 50, 150, 511]
    "#,
    );
    let t = run_experiment(&s).unwrap();
    let evm: Vec<f64> = t.rows.iter().map(|r| r.mean_evm_db).collect();
    assert!(evm.windows(2).all(|w| w[1] > w[0]), "{evm:?}");
    assert!(evm[0] < -25.0 && evm[3] > -10.0, "{evm:?}");
}
