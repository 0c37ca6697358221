use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sfo-lab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
}

#[test]
fn limits_of_the_full_scale_waveform() {
    let out = stdout(&lab(&["limits", "--preset", "table1"]));
    assert!((value(&out, "ici_limit_ppm") - 97.66).abs() < 0.01);
    assert!((value(&out, "isi_limit_ppm") - 48.83).abs() < 0.01);
}

#[test]
fn effects_of_one_ppm() {
    let out = stdout(&lab(&["effects", "--delta", "1", "--preset", "table1"]));
    assert!((value(&out, "range_migration_m") - 6.29).abs() < 0.01);
    assert!((value(&out, "doppler_shift_low_khz") - 0.25).abs() < 1e-3);
    assert!((value(&out, "doppler_shift_high_khz") + 0.25).abs() < 1e-3);
}

#[test]
fn noiseless_zero_sfo_estimates_zero() {
    let out = stdout(&lab(&["estimate", "--delta", "0", "--snr", "100", "--method", "tito"]));
    let row = out.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[1], "tito");
    assert!(fields[3].parse::<f64>().unwrap().abs() < 1e-9, "{row}");
}

#[test]
fn bounds_write_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("b.csv");
    let out = stdout(&lab(&["bounds", "--preset", "desk", "--snr", "20", "--out", path.to_str().unwrap()]));
    assert!(value(&out, "sigma_delta_mle_ppm") > value(&out, "sigma_delta_crlb_ppm"));
    let csv = std::fs::read_to_string(path).unwrap();
    assert!(csv.starts_with("m_pil,sigma_delta_crlb_ppm,sigma_delta_mle_ppm"));
    assert!(csv.lines().last().unwrap().starts_with("128,"));
}

#[test]
fn sweep_writes_the_contract_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("e.toml");
    std::fs::write(&cfg, "name = \"e\"\nkind = \"estimation\"\n[sweep]\ndelta_ppm = [20.0]\n[output]\ncsv = \"out/e.csv\"\n").unwrap();
    let o = lab(&["sweep", "--config", cfg.to_str().unwrap(), "--trials", "2", "--seed", "4"]);
    stdout(&o);
    let csv = std::fs::read_to_string(dir.path().join("out/e.csv")).unwrap();
    assert!(csv.starts_with("axis_point,method,trials,rmse_ppm,bias_ppm,mean_mpil_used,mean_sinr_db,mean_evm_db\n"));
    assert!(csv.contains("snr_db=20;delta_ppm=20,tito,2,"));
}

#[test]
fn image_writes_a_png() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("img.png");
    stdout(&lab(&["image", "--delta", "50", "--method", "tito", "--out", path.to_str().unwrap()]));
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[1..4], b"PNG");
}

#[test]
fn invalid_configurations_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "name = \"bad\"\nkind = \"estimation\"\nn_trials = 0\n[sweep]\ndelta_ppm = [1.0]\n").unwrap();
    for args in [
        vec!["sweep", "--config", cfg.to_str().unwrap()],
        vec!["sweep"],
        vec!["estimate", "--method", "wu"],
        vec!["estimate", "--eta", "0"],
        vec!["limits", "--preset", "huge"],
        vec!["sweep", "--config", "/nonexistent/spec.toml"],
    ] {
        let o = lab(&args);
        assert!(!o.status.success(), "{args:?} succeeded");
        assert!(!o.stderr.is_empty());
    }
}
