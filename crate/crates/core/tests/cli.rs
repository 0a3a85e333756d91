use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn holomimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_holomimo")).args(args).output().unwrap()
}

fn read_phases(path: &Path) -> Vec<f64> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["x", "y", "phase_radians"]);
    reader.records().map(|r| r.unwrap()[2].parse().unwrap()).collect()
}

#[test]
fn unknown_scheme_is_a_usage_error() {
    let out = holomimo(&["sweep", "--schemes", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for name in ["svd_wf", "oam_focused", "walsh_polar"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn bad_ranges_and_flags_exit_2() {
    assert_eq!(holomimo(&["sweep", "--d-min", "2", "--d-max", "1"]).status.code(), Some(2));
    assert_eq!(holomimo(&["sweep", "--pitch", "-1"]).status.code(), Some(2));
    assert_eq!(holomimo(&["sweep", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(holomimo(&[]).status.code(), Some(2));
    assert_eq!(holomimo(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_config_is_a_runtime_error() {
    let out = holomimo(&["sweep", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_writes_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.csv");
    let status = holomimo(&[
        "sweep",
        "--radius",
        "2",
        "--modes",
        "4",
        "--schemes",
        "svd_wf,oam_focused",
        "--snr-db",
        "-10",
        "--d-min",
        "0.5",
        "--d-max",
        "2",
        "--points-per-decade",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));

    let records = holomimo::experiment::read_csv(std::fs::File::open(&out).unwrap()).unwrap();
    assert!(!records.is_empty());
    assert_eq!(records.len() % 2, 0);
    assert!(records.iter().all(|r| r.capacity_bits >= 0.0));
    assert!((records[0].d_over_dr - 0.5).abs() < 1e-12);
    assert!((records[0].d_wavelengths - 1.0).abs() < 1e-12);

    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["tx_points"], 49);
    assert_eq!(meta["config"]["snr_db"], -10.0);
}

#[test]
fn validate_reports_every_precoder() {
    let out = holomimo(&["validate", "--radius", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["svd", "oam_unfocused", "oam_focused", "walsh_radial", "walsh_angular", "walsh_polar"] {
        assert!(text.lines().any(|l| l.trim_start().starts_with(name)), "{name} missing:\n{text}");
    }
    assert!(text.contains("all checks passed"));
}

#[test]
fn walsh_phase_maps_are_binary() {
    let dir = tempfile::tempdir().unwrap();
    let out = holomimo(&[
        "modes",
        "--family",
        "walsh",
        "--mu",
        "1",
        "--nu",
        "2",
        "--radius",
        "3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 8);
    for file in &files {
        let phases = read_phases(file);
        assert!(phases.iter().all(|&p| p == 0.0 || (p - PI).abs() < 1e-12));
    }
    let constant = read_phases(&dir.path().join("walsh_mu1_nu2_m0_n0.csv"));
    assert!(constant.iter().all(|&p| p == 0.0));
}

#[test]
fn oam_phase_maps() {
    let dir = tempfile::tempdir().unwrap();
    let out = holomimo(&[
        "modes",
        "--family",
        "oam_unfocused",
        "--count",
        "3",
        "--radius",
        "2",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let zero = read_phases(&dir.path().join("oamu_0.csv"));
    assert!(zero.iter().all(|&p| p == 0.0));
    let first = read_phases(&dir.path().join("oamu_1.csv"));
    assert!(first.iter().all(|&p| (0.0..2.0 * PI).contains(&p)));
    assert!(first.iter().any(|&p| p > PI));
}
