use std::process::Command;

use plc_sbl::harness::{qpsk_awgn_ber, read_csv, run_point, EstimatorKind, ExperimentConfig, CSV_HEADER};
use plc_sbl::noise::{GaussianMixtureParams, NoiseModel};

const BIN: &str = env!("CARGO_BIN_EXE_plc-sbl");

fn gm() -> NoiseModel {
    NoiseModel::Gm(GaussianMixtureParams::new(vec![0.9, 0.07, 0.03], vec![1.0, 100.0, 1000.0]).unwrap())
}

#[test]
fn genie_subtraction_leaves_the_awgn_curve() {
    let snr = 4.8;
    let mut cfg = ExperimentConfig::new(gm(), EstimatorKind::OracleSubtraction, vec![snr]);
    cfg.min_bit_errors = 400;
    let r = run_point(&cfg, snr).unwrap();
    let want = qpsk_awgn_ber((72.0 / 128.0) / 10f64.powf(snr / 10.0));
    // ~400 errors: one standard error is about 5%
    assert!((r.ber / want - 1.0).abs() < 0.15, "{} vs {want}", r.ber);
}

#[test]
fn ber_falls_with_snr() {
    let cfg = ExperimentConfig::new(gm(), EstimatorKind::Nulltone, vec![8.0, 14.0]);
    let a = run_point(&cfg, 8.0).unwrap();
    let b = run_point(&cfg, 14.0).unwrap();
    assert!(b.ber < a.ber);
}

#[test]
fn cli_run_writes_csv_and_gain_reads_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/awgn.toml");
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for (csv, seed) in [(&csv_a, "1"), (&csv_b, "2")] {
        let out = Command::new(BIN)
            .args(["run", "--config", cfg, "--snr", "0,4,8", "--symbols", "20", "--seed", seed, "--out"])
            .arg(csv)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&csv_a).unwrap();
    assert_eq!(text.lines().next(), Some(CSV_HEADER));
    assert_eq!(read_csv(&csv_a).unwrap().len(), 3);
    let out = Command::new(BIN).arg("gain").arg(&csv_a).arg(&csv_b).args(["--target", "1e-2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let gain: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!(gain.abs() < 1.5, "same scenario, different seeds: {gain}");
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "estimator = \"nulltone\"\nsnr_points = []\n[noise]\nmodel = \"awgn\"\nvariance = 1.0\n").unwrap();
    let code = |args: &[&std::ffi::OsStr]| Command::new(BIN).args(args).output().unwrap().status.code();
    assert_eq!(code(&["run".as_ref(), "--config".as_ref(), bad.as_os_str()]), Some(1));
    assert_eq!(code(&["run".as_ref(), "--config".as_ref(), "/nonexistent.toml".as_ref()]), Some(1));
    assert_eq!(code(&["frobnicate".as_ref()]), Some(1));
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, format!("{CSV_HEADER}\n")).unwrap();
    assert_eq!(code(&["gain".as_ref(), empty.as_os_str(), empty.as_os_str()]), Some(2));
}

#[test]
fn cli_selftest_passes() {
    let out = Command::new(BIN).arg("selftest").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).lines().all(|l| l.starts_with("PASS")));
}
