use std::path::Path;
use std::process::{Command, Output};

fn chem(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chem"))
        .args(args)
        .args(["--output", out.to_str().unwrap()])
        .args(["--side", "32", "--fwhm", "3", "--transform", "haar:3"])
        .args(["--d1", "8", "--d2", "8", "--test", "6", "--alpha", "0.2"])
        .env_remove("CHEM_OUTPUT_ROOT")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn synth_calibrate_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&chem(out, &["synth"])), 0);
    assert!(out.join("dataset/manifest.json").is_file());
    let cal = chem(out, &["calibrate"]);
    assert_eq!(code(&cal), 0, "{}", String::from_utf8_lossy(&cal.stderr));
    assert!(String::from_utf8_lossy(&cal.stderr).contains("clipped at a"));
    let ev = chem(out, &["evaluate", "--maps", "--map-images", "1"]);
    assert_eq!(code(&ev), 0, "{}", String::from_utf8_lossy(&ev.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&ev.stdout).unwrap();
    assert!(summary["aggregate"].as_f64().unwrap() >= 0.0);
    assert!(out.join("report.json").is_file());
    assert!(out.join("maps/map_0000.pgm").is_file());

    let mismatch = Command::new(env!("CARGO_BIN_EXE_chem"))
        .args(["evaluate", "--output", out.to_str().unwrap(), "--side", "32", "--fwhm", "3"])
        .args(["--transform", "haar:2", "--d1", "8", "--d2", "8", "--test", "6", "--alpha", "0.2"])
        .output()
        .unwrap();
    assert_eq!(code(&mismatch), 4);
}

#[test]
fn exit_codes_for_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&chem(dir.path(), &["synth", "--alpha", "1.5"])), 2);
    assert_eq!(code(&chem(dir.path(), &["calibrate", "--dataset", "/nonexistent/chem"])), 3);
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\"theta\": \"one\"}").unwrap();
    assert_eq!(code(&chem(dir.path(), &["synth", "--config", cfg.to_str().unwrap()])), 2);
}

#[test]
fn config_file_and_output_root_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"transform": "haar:2", "splits": {"d1": 2, "d2": 2, "test": 2}, "scene": {"side": 16, "margin": 3.0}, "degradation": {"fwhm": 2.0}}"#,
    )
    .unwrap();
    let root = dir.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_chem"))
        .args(["synth", "--config", cfg.to_str().unwrap()])
        .env("CHEM_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["pairs"], 6);
    assert!(root.join("dataset/pairs/x_0005.chem").is_file());
}

#[test]
fn sweep_and_theory_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let o = chem(dir.path(), &["sweep", "--fwhms", "3,4", "--sweep-model", "identity", "--sweep-model", "wiener:snr=10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("fwhm,mse,chem,chem_scale1"));

    let o = chem(dir.path(), &["theory-sweep", "--ms", "4,8", "--random-fields", "1", "--operators", "identity"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("theory/discretization.csv").is_file());
}
