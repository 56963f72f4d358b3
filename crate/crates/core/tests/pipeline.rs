use std::path::Path;

use chem_core::forward::{convolve, gaussian_psf, NoiseRule, SceneConfig, Splits};
use chem_core::io::{read_calibration, read_dataset, read_json, read_raster, read_report, ReportFile};
use chem_core::metric::hoeffding_bound;
use chem_core::pipeline::*;
use chem_core::ChemError;

fn small_config(out: &Path) -> RunConfig {
    RunConfig {
        transform: "haar:3".into(),
        model: "tikhonov:sure,gamma=laplacian".into(),
        alpha: 0.1,
        splits: Splits { d1: 10, d2: 10, test: 8 },
        scene: SceneConfig {
            side: 32,
            margin: 4.0,
            ..SceneConfig::default()
        },
        degradation: chem_core::forward::DegradationSpec {
            fwhm: 3.0,
            ..Default::default()
        },
        keep_per_image: true,
        fwhms: vec![3.0, 5.0],
        output: out.to_path_buf(),
        ..RunConfig::default()
    }
}

fn tree_bytes(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn run_all(cfg: &RunConfig) -> ReportFile {
    cmd_synth(cfg).unwrap();
    let ds = cfg.output.join(DATASET_DIR);
    cmd_calibrate(cfg, &ds).unwrap();
    cmd_evaluate(cfg, &ds, &cfg.output.join(CALIBRATION_FILE)).unwrap()
}

#[test]
fn synth_is_byte_identical_and_lists_existing_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = small_config(a.path());
    cfg.splits = Splits { d1: 4, d2: 3, test: 3 };
    let s = cmd_synth(&cfg).unwrap();
    assert_eq!(s.pairs, 10);
    cfg.output = b.path().to_path_buf();
    let s2 = cmd_synth(&cfg).unwrap();
    assert_eq!(s.manifest_hash, s2.manifest_hash);
    assert_eq!(tree_bytes(a.path()), tree_bytes(b.path()));

    let data = read_dataset(&a.path().join(DATASET_DIR)).unwrap();
    assert_eq!(data.manifest.pairs.len(), 10);
    for rec in &data.manifest.pairs {
        assert!(a.path().join(DATASET_DIR).join(rec.x_path.as_ref().unwrap()).is_file());
        assert!(a.path().join(DATASET_DIR).join(rec.y_path.as_ref().unwrap()).is_file());
    }
}

#[test]
fn manifest_snr_matches_rasters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    cmd_synth(&cfg).unwrap();
    let ds = dir.path().join(DATASET_DIR);
    let manifest = read_dataset(&ds).unwrap().manifest;
    let psf = gaussian_psf(manifest.side, manifest.fwhm).unwrap();
    let norm = manifest.normalization;
    for rec in &manifest.pairs {
        let y = read_raster(&ds.join(rec.y_path.as_ref().unwrap())).unwrap();
        let peak = (convolve(&y, &psf).unwrap().max() - norm.offset) / norm.scale;
        let snr = peak / manifest.noise_sigma_raw;
        let want = rec.peak_snr.unwrap();
        assert!((snr - want).abs() <= 1e-9 * want.abs().max(1.0), "{snr} vs {want}");
    }
}

#[test]
fn pipeline_is_deterministic_and_consistent() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg = small_config(a.path());
    cfg.maps.enabled = true;
    cfg.maps.images = 2;
    let ra = run_all(&cfg);
    cfg.output = b.path().to_path_buf();
    let rb = run_all(&cfg);
    assert_eq!(ra, rb);
    for f in [REPORT_FILE, CALIBRATION_FILE, "calibration.bin", "report.scores.bin"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }

    let report = read_report(&a.path().join(REPORT_FILE)).unwrap().report;
    let mean = report.per_coefficient.iter().sum::<f64>() / report.per_coefficient.len() as f64;
    assert!((report.aggregate - mean).abs() <= 1e-12);
    let hw = hoeffding_bound(cfg.theta, cfg.delta, cfg.splits.test).unwrap();
    assert_eq!(report.hoeffding_half_width, hw);
    let closed = cfg.theta * ((2.0 / cfg.delta).ln() / (2.0 * cfg.splits.test as f64)).sqrt();
    assert!((hw - closed).abs() <= 1e-15);
    assert_eq!(report.per_image.as_ref().unwrap().len(), cfg.splits.test);

    let index: MapIndex = read_json(&a.path().join(MAPS_DIR).join("maps.json")).unwrap();
    assert_eq!(index.maps.len(), 2);
    for m in &index.maps {
        let img = read_raster(&a.path().join(MAPS_DIR).join(&m.raster)).unwrap();
        assert_eq!(img.min(), m.pgm_min);
        assert_eq!(img.max(), m.pgm_max);
    }
}

#[test]
fn calibration_rerun_has_identical_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    cmd_synth(&cfg).unwrap();
    let ds = dir.path().join(DATASET_DIR);
    let first = cmd_calibrate(&cfg, &ds).unwrap();
    let second = cmd_calibrate(&cfg, &ds).unwrap();
    assert_eq!(first.sidecar_hash, second.sidecar_hash);
}

#[test]
fn perfect_model_calibrates_to_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.model = "identity".into();
    cfg.scene.min_sources = 0;
    cfg.scene.max_sources = 0;
    cfg.degradation.noise = NoiseRule::Absolute { sigma: 0.0 };
    cmd_synth(&cfg).unwrap();
    let summary = cmd_calibrate(&cfg, &dir.path().join(DATASET_DIR)).unwrap();
    let (_, model) = read_calibration(&summary.sidecar).unwrap();
    assert!(model.lambdas.iter().all(|&l| l == cfg.bounds.a));
    assert_eq!(summary.fraction_at_a, 1.0);
}

#[test]
fn small_calibration_set_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.alpha = 0.01;
    let summary = run_all(&cfg);
    let (side, model) = read_calibration(&dir.path().join(CALIBRATION_FILE)).unwrap();
    assert!(!side.warnings.is_empty());
    assert!(model.lambdas.iter().all(|&l| l == cfg.bounds.b));
    assert_eq!(summary.report.images, cfg.splits.test);
}

#[test]
fn evaluate_refuses_mismatched_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    cmd_synth(&cfg).unwrap();
    let ds = dir.path().join(DATASET_DIR);
    cmd_calibrate(&cfg, &ds).unwrap();
    let sidecar = dir.path().join(CALIBRATION_FILE);
    for other in [
        RunConfig { transform: "haar:2".into(), ..cfg.clone() },
        RunConfig { alpha: 0.2, ..cfg.clone() },
        RunConfig { model: "wiener:snr=10".into(), ..cfg.clone() },
    ] {
        let err = cmd_evaluate(&other, &ds, &sidecar).unwrap_err();
        assert!(matches!(err, ChemError::HashMismatch { .. }), "{err}");
        assert_eq!(exit_code(&err), 4);
    }
    let bad = RunConfig { theta: -1.0, ..cfg.clone() };
    assert_eq!(exit_code(&cmd_evaluate(&bad, &ds, &sidecar).unwrap_err()), 2);
    let missing = cmd_evaluate(&cfg, &dir.path().join("nowhere"), &sidecar).unwrap_err();
    assert_eq!(exit_code(&missing), 3);
}

#[test]
fn sweep_rows_and_singleton_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.sweep_models = vec!["identity".into(), cfg.model.clone()];
    let csv = cmd_sweep(&cfg).unwrap();
    assert_eq!(csv.lines().count(), 1 + cfg.fwhms.len() * 2);
    assert_eq!(cmd_sweep(&cfg).unwrap(), csv);

    cfg.sweep_models.clear();
    cfg.fwhms = vec![cfg.degradation.fwhm];
    let csv = cmd_sweep(&cfg).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let report = run_all(&cfg);
    assert_eq!(row[1].parse::<f64>().unwrap(), report.mse);
    assert_eq!(row[2].parse::<f64>().unwrap(), report.report.aggregate);
}

#[test]
fn theory_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.theory.ms = vec![4, 8];
    cfg.theory.random_fields = 2;
    let s = cmd_theory_sweep(&cfg).unwrap();
    assert_eq!(s.bernstein.len(), 6 * 2);
    assert_eq!(s.discretization.len(), 6 * 2 * 2);
    let text = std::fs::read_to_string(dir.path().join(THEORY_DIR).join("bernstein.csv")).unwrap();
    assert_eq!(text.lines().count(), 13);
    cfg.theory.operators = vec!["bogus".into()];
    assert_eq!(exit_code(&cmd_theory_sweep(&cfg).unwrap_err()), 2);
}
