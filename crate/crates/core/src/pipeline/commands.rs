use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, TheoryConfig};
use crate::approx::{
    bernstein_error_sweep, discretization_error_sweep, rows_to_csv, ErrorRow, FnField, GaussianSmoothing,
    IdentityOp, NamedField, Operator, SoftClip,
};
use crate::conformal::{calibrate_split, Featurizer};
use crate::error::{invalid, ChemError, Result};
use crate::forward::make_dataset;
use crate::io::{
    file_sha256, read_calibration, read_dataset, write_calibration, write_dataset, write_json, write_pgm16,
    write_raster, write_report, CalibrationSidecar, ReportFile, MANIFEST_FILE,
};
use crate::metric::{evaluate, hallucination_map, perturbation_sweep};
use crate::recon::parse_reconstructor;

pub const DATASET_DIR: &str = "dataset";
pub const CALIBRATION_FILE: &str = "calibration.json";
pub const REPORT_FILE: &str = "report.json";
pub const MAPS_DIR: &str = "maps";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const THEORY_DIR: &str = "theory";

/// Process exit code for a failed command: 2 config, 3 data, 4 hash mismatch.
pub fn exit_code(err: &ChemError) -> i32 {
    match err {
        ChemError::HashMismatch { .. } => 4,
        ChemError::InvalidInput(_) => 2,
        _ => 3,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSummary {
    pub manifest: PathBuf,
    pub manifest_hash: String,
    pub pairs: usize,
    pub noise_sigma_raw: f64,
    pub min_source_peak_snr: Option<f64>,
    pub max_source_peak_snr: Option<f64>,
}

pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary> {
    cfg.validate()?;
    let data = make_dataset(&cfg.scene_config(), &cfg.degradation_spec(), cfg.splits.total())?;
    let dir = cfg.output.join(DATASET_DIR);
    let manifest = write_dataset(&dir, &data, Some(&cfg.splits))?;
    Ok(SynthSummary {
        manifest: dir.join(MANIFEST_FILE),
        manifest_hash: manifest.hash(),
        pairs: manifest.pairs.len(),
        noise_sigma_raw: manifest.noise_sigma_raw,
        min_source_peak_snr: manifest.min_source_peak_snr,
        max_source_peak_snr: manifest.max_source_peak_snr,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrateSummary {
    pub sidecar: PathBuf,
    pub sidecar_hash: String,
    pub fraction_at_a: f64,
    pub fraction_at_b: f64,
    pub warnings: Vec<String>,
}

pub fn cmd_calibrate(cfg: &RunConfig, dataset: &Path) -> Result<CalibrateSummary> {
    cfg.validate()?;
    let data = read_dataset(dataset)?;
    let side = data.manifest.side;
    let forward = data.forward_model()?;
    let (d1, d2, _) = cfg.splits.split(&data.pairs)?;
    let model = cfg.reconstructor()?;
    let features = Featurizer::new(&cfg.transform_spec()?, side, side)?;
    let (_, result) = calibrate_split(d1, d2, model.as_ref(), &forward, features, &cfg.calibration_options())?;
    std::fs::create_dir_all(&cfg.output)?;
    let path = cfg.output.join(CALIBRATION_FILE);
    let sidecar = CalibrationSidecar::new(&result, &cfg.calibration_hash(), &data.manifest.hash(), &model.id());
    let written = write_calibration(&path, sidecar, &result.model)?;
    Ok(CalibrateSummary {
        sidecar_hash: file_sha256(&path)?,
        sidecar: path,
        fraction_at_a: written.fraction_at_a,
        fraction_at_b: written.fraction_at_b,
        warnings: written.warnings,
    })
}

/// PGM scaling constants for one exported map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub image: usize,
    pub raster: String,
    pub pgm: String,
    pub pgm_min: f64,
    pub pgm_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapIndex {
    pub scales: usize,
    pub threshold: f64,
    pub maps: Vec<MapRecord>,
}

/// Scores the test split against a sidecar. Refuses sidecars whose
/// calibration hash, transform hash or dataset hash differ from the inputs.
pub fn cmd_evaluate(cfg: &RunConfig, dataset: &Path, sidecar_path: &Path) -> Result<ReportFile> {
    cfg.validate()?;
    let (sidecar, radius_model) = read_calibration(sidecar_path)?;
    let transform = cfg.transform_spec()?;
    let checks = [
        (sidecar.transform_hash.clone(), transform.hash()),
        (sidecar.config_hash.clone(), cfg.calibration_hash()),
    ];
    for (expected, found) in checks {
        if expected != found {
            return Err(ChemError::HashMismatch { expected, found });
        }
    }
    let data = read_dataset(dataset)?;
    let dataset_hash = data.manifest.hash();
    if dataset_hash != sidecar.dataset_hash {
        return Err(ChemError::HashMismatch {
            expected: sidecar.dataset_hash,
            found: dataset_hash,
        });
    }
    let forward = data.forward_model()?;
    let (_, _, test) = cfg.splits.split(&data.pairs)?;
    let model = cfg.reconstructor()?;
    let features = Featurizer::from_spec(sidecar.features.clone())?;
    let eval = evaluate(test, model.as_ref(), &forward, &features, &radius_model, &cfg.eval_options())?;

    std::fs::create_dir_all(&cfg.output)?;
    if cfg.maps.enabled {
        let dir = cfg.output.join(MAPS_DIR);
        std::fs::create_dir_all(&dir)?;
        let mut maps = Vec::new();
        for (i, pair) in test.iter().take(cfg.maps.images).enumerate() {
            let pred = model.reconstruct(&pair.x, &forward)?;
            let coef = features.coefficients(&pred)?;
            let map = hallucination_map(&eval.report, &coef, &features, cfg.maps.scales, cfg.maps.threshold)?;
            let raster = format!("map_{i:04}.chem");
            let pgm = format!("map_{i:04}.pgm");
            write_raster(&dir.join(&raster), &map)?;
            let (lo, hi) = write_pgm16(&dir.join(&pgm), &map)?;
            maps.push(MapRecord {
                image: i,
                raster,
                pgm,
                pgm_min: lo,
                pgm_max: hi,
            });
        }
        let index = MapIndex {
            scales: cfg.maps.scales,
            threshold: cfg.maps.threshold,
            maps,
        };
        write_json(&dir.join("maps.json"), &index)?;
    }

    let mut file = ReportFile::new(eval.report, eval.mse, eval.scale_chem);
    file.config_hash = cfg.hash();
    file.dataset_hash = dataset_hash;
    file.calibration_hash = file_sha256(sidecar_path)?;
    file.model = model.id();
    file.transform = transform.id();
    write_report(&cfg.output.join(REPORT_FILE), file)
}

/// Runs the FWHM perturbation sweep and writes `sweep.csv`. Returns the CSV text.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    let ids: Vec<&str> = if cfg.sweep_models.is_empty() {
        vec![cfg.model.as_str()]
    } else {
        cfg.sweep_models.iter().map(String::as_str).collect()
    };
    let models = ids.iter().map(|s| parse_reconstructor(s)).collect::<Result<Vec<_>>>()?;
    let result = perturbation_sweep(&models, &cfg.sweep_config()?)?;
    let csv = result.to_csv();
    std::fs::create_dir_all(&cfg.output)?;
    std::fs::write(cfg.output.join(SWEEP_FILE), &csv)?;
    Ok(csv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySummary {
    pub bernstein: Vec<ErrorRow>,
    pub discretization: Vec<ErrorRow>,
}

fn theory_fields(t: &TheoryConfig) -> Vec<NamedField> {
    let mut out: Vec<FnField> = Vec::new();
    if t.analytic {
        out.push(FnField::linear(t.dim, 0.7));
        out.push(FnField::sinusoid(t.dim, 2.0, 0.3));
        if t.dim == 1 {
            out.push(FnField::square());
            out.push(FnField::abs());
        }
    }
    for i in 0..t.random_fields {
        out.push(FnField::random_smooth(t.dim, 4, t.max_freq, t.modulus.seed.wrapping_add(i as u64)));
    }
    out.into_iter()
        .map(|f| (f.name.clone(), Arc::new(f) as Arc<dyn crate::approx::ScalarField>))
        .collect()
}

fn parse_operator(s: &str) -> Result<Box<dyn Operator>> {
    match s.split_once(':') {
        None if s == "identity" => Ok(Box::new(IdentityOp)),
        None if s == "softclip" => Ok(Box::new(SoftClip)),
        Some(("smoothing", sigma)) => {
            let sigma: f64 = sigma.parse().map_err(|_| invalid(format!("bad smoothing width `{sigma}`")))?;
            Ok(Box::new(GaussianSmoothing::new(sigma)?))
        }
        _ => Err(invalid(format!("unknown operator `{s}`"))),
    }
}

/// Bernstein and discretization error tables under `theory/`.
pub fn cmd_theory_sweep(cfg: &RunConfig) -> Result<TheorySummary> {
    let t = &cfg.theory;
    if t.dim == 0 || t.ms.is_empty() || t.ms.contains(&0) {
        return Err(invalid("theory sweep needs dim >= 1 and degrees >= 1"));
    }
    let ops = t.operators.iter().map(|s| parse_operator(s)).collect::<Result<Vec<_>>>()?;
    let fields = theory_fields(t);
    let bernstein = bernstein_error_sweep(&fields, &t.ms, t.modulus)?;
    let mut discretization = Vec::new();
    for op in &ops {
        discretization.extend(discretization_error_sweep(op.as_ref(), &fields, &t.ms, t.modulus)?);
    }
    let dir = cfg.output.join(THEORY_DIR);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("bernstein.csv"), rows_to_csv(&bernstein))?;
    std::fs::write(dir.join("discretization.csv"), rows_to_csv(&discretization))?;
    Ok(TheorySummary {
        bernstein,
        discretization,
    })
}
