use std::path::Path;

use serde::{Deserialize, Serialize};

use super::block::{decode_block, encode_block};
use super::{read_json, sha256_hex, sibling_name, write_json};
use crate::conformal::{Bounds, CalibrationResult, FeatureSpec, GFamily, RadiusModel};
use crate::error::{ChemError, Result};

pub const CALIBRATION_MAGIC: &[u8; 4] = b"CHCL";
pub const SIDECAR_VERSION: u32 = 1;
const FORMAT: &str = "chem-calibration";

/// JSON half of a calibration sidecar. The `r̂` and `λ` vectors live in a
/// `CHCL` block next to it (row 0 radii, row 1 lambdas).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSidecar {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub dataset_hash: String,
    pub model: String,
    pub transform: String,
    pub transform_hash: String,
    pub features: FeatureSpec,
    pub alpha: f64,
    pub g: GFamily,
    pub bounds: Bounds,
    pub coefficients: usize,
    pub calibration_samples: usize,
    pub level: f64,
    pub rank: Option<usize>,
    pub fraction_at_a: f64,
    pub fraction_at_b: f64,
    pub warnings: Vec<String>,
    pub vectors: String,
    pub vectors_sha256: String,
}

impl CalibrationSidecar {
    pub fn new(result: &CalibrationResult, config_hash: &str, dataset_hash: &str, model: &str) -> Self {
        let m = &result.model;
        Self {
            format: FORMAT.into(),
            version: SIDECAR_VERSION,
            config_hash: config_hash.into(),
            dataset_hash: dataset_hash.into(),
            model: model.into(),
            transform: m.features.transform.id(),
            transform_hash: m.transform_hash.clone(),
            features: m.features.clone(),
            alpha: m.alpha,
            g: m.g,
            bounds: m.bounds,
            coefficients: m.len(),
            calibration_samples: result.fit.n,
            level: result.fit.level,
            rank: result.fit.rank,
            fraction_at_a: result.fit.fraction_at_a,
            fraction_at_b: result.fit.fraction_at_b,
            warnings: result.fit.warnings.clone(),
            vectors: String::new(),
            vectors_sha256: String::new(),
        }
    }
}

/// Writes `path` (JSON) and its `.bin` sibling. Returns the sidecar as written.
pub fn write_calibration(path: &Path, mut sidecar: CalibrationSidecar, model: &RadiusModel) -> Result<CalibrationSidecar> {
    let t = model.len();
    let mut data = model.radii.clone();
    data.extend_from_slice(&model.lambdas);
    let bytes = encode_block(CALIBRATION_MAGIC, 2, t, &data)?;
    let name = sibling_name(path, "bin");
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::write(dir.join(&name), &bytes)?;
    sidecar.vectors = name;
    sidecar.vectors_sha256 = sha256_hex(&bytes);
    sidecar.coefficients = t;
    write_json(path, &sidecar)?;
    Ok(sidecar)
}

/// Loads a sidecar and rebuilds its radius model, refusing any hash mismatch.
pub fn read_calibration(path: &Path) -> Result<(CalibrationSidecar, RadiusModel)> {
    let sidecar: CalibrationSidecar = read_json(path)?;
    if sidecar.format != FORMAT || sidecar.version != SIDECAR_VERSION {
        return Err(ChemError::Format(format!(
            "unsupported calibration sidecar {} v{}",
            sidecar.format, sidecar.version
        )));
    }
    let spec_hash = sidecar.features.transform.hash();
    if spec_hash != sidecar.transform_hash {
        return Err(ChemError::HashMismatch {
            expected: sidecar.transform_hash,
            found: spec_hash,
        });
    }
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let bytes = std::fs::read(dir.join(&sidecar.vectors))?;
    let found = sha256_hex(&bytes);
    if found != sidecar.vectors_sha256 {
        return Err(ChemError::HashMismatch {
            expected: sidecar.vectors_sha256,
            found,
        });
    }
    let (rows, cols, data) = decode_block(CALIBRATION_MAGIC, &bytes)?;
    if rows != 2 || cols != sidecar.coefficients {
        return Err(ChemError::Format(format!(
            "calibration vectors are {rows}x{cols}, expected 2x{}",
            sidecar.coefficients
        )));
    }
    let (radii, lambdas) = data.split_at(cols);
    let model = RadiusModel {
        features: sidecar.features.clone(),
        transform_hash: sidecar.transform_hash.clone(),
        radii: radii.to_vec(),
        lambdas: lambdas.to_vec(),
        g: sidecar.g,
        bounds: sidecar.bounds,
        alpha: sidecar.alpha,
    };
    Ok((sidecar, model))
}
