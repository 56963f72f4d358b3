use std::path::Path;

use serde::{Deserialize, Serialize};

use super::block::{decode_block, encode_block};
use super::{read_json, sha256_hex, sibling_name, write_json};
use crate::error::{ChemError, Result};
use crate::metric::ChemReport;

pub const SCORES_MAGIC: &[u8; 4] = b"CHSC";
const FORMAT: &str = "chem-report";

/// Report JSON with provenance. Per-image scores, when kept, go to a `CHSC`
/// block (images × coefficients) next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    pub dataset_hash: String,
    pub calibration_hash: String,
    pub model: String,
    pub transform: String,
    pub mse: f64,
    /// Mean CHEM per scale, finest first, approximation last.
    pub scale_chem: Vec<f64>,
    pub report: ChemReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_image: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_image_sha256: Option<String>,
}

impl ReportFile {
    pub fn new(report: ChemReport, mse: f64, scale_chem: Vec<f64>) -> Self {
        Self {
            format: FORMAT.into(),
            version: 1,
            config_hash: String::new(),
            dataset_hash: String::new(),
            calibration_hash: String::new(),
            model: String::new(),
            transform: String::new(),
            mse,
            scale_chem,
            report,
            per_image: None,
            per_image_sha256: None,
        }
    }
}

pub fn write_report(path: &Path, mut file: ReportFile) -> Result<ReportFile> {
    file.per_image = None;
    file.per_image_sha256 = None;
    if let Some(rows) = &file.report.per_image {
        let cols = file.report.per_coefficient.len();
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let bytes = encode_block(SCORES_MAGIC, rows.len(), cols, &flat)?;
        let name = sibling_name(path, "scores.bin");
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        std::fs::write(dir.join(&name), &bytes)?;
        file.per_image_sha256 = Some(sha256_hex(&bytes));
        file.per_image = Some(name);
    }
    write_json(path, &file)?;
    Ok(file)
}

pub fn read_report(path: &Path) -> Result<ReportFile> {
    let mut file: ReportFile = read_json(path)?;
    if file.format != FORMAT {
        return Err(ChemError::Format(format!("not a report file: {}", file.format)));
    }
    if let Some(name) = &file.per_image {
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let bytes = std::fs::read(dir.join(name))?;
        let found = sha256_hex(&bytes);
        let expected = file.per_image_sha256.clone().unwrap_or_default();
        if found != expected {
            return Err(ChemError::HashMismatch { expected, found });
        }
        let (rows, cols, data) = decode_block(SCORES_MAGIC, &bytes)?;
        if rows != file.report.images || cols != file.report.per_coefficient.len() {
            return Err(ChemError::Format("per-image score block does not match the report".into()));
        }
        file.report.per_image = Some(data.chunks(cols.max(1)).map(<[f64]>::to_vec).collect());
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::chem_aggregate;

    #[test]
    fn round_trip_with_scores() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        let scores = vec![vec![0.0, 0.25, 1.0], vec![0.1, 0.0, 0.7]];
        let mut report = chem_aggregate(&scores, 1.0, 0.01, 0.05).unwrap();
        report.per_image = Some(scores.clone());
        let written = write_report(&path, ReportFile::new(report.clone(), 0.5, vec![0.3])).unwrap();
        assert_eq!(written.per_image.as_deref(), Some("report.scores.bin"));
        let back = read_report(&path).unwrap();
        assert_eq!(back.report.per_image, Some(scores));
        assert_eq!(back.report.aggregate, report.aggregate);
        assert_eq!(back.report.per_coefficient, report.per_coefficient);
    }
}
