//! On-disk formats: float rasters, f64 blocks, datasets, calibration sidecars and reports.

mod block;
mod dataset;
mod raster;
mod report;
mod sidecar;

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub use block::{decode_block, encode_block, read_block, write_block, BLOCK_VERSION};
pub use dataset::{read_dataset, write_dataset, MANIFEST_FILE};
pub use raster::{
    decode_raster, encode_raster, encode_pgm16, read_raster, write_pgm16, write_raster, RASTER_MAGIC,
    RASTER_VERSION,
};
pub use report::{read_report, write_report, ReportFile, SCORES_MAGIC};
pub use sidecar::{read_calibration, write_calibration, CalibrationSidecar, CALIBRATION_MAGIC, SIDECAR_VERSION};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Pretty JSON with a trailing newline.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_bytes(value)?)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

/// Name of a sibling file: `dir/stem.json` with extension `ext` becomes `stem.ext`.
pub(crate) fn sibling_name(path: &Path, ext: &str) -> String {
    let stem = path.file_stem().map_or_else(|| "artifact".into(), |s| s.to_string_lossy().into_owned());
    format!("{stem}.{ext}")
}
