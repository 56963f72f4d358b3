use std::path::Path;

use super::raster::{read_raster, write_raster};
use super::{read_json, write_json};
use crate::error::{ChemError, Result};
use crate::forward::{Dataset, DatasetManifest, Pair, Splits};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `pairs/x_NNNN.chem`, `pairs/y_NNNN.chem` and `manifest.json` under
/// `dir`. Paths in the manifest are relative to `dir`. Returns the manifest
/// as written.
pub fn write_dataset(dir: &Path, data: &Dataset, splits: Option<&Splits>) -> Result<DatasetManifest> {
    let pairs_dir = dir.join("pairs");
    std::fs::create_dir_all(&pairs_dir)?;
    let mut manifest = data.manifest.clone();
    for (rec, pair) in manifest.pairs.iter_mut().zip(&data.pairs) {
        let x = format!("pairs/x_{:04}.chem", rec.index);
        let y = format!("pairs/y_{:04}.chem", rec.index);
        write_raster(&dir.join(&x), &pair.x)?;
        write_raster(&dir.join(&y), &pair.y)?;
        rec.x_path = Some(x);
        rec.y_path = Some(y);
        rec.split = splits.map(|s| s.label(rec.index).to_string());
    }
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

pub fn read_dataset(dir: &Path) -> Result<Dataset> {
    let manifest: DatasetManifest = read_json(&dir.join(MANIFEST_FILE))?;
    let pairs = manifest
        .pairs
        .iter()
        .map(|rec| {
            let load = |p: &Option<String>, what: &str| -> Result<_> {
                let rel = p
                    .as_deref()
                    .ok_or_else(|| ChemError::Format(format!("pair {} has no {what} path", rec.index)))?;
                let img = read_raster(&dir.join(rel))?;
                if img.shape() != (manifest.side, manifest.side) {
                    return Err(ChemError::Format(format!(
                        "{rel} is {:?}, manifest says {}x{}",
                        img.shape(),
                        manifest.side,
                        manifest.side
                    )));
                }
                Ok(img)
            };
            Ok(Pair {
                x: load(&rec.x_path, "degraded")?,
                y: load(&rec.y_path, "truth")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { pairs, manifest })
}
