use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate, EvalOptions, Evaluation};
use crate::conformal::{calibrate_split, CalibrationOptions, CalibrationResult, Featurizer};
use crate::error::{invalid, Result};
use crate::forward::{make_dataset, Dataset, DegradationSpec, NoiseRule, SceneConfig, Splits};
use crate::recon::Reconstructor;
use crate::transforms::TransformSpec;

/// FWHM perturbation protocol: calibrate at the nominal PSF, evaluate on
/// test sets blurred with each FWHM while the models keep assuming the nominal PSF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scene: SceneConfig,
    pub nominal: DegradationSpec,
    pub fwhms: Vec<f64>,
    pub splits: Splits,
    pub transform: TransformSpec,
    pub calibration: CalibrationOptions,
    pub eval: EvalOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fwhm: f64,
    pub model: String,
    pub mse: f64,
    pub chem: f64,
    /// Per-scale CHEM, finest first, approximation last.
    pub chem_scales: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub transform: String,
    pub models: Vec<String>,
    /// Sorted by FWHM, then by model order.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV with header `fwhm,mse,chem,chem_scale1,...,chem_scaleK,model`.
    pub fn to_csv(&self) -> String {
        let k = self.rows.first().map_or(0, |r| r.chem_scales.len());
        let mut out = String::from("fwhm,mse,chem");
        for s in 1..=k {
            let _ = write!(out, ",chem_scale{s}");
        }
        out.push_str(",model\n");
        for r in &self.rows {
            let _ = write!(out, "{},{},{}", r.fwhm, r.mse, r.chem);
            for v in &r.chem_scales {
                let _ = write!(out, ",{v}");
            }
            let _ = writeln!(out, ",\"{}\"", r.model.replace('"', "\"\""));
        }
        out
    }
}

/// Nominal dataset and perturbed test sets sharing its ground truths.
pub struct SweepData {
    pub nominal: Dataset,
    pub perturbed: Vec<(f64, Dataset)>,
}

pub fn sweep_datasets(cfg: &SweepConfig) -> Result<SweepData> {
    if cfg.fwhms.is_empty() {
        return Err(invalid("FWHM list is empty"));
    }
    cfg.splits.validate()?;
    let n = cfg.splits.total();
    let nominal = make_dataset(&cfg.scene, &cfg.nominal, n)?;
    let mut fwhms = cfg.fwhms.clone();
    fwhms.sort_by(f64::total_cmp);
    let fixed_noise = DegradationSpec {
        noise: NoiseRule::Absolute {
            sigma: nominal.manifest.noise_sigma_raw,
        },
        ..cfg.nominal.clone()
    };
    let perturbed = fwhms
        .iter()
        .map(|&fwhm| {
            let set = if fwhm == cfg.nominal.fwhm {
                nominal.clone()
            } else {
                make_dataset(&cfg.scene, &DegradationSpec { fwhm, ..fixed_noise.clone() }, n)?
            };
            Ok((fwhm, set))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepData { nominal, perturbed })
}

pub fn perturbation_sweep(models: &[Arc<dyn Reconstructor>], cfg: &SweepConfig) -> Result<SweepResult> {
    if models.is_empty() {
        return Err(invalid("no models to sweep"));
    }
    let data = sweep_datasets(cfg)?;
    let forward = data.nominal.forward_model()?;
    let (d1, d2, _) = cfg.splits.split(&data.nominal.pairs)?;
    let side = cfg.scene.side;
    let mut per_model: Vec<Vec<(f64, Evaluation)>> = Vec::new();
    for model in models {
        let features = Featurizer::new(&cfg.transform, side, side)?;
        let (features, cal): (Featurizer, CalibrationResult) =
            calibrate_split(d1, d2, model.as_ref(), &forward, features, &cfg.calibration)?;
        let evals = data
            .perturbed
            .iter()
            .map(|(fwhm, set)| {
                let (_, _, test) = cfg.splits.split(&set.pairs)?;
                Ok((*fwhm, evaluate(test, model.as_ref(), &forward, &features, &cal.model, &cfg.eval)?))
            })
            .collect::<Result<Vec<_>>>()?;
        per_model.push(evals);
    }
    let mut rows = Vec::new();
    for i in 0..data.perturbed.len() {
        for (model, evals) in models.iter().zip(&per_model) {
            let (fwhm, e) = &evals[i];
            rows.push(SweepRow {
                fwhm: *fwhm,
                model: model.id(),
                mse: e.mse,
                chem: e.report.aggregate,
                chem_scales: e.scale_chem.clone(),
            });
        }
    }
    Ok(SweepResult {
        transform: cfg.transform.id(),
        models: models.iter().map(|m| m.id()).collect(),
        rows,
    })
}
