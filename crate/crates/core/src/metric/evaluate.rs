use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::{ChemReport, ScoreAccumulator};
use super::score::{chem_per_coefficient, scale_means, Standardization};
use crate::conformal::{Featurizer, RadiusModel};
use crate::error::{ChemError, Result};
use crate::forward::{ForwardModel, Pair};
use crate::recon::Reconstructor;

/// Images scored in parallel per batch before the ordered reduction.
const BATCH: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub theta: f64,
    pub delta: f64,
    pub keep_per_image: bool,
    pub standardization: Standardization,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            theta: 1.0,
            delta: 0.05,
            keep_per_image: false,
            standardization: Standardization::AcrossCoefficients,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: ChemReport,
    /// Mean pixel MSE between `Φ(X)` and `Y`.
    pub mse: f64,
    /// Mean `H^θ(Φ)_j` per scale, finest first, approximation last.
    pub scale_chem: Vec<f64>,
}

/// Scores `model` on `pairs` against calibrated radii.
pub fn evaluate(
    pairs: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
    cal: &RadiusModel,
    opts: &EvalOptions,
) -> Result<Evaluation> {
    if features.spec() != &cal.features {
        return Err(ChemError::LayoutMismatch(
            "calibration was fitted with a different transform or normalization".into(),
        ));
    }
    let radii = cal.half_widths();
    let mut acc = ScoreAccumulator::new(features.len(), opts.theta, opts.keep_per_image)?;
    let mut mse_sum = 0.0;
    for batch in pairs.chunks(BATCH) {
        let scored = batch
            .par_iter()
            .map(|p| {
                let pred = model.reconstruct(&p.x, forward)?;
                let mse = pred.mse(&p.y)?;
                let scores = chem_per_coefficient(
                    &features.coefficients(&pred)?,
                    &features.coefficients(&p.y)?,
                    &radii,
                    opts.theta,
                )?;
                Ok((scores, mse))
            })
            .collect::<Result<Vec<_>>>()?;
        for (scores, mse) in scored {
            acc.push(scores)?;
            mse_sum += mse;
        }
    }
    let report = acc.finish(cal.alpha, opts.delta, opts.standardization)?;
    Ok(Evaluation {
        mse: mse_sum / pairs.len() as f64,
        scale_chem: scale_means(&report.per_coefficient, features.layout()),
        report,
    })
}
