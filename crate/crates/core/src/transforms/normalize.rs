use serde::{Deserialize, Serialize};

use super::coefficients::{CoefficientField, Normalization};
use super::layout::SubbandLayout;
use crate::error::{ChemError, Result};

/// Subbands whose RMS does not exceed this are left unscaled and flagged.
pub const RMS_EPSILON: f64 = 1e-12;

/// Per-subband RMS statistics fitted on a reference set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubbandRms {
    pub rms: Vec<f64>,
    pub guarded: Vec<bool>,
}

impl SubbandRms {
    /// RMS of each subband pooled over all `fields`.
    pub fn fit<'a>(fields: impl IntoIterator<Item = &'a CoefficientField>) -> Result<Self> {
        let mut layout: Option<&SubbandLayout> = None;
        let mut sums: Vec<f64> = Vec::new();
        let mut count = 0usize;
        for field in fields {
            if field.is_normalized() {
                return Err(ChemError::InvalidInput(
                    "RMS statistics must be fitted on raw coefficients".into(),
                ));
            }
            match layout {
                None => {
                    layout = Some(field.layout());
                    sums = vec![0.0; field.layout().subbands().len()];
                }
                Some(l) if l != field.layout() => {
                    return Err(ChemError::LayoutMismatch(
                        "reference fields have different layouts".into(),
                    ))
                }
                Some(_) => {}
            }
            for (b, s) in sums.iter_mut().enumerate() {
                *s += field.subband_values(b).iter().map(|v| v * v).sum::<f64>();
            }
            count += 1;
        }
        let layout = layout.ok_or_else(|| ChemError::InvalidInput("no reference fields".into()))?;
        let rms: Vec<f64> = sums
            .iter()
            .zip(layout.subbands())
            .map(|(s, b)| (s / (count * b.len()) as f64).sqrt())
            .collect();
        let guarded = rms.iter().map(|&r| r <= RMS_EPSILON).collect();
        Ok(Self { rms, guarded })
    }

    fn divisor(&self, band: usize) -> f64 {
        if self.guarded[band] {
            1.0
        } else {
            self.rms[band]
        }
    }

    /// Divides each subband by its stored RMS. A field already normalized with
    /// these statistics is returned unchanged.
    pub fn apply(&self, field: &CoefficientField) -> Result<CoefficientField> {
        match field.normalization() {
            Normalization::SubbandRms { rms, guarded } => {
                if rms == &self.rms && guarded == &self.guarded {
                    return Ok(field.clone());
                }
                return Err(ChemError::InvalidInput(
                    "field is normalized with different statistics".into(),
                ));
            }
            Normalization::Raw => {}
        }
        let bands = field.layout().subbands();
        if bands.len() != self.rms.len() {
            return Err(ChemError::LayoutMismatch(
                "RMS statistics do not match the subband count".into(),
            ));
        }
        let mut values = field.values().to_vec();
        for (b, band) in bands.iter().enumerate() {
            let d = self.divisor(b);
            for v in &mut values[band.range()] {
                *v /= d;
            }
        }
        CoefficientField::with_normalization(
            field.layout().clone(),
            values,
            Normalization::SubbandRms {
                rms: self.rms.clone(),
                guarded: self.guarded.clone(),
            },
        )
    }
}

/// Fits RMS statistics on `field` itself and applies them.
pub fn subband_rms_normalize(field: &CoefficientField) -> Result<CoefficientField> {
    if field.is_normalized() {
        return Ok(field.clone());
    }
    SubbandRms::fit([field])?.apply(field)
}

/// Undoes subband RMS normalization; raw fields pass through.
pub fn denormalize(field: &CoefficientField) -> Result<CoefficientField> {
    let Normalization::SubbandRms { rms, guarded } = field.normalization() else {
        return Ok(field.clone());
    };
    let stats = SubbandRms {
        rms: rms.clone(),
        guarded: guarded.clone(),
    };
    let mut values = field.values().to_vec();
    for (b, band) in field.layout().subbands().iter().enumerate() {
        let d = stats.divisor(b);
        for v in &mut values[band.range()] {
            *v *= d;
        }
    }
    CoefficientField::new(field.layout().clone(), values)
}
