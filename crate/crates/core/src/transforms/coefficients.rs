use serde::{Deserialize, Serialize};

use super::layout::SubbandLayout;
use crate::error::{ChemError, Result};

/// Normalization applied to a coefficient vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Normalization {
    Raw,
    /// Each subband divided by a stored RMS; guarded subbands were passed through.
    SubbandRms { rms: Vec<f64>, guarded: Vec<bool> },
}

/// Flattened transform coefficients with their layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientField {
    layout: SubbandLayout,
    values: Vec<f64>,
    normalization: Normalization,
}

impl CoefficientField {
    pub fn new(layout: SubbandLayout, values: Vec<f64>) -> Result<Self> {
        Self::with_normalization(layout, values, Normalization::Raw)
    }

    pub fn with_normalization(
        layout: SubbandLayout,
        values: Vec<f64>,
        normalization: Normalization,
    ) -> Result<Self> {
        if values.len() != layout.total_len() {
            return Err(ChemError::LayoutMismatch(format!(
                "{} values for a layout of {} coefficients",
                values.len(),
                layout.total_len()
            )));
        }
        if let Normalization::SubbandRms { rms, guarded } = &normalization {
            let n = layout.subbands().len();
            if rms.len() != n || guarded.len() != n {
                return Err(ChemError::LayoutMismatch(
                    "normalization record does not match subband count".into(),
                ));
            }
            if rms.iter().zip(guarded).any(|(&r, &g)| !g && !(r > 0.0)) {
                return Err(ChemError::InvalidInput(
                    "unguarded subband RMS must be positive".into(),
                ));
            }
        }
        Ok(Self {
            layout,
            values,
            normalization,
        })
    }

    pub fn zeros(layout: SubbandLayout) -> Self {
        let n = layout.total_len();
        Self {
            layout,
            values: vec![0.0; n],
            normalization: Normalization::Raw,
        }
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn is_normalized(&self) -> bool {
        !matches!(self.normalization, Normalization::Raw)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn subband_values(&self, band: usize) -> &[f64] {
        &self.values[self.layout.subbands()[band].range()]
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn check_compatible(&self, other: &CoefficientField) -> Result<()> {
        if self.layout != other.layout {
            return Err(ChemError::LayoutMismatch(
                "coefficient fields have different layouts".into(),
            ));
        }
        if self.normalization != other.normalization {
            return Err(ChemError::LayoutMismatch(
                "coefficient fields have different normalization".into(),
            ));
        }
        Ok(())
    }

    /// Copy with coefficients outside `keep` set to zero.
    pub fn filtered(&self, keep: impl Fn(usize) -> bool) -> CoefficientField {
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            if !keep(j) {
                *v = 0.0;
            }
        }
        out
    }
}
