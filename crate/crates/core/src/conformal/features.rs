use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ChemError, Result};
use crate::image::Image;
use crate::transforms::{CoefficientField, SubbandLayout, SubbandRms, Transform, TransformPlan, TransformSpec};

/// Serializable description of the coefficient map `Y ↦ Ŷ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub transform: TransformSpec,
    pub rows: usize,
    pub cols: usize,
    /// Subband RMS statistics; `None` keeps raw coefficients.
    pub normalization: Option<SubbandRms>,
}

/// Transform plus optional subband RMS normalization, bound to one grid.
#[derive(Debug, Clone)]
pub struct Featurizer {
    spec: FeatureSpec,
    transform: Transform,
    plan: TransformPlan,
    layout: SubbandLayout,
}

impl Featurizer {
    pub fn new(transform: &TransformSpec, rows: usize, cols: usize) -> Result<Self> {
        Self::from_spec(FeatureSpec {
            transform: transform.clone(),
            rows,
            cols,
            normalization: None,
        })
    }

    pub fn from_spec(spec: FeatureSpec) -> Result<Self> {
        let transform = Transform::new(&spec.transform)?;
        let plan = transform.plan(spec.rows, spec.cols)?;
        let layout = transform.layout(spec.rows, spec.cols)?;
        if let Some(n) = &spec.normalization {
            if n.rms.len() != layout.subbands().len() || n.guarded.len() != n.rms.len() {
                return Err(ChemError::LayoutMismatch(
                    "normalization statistics do not match the layout".into(),
                ));
            }
        }
        Ok(Self {
            spec,
            transform,
            plan,
            layout,
        })
    }

    /// Fits subband RMS statistics on the raw coefficients of `images`.
    pub fn fit_rms(mut self, images: &[&Image]) -> Result<Self> {
        let raw = Self::new(&self.spec.transform, self.spec.rows, self.spec.cols)?;
        let fields = images
            .par_iter()
            .map(|img| raw.coefficients(img))
            .collect::<Result<Vec<_>>>()?;
        self.spec.normalization = Some(SubbandRms::fit(&fields)?);
        Ok(self)
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn transform(&self) -> &Transform {
        &self.transform
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.layout.total_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coefficients(&self, img: &Image) -> Result<CoefficientField> {
        if img.shape() != (self.spec.rows, self.spec.cols) {
            return Err(ChemError::Dimension(format!(
                "featurizer expects {}x{}, got {}x{}",
                self.spec.rows,
                self.spec.cols,
                img.height(),
                img.width()
            )));
        }
        let raw = self.plan.forward(img)?;
        match &self.spec.normalization {
            Some(n) => n.apply(&raw),
            None => Ok(raw),
        }
    }

    /// Inverse of [`Self::coefficients`].
    pub fn inverse(&self, coef: &CoefficientField) -> Result<Image> {
        if !coef.layout().same_shape(&self.layout) || coef.layout().transform != self.spec.transform {
            return Err(ChemError::LayoutMismatch("field does not come from this featurizer".into()));
        }
        self.plan.inverse(coef)
    }
}
