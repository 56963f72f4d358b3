//! Multiscale transforms: orthonormal wavelets and a band-limited shearlet frame.

mod coefficients;
mod layout;
mod normalize;
mod shearlet;
mod wavelet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use coefficients::{CoefficientField, Normalization};
pub use layout::{Cone, Orientation, Subband, SubbandLayout};
pub use normalize::{denormalize, subband_rms_normalize, SubbandRms, RMS_EPSILON};
pub use shearlet::{shearlet_forward, shearlet_inverse, ShearletSpec, ShearletSystem};
pub use wavelet::{
    check_wavelet_shape, dwt_forward, dwt_inverse, wavelet_layout, WaveletFamily, WaveletSpec,
    FILTER_TOLERANCE,
};

use crate::error::{ChemError, Result};
use crate::image::Image;

/// Serializable description of a transform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransformSpec {
    Wavelet { family: WaveletFamily, levels: usize },
    Shearlet { scales: usize, shear_levels: Vec<u32> },
}

impl Default for TransformSpec {
    fn default() -> Self {
        TransformSpec::Wavelet {
            family: WaveletFamily::Db8,
            levels: 4,
        }
    }
}

impl TransformSpec {
    /// Short identifier such as `db8-J4` or `shearlet-S3-1.2.2`.
    pub fn id(&self) -> String {
        match self {
            TransformSpec::Wavelet { family, levels } => format!("{}-J{levels}", family.name()),
            TransformSpec::Shearlet {
                scales,
                shear_levels,
            } => {
                let l: Vec<String> = shear_levels.iter().map(u32::to_string).collect();
                format!("shearlet-S{scales}-{}", l.join("."))
            }
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("transform spec serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Parses `haar:4`, `db8:4`, `shearlet` or `shearlet:3:1,2,2`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        if head.eq_ignore_ascii_case("shearlet") {
            let scales = match parts.next() {
                Some(v) => v
                    .parse()
                    .map_err(|_| ChemError::InvalidInput(format!("bad scale count in {s:?}")))?,
                None => 3,
            };
            let shear_levels = match parts.next() {
                Some(v) => v
                    .split(',')
                    .map(|x| x.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| ChemError::InvalidInput(format!("bad shear levels in {s:?}")))?,
                None => ShearletSpec::default().shear_levels,
            };
            let spec = ShearletSpec::new(scales, shear_levels)?;
            return Ok(TransformSpec::Shearlet {
                scales: spec.scales,
                shear_levels: spec.shear_levels,
            });
        }
        let family: WaveletFamily = head.parse()?;
        let levels = match parts.next() {
            Some(v) => v
                .parse()
                .map_err(|_| ChemError::InvalidInput(format!("bad level count in {s:?}")))?,
            None => 4,
        };
        Ok(TransformSpec::Wavelet { family, levels })
    }

    pub fn build(&self) -> Result<Transform> {
        Transform::new(self)
    }
}

/// A ready-to-use transform.
#[derive(Debug, Clone)]
pub enum Transform {
    Wavelet { spec: WaveletSpec, levels: usize },
    Shearlet(ShearletSpec),
}

impl Transform {
    pub fn new(spec: &TransformSpec) -> Result<Self> {
        match spec {
            TransformSpec::Wavelet { family, levels } => Ok(Transform::Wavelet {
                spec: WaveletSpec::new(*family)?,
                levels: *levels,
            }),
            TransformSpec::Shearlet {
                scales,
                shear_levels,
            } => Ok(Transform::Shearlet(ShearletSpec::new(
                *scales,
                shear_levels.clone(),
            )?)),
        }
    }

    pub fn spec(&self) -> TransformSpec {
        match self {
            Transform::Wavelet { spec, levels } => TransformSpec::Wavelet {
                family: spec.family(),
                levels: *levels,
            },
            Transform::Shearlet(s) => TransformSpec::Shearlet {
                scales: s.scales,
                shear_levels: s.shear_levels.clone(),
            },
        }
    }

    pub fn check_image(&self, rows: usize, cols: usize) -> Result<()> {
        match self {
            Transform::Wavelet { levels, .. } => check_wavelet_shape(rows, cols, *levels),
            Transform::Shearlet(s) => s.check_image(rows, cols),
        }
    }

    /// Layout produced for a `rows × cols` image.
    pub fn layout(&self, rows: usize, cols: usize) -> Result<SubbandLayout> {
        match self {
            Transform::Wavelet { spec, levels } => wavelet_layout(spec.family(), rows, cols, *levels),
            Transform::Shearlet(s) => {
                s.check_image(rows, cols)?;
                Ok(ShearletSystem::new(s, rows)?.layout().clone())
            }
        }
    }

    /// Precomputes whatever the transform needs for a given grid.
    pub fn plan(&self, rows: usize, cols: usize) -> Result<TransformPlan> {
        self.check_image(rows, cols)?;
        Ok(match self {
            Transform::Wavelet { spec, levels } => TransformPlan::Wavelet {
                spec: spec.clone(),
                levels: *levels,
            },
            Transform::Shearlet(s) => TransformPlan::Shearlet(Box::new(ShearletSystem::new(s, rows)?)),
        })
    }

    pub fn forward(&self, img: &Image) -> Result<CoefficientField> {
        self.plan(img.height(), img.width())?.forward(img)
    }

    /// Inverse transform; RMS-normalized fields are denormalized first.
    pub fn inverse(&self, coef: &CoefficientField) -> Result<Image> {
        let layout = coef.layout();
        if layout.transform != self.spec() {
            return Err(ChemError::LayoutMismatch(format!(
                "layout built by {} given to {}",
                layout.transform.id(),
                self.spec().id()
            )));
        }
        self.plan(layout.image_rows, layout.image_cols)?.inverse(coef)
    }
}

/// A transform bound to one image grid (shearlet windows precomputed).
#[derive(Debug, Clone)]
pub enum TransformPlan {
    Wavelet { spec: WaveletSpec, levels: usize },
    Shearlet(Box<ShearletSystem>),
}

impl TransformPlan {
    pub fn forward(&self, img: &Image) -> Result<CoefficientField> {
        match self {
            TransformPlan::Wavelet { spec, levels } => dwt_forward(img, spec, *levels),
            TransformPlan::Shearlet(sys) => sys.forward(img),
        }
    }

    pub fn inverse(&self, coef: &CoefficientField) -> Result<Image> {
        let raw;
        let coef = if coef.is_normalized() {
            raw = denormalize(coef)?;
            &raw
        } else {
            coef
        };
        match self {
            TransformPlan::Wavelet { spec, .. } => dwt_inverse(coef, spec),
            TransformPlan::Shearlet(sys) => sys.inverse(coef),
        }
    }
}

/// Zeroes every coefficient rejected by `keep(j, subband)` and inverts.
pub fn reconstruct_filtered(
    coef: &CoefficientField,
    keep: impl Fn(usize, &Subband) -> bool,
    transform: &Transform,
) -> Result<Image> {
    let layout = coef.layout();
    let filtered = coef.filtered(|j| keep(j, layout.subband_of(j)));
    transform.inverse(&filtered)
}
