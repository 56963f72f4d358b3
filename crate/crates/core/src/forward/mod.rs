//! Synthetic scenes and the degradation `y = h * x + η`.

mod dataset;
mod psf;
mod scene;

use serde::{Deserialize, Serialize};

pub use dataset::{
    degrade, derive_seed, make_dataset, Dataset, DatasetManifest, DegradationConfig,
    DegradationSpec, NoiseRule, Normalization, Pair, PairRecord, Splits,
};
pub use psf::{convolve, fwhm_to_sigma, gaussian_psf, Psf};
pub use scene::{render_sources, synthesize_scene, Profile, SceneConfig, Source};

/// What a reconstructor is told about the acquisition: PSF and noise level,
/// both in model-space units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardModel {
    pub psf: Psf,
    pub noise_sigma: f64,
}
