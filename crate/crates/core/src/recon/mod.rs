//! Reconstruction models: classical deconvolvers and a hallucination injector.

#[cfg(test)]
mod dense;
mod hallucinator;
mod registry;
mod shrink;
mod spectral;
mod tikhonov;
mod wiener;

use std::fmt::Debug;

pub use hallucinator::{inject_texture, Hallucinator, Placement, Texture};
pub use registry::parse_reconstructor;
pub use shrink::wavelet_soft_threshold;
pub use spectral::Gamma;
pub use tikhonov::{
    default_sure_grid, log_grid, sure_select_lambda, sure_value, tikhonov_deconvolve,
    tikhonov_divergence, Lambda, SureCurve, TikhonovConfig,
};
pub use wiener::wiener_deconvolve;

use crate::error::Result;
use crate::forward::ForwardModel;
use crate::image::Image;
use crate::transforms::TransformSpec;

/// A model `Φ` mapping an observation to an estimate of the scene.
pub trait Reconstructor: Debug + Send + Sync {
    /// Identifier that [`parse_reconstructor`] maps back to an equal model.
    fn id(&self) -> String;

    fn is_deterministic(&self) -> bool {
        true
    }

    fn reconstruct(&self, y: &Image, model: &ForwardModel) -> Result<Image>;
}

/// Returns the observation unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl Reconstructor for Identity {
    fn id(&self) -> String {
        "identity".into()
    }

    fn reconstruct(&self, y: &Image, _: &ForwardModel) -> Result<Image> {
        Ok(y.clone())
    }
}

#[derive(Debug, Clone)]
pub struct Tikhonov {
    pub config: TikhonovConfig,
}

impl Tikhonov {
    pub fn new(config: TikhonovConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    /// λ used for `y`. SURE falls back to the smallest grid value when the
    /// model is noiseless.
    pub fn lambda_for(&self, y: &Image, model: &ForwardModel) -> Result<f64> {
        match self.config.lambda {
            Lambda::Fixed { value } => Ok(value),
            Lambda::Sure => {
                let grid = default_sure_grid(&model.psf);
                if model.noise_sigma > 0.0 {
                    Ok(sure_select_lambda(y, &model.psf, model.noise_sigma, &grid, self.config.gamma)?.lambda)
                } else {
                    Ok(grid[0])
                }
            }
        }
    }

    fn args(&self) -> String {
        let lambda = match self.config.lambda {
            Lambda::Fixed { value } => format!("lambda={value}"),
            Lambda::Sure => "sure".into(),
        };
        format!("{lambda},gamma={}", self.config.gamma.name())
    }
}

impl Reconstructor for Tikhonov {
    fn id(&self) -> String {
        format!("tikhonov:{}", self.args())
    }

    fn reconstruct(&self, y: &Image, model: &ForwardModel) -> Result<Image> {
        let lambda = self.lambda_for(y, model)?;
        tikhonov_deconvolve(y, &model.psf, lambda, self.config.gamma)
    }
}

#[derive(Debug, Clone)]
pub struct Wiener {
    pub snr: f64,
}

impl Reconstructor for Wiener {
    fn id(&self) -> String {
        format!("wiener:snr={}", self.snr)
    }

    fn reconstruct(&self, y: &Image, model: &ForwardModel) -> Result<Image> {
        wiener_deconvolve(y, &model.psf, self.snr)
    }
}

/// Two-stage model: Tikhonov deconvolution followed by wavelet soft-thresholding.
#[derive(Debug, Clone)]
pub struct TikhonovShrink {
    pub tikhonov: Tikhonov,
    pub wavelet: TransformSpec,
    pub factor: f64,
}

impl Reconstructor for TikhonovShrink {
    fn id(&self) -> String {
        let w = match &self.wavelet {
            TransformSpec::Wavelet { family, levels } => format!("wavelet={},levels={levels}", family.name()),
            other => format!("wavelet={}", other.id()),
        };
        format!("tikhonov-soft:{},{w},factor={}", self.tikhonov.args(), self.factor)
    }

    fn reconstruct(&self, y: &Image, model: &ForwardModel) -> Result<Image> {
        let x = self.tikhonov.reconstruct(y, model)?;
        wavelet_soft_threshold(&x, &self.wavelet, self.factor)
    }
}
