use num_complex::Complex64;

use crate::error::{ChemError, Result};
use crate::fft::Fft2;
use crate::forward::Psf;
use crate::image::Image;

/// Relative floor below which a denominator counts as vanishing.
pub(crate) const SINGULAR_TOLERANCE: f64 = 1e-24;

/// Regularization operator `Γ` of a quadratic penalty `λ‖Γx‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// Periodic 5-point Laplacian.
    #[default]
    Laplacian,
    Identity,
}

impl Gamma {
    pub fn name(&self) -> &'static str {
        match self {
            Gamma::Laplacian => "laplacian",
            Gamma::Identity => "identity",
        }
    }

    /// `|Γ̂|²` on an `h × w` grid, row-major.
    pub fn power(&self, h: usize, w: usize) -> Vec<f64> {
        match self {
            Gamma::Identity => vec![1.0; h * w],
            Gamma::Laplacian => {
                let tau = std::f64::consts::TAU;
                let mut out = Vec::with_capacity(h * w);
                for k in 0..h {
                    let a = 2.0 - 2.0 * (tau * k as f64 / h as f64).cos();
                    for l in 0..w {
                        let b = 2.0 - 2.0 * (tau * l as f64 / w as f64).cos();
                        out.push((a + b) * (a + b));
                    }
                }
                out
            }
        }
    }
}

/// Fourier-diagonal data needed by every linear deconvolver.
pub(crate) struct Spectra {
    pub fft: Fft2,
    pub h: Vec<Complex64>,
    pub h2: Vec<f64>,
}

impl Spectra {
    pub fn new(y: &Image, psf: &Psf) -> Result<Self> {
        y.check_same_shape(psf.kernel())?;
        let h = psf.transfer();
        let h2 = h.iter().map(|z| z.norm_sqr()).collect();
        Ok(Self {
            fft: Fft2::new(y.height(), y.width()),
            h,
            h2,
        })
    }

    /// `x̂ = conj(ĥ) ŷ / (|ĥ|² + d_k)`.
    pub fn solve(&self, y: &Image, damping: &[f64]) -> Result<Image> {
        let denom: Vec<f64> = self.h2.iter().zip(damping).map(|(a, b)| a + b).collect();
        let peak = denom.iter().copied().fold(0.0, f64::max);
        if let Some(k) = denom.iter().position(|&d| !(d > SINGULAR_TOLERANCE * peak)) {
            return Err(ChemError::Singular(format!(
                "normal equations vanish at frequency bin {k}"
            )));
        }
        let mut spec = self.fft.forward_image(y);
        for ((s, h), d) in spec.iter_mut().zip(&self.h).zip(&denom) {
            *s = *s * h.conj() / *d;
        }
        Ok(self.fft.inverse_real(spec))
    }
}
