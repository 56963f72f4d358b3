use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fft::Fft2;
use crate::image::Image;

/// `FWHM = 2√(2 ln 2) σ` for a Gaussian.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// A normalized point spread function on the image grid.
///
/// The kernel is stored centred; convolution treats pixel `(⌊h/2⌋, ⌊w/2⌋)`
/// as the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Psf {
    kernel: Image,
    fwhm: f64,
    sigma: f64,
}

/// Gaussian PSF sampled at `(k, l)`, centred at `((n+1)/2, (n+1)/2)` in
/// one-based pixel indices, normalized to unit sum.
pub fn gaussian_psf(side: usize, fwhm: f64) -> Result<Psf> {
    if side == 0 {
        return Err(invalid("PSF side must be >= 1"));
    }
    if !(fwhm > 0.0) || !fwhm.is_finite() {
        return Err(invalid(format!("FWHM must be positive, got {fwhm}")));
    }
    let sigma = fwhm_to_sigma(fwhm);
    let center = (side as f64 + 1.0) / 2.0;
    let two_var = 2.0 * sigma * sigma;
    let raw = Image::from_fn(side, side, |r, c| {
        let dk = (r + 1) as f64 - center;
        let dl = (c + 1) as f64 - center;
        (-(dk * dk + dl * dl) / two_var).exp()
    });
    let total = raw.sum();
    Ok(Psf {
        kernel: raw.map(|v| v / total),
        fwhm,
        sigma,
    })
}

impl Psf {
    /// Discrete identity kernel: a unit impulse at the convolution origin.
    pub fn delta(side: usize) -> Self {
        let mut kernel = Image::zeros(side, side);
        kernel.set(side / 2, side / 2, 1.0);
        Self {
            kernel,
            fwhm: 0.0,
            sigma: 0.0,
        }
    }

    /// Arbitrary non-negative kernel, rescaled to unit sum.
    pub fn from_kernel(kernel: Image) -> Result<Self> {
        if kernel.data().iter().any(|&v| v < 0.0) {
            return Err(invalid("PSF kernel must be non-negative"));
        }
        let total = kernel.sum();
        if !(total > 0.0) {
            return Err(invalid("PSF kernel has zero mass"));
        }
        Ok(Self {
            kernel: kernel.map(|v| v / total),
            fwhm: f64::NAN,
            sigma: f64::NAN,
        })
    }

    pub fn kernel(&self) -> &Image {
        &self.kernel
    }

    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn shape(&self) -> (usize, usize) {
        self.kernel.shape()
    }

    /// True when the kernel is a unit impulse at the origin pixel.
    pub fn is_identity(&self) -> bool {
        let (h, w) = self.kernel.shape();
        let o = (h / 2) * w + w / 2;
        self.kernel
            .data()
            .iter()
            .enumerate()
            .all(|(i, &v)| v == if i == o { 1.0 } else { 0.0 })
    }

    /// Kernel rolled so that the convolution origin sits at pixel (0, 0).
    pub fn origin_kernel(&self) -> Image {
        let (h, w) = self.kernel.shape();
        self.kernel.roll(-((h / 2) as isize), -((w / 2) as isize))
    }

    /// Frequency response `ĥ` of the circulant convolution operator.
    pub fn transfer(&self) -> Vec<Complex64> {
        let (h, w) = self.kernel.shape();
        Fft2::new(h, w).forward_image(&self.origin_kernel())
    }
}

/// Circular convolution `h * x` through the FFT.
pub fn convolve(x: &Image, psf: &Psf) -> Result<Image> {
    x.check_same_shape(psf.kernel())?;
    if psf.is_identity() {
        return Ok(x.clone());
    }
    let fft = Fft2::new(x.height(), x.width());
    let mut spec = fft.forward_image(x);
    for (s, h) in spec.iter_mut().zip(psf.transfer()) {
        *s *= h;
    }
    Ok(fft.inverse_real(spec))
}
