use super::spectral::Spectra;
use crate::error::{invalid, Result};
use crate::forward::Psf;
use crate::image::Image;

/// Fourier Wiener filter `conj(ĥ) ŷ / (|ĥ|² + 1/snr)` with a flat spectral
/// signal-to-noise ratio.
pub fn wiener_deconvolve(y: &Image, psf: &Psf, snr: f64) -> Result<Image> {
    if !(snr > 0.0) {
        return Err(invalid(format!("Wiener snr must be positive, got {snr}")));
    }
    let s = Spectra::new(y, psf)?;
    let damping = vec![1.0 / snr; y.len()];
    s.solve(y, &damping)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::gaussian_psf;
    use crate::recon::{dense, tikhonov_deconvolve, Gamma};
    use nalgebra::{DMatrix, DVector};

    fn sample(n: usize) -> Image {
        Image::from_fn(n, n, |r, c| ((r * 5 + c * 3) % 7) as f64 - 3.0)
    }

    #[test]
    fn delta_psf_scales_input() {
        let y = sample(8);
        for snr in [1.0, 100.0, 1e12] {
            let x = wiener_deconvolve(&y, &Psf::delta(8), snr).unwrap();
            let expect = y.map(|v| v * snr / (snr + 1.0));
            assert!(x.max_abs_diff(&expect) < 1e-12);
        }
        let x = wiener_deconvolve(&y, &Psf::delta(8), 1e12).unwrap();
        assert!(x.max_abs_diff(&y) < 1e-9);
    }

    #[test]
    fn matches_dense_formula_and_tikhonov() {
        let y = sample(8);
        let psf = gaussian_psf(8, 2.0).unwrap();
        let x = wiener_deconvolve(&y, &psf, 50.0).unwrap();
        let h = dense::convolution_matrix(&psf);
        let a = h.transpose() * &h + DMatrix::identity(64, 64) / 50.0;
        let oracle = a.lu().solve(&(h.transpose() * DVector::from_column_slice(y.data()))).unwrap();
        assert!((DVector::from_column_slice(x.data()) - oracle).amax() < 1e-8);
        let t = tikhonov_deconvolve(&y, &psf, 1.0 / 50.0, Gamma::Identity).unwrap();
        assert!(t.max_abs_diff(&x) < 1e-12);
    }

    #[test]
    fn zero_in_zero_out() {
        let psf = gaussian_psf(8, 2.0).unwrap();
        let x = wiener_deconvolve(&Image::zeros(8, 8), &psf, 10.0).unwrap();
        assert!(x.data().iter().all(|&v| v == 0.0));
        assert!(wiener_deconvolve(&Image::zeros(8, 8), &psf, 0.0).is_err());
    }
}
