use serde::{Deserialize, Serialize};

use super::spectral::{Gamma, Spectra};
use crate::error::{invalid, Result};
use crate::forward::{convolve, Psf};
use crate::image::Image;

/// Regularization weight: fixed or chosen per image by SURE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Lambda {
    Fixed { value: f64 },
    Sure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TikhonovConfig {
    pub lambda: Lambda,
    #[serde(default)]
    pub gamma: Gamma,
}

impl Default for TikhonovConfig {
    fn default() -> Self {
        Self {
            lambda: Lambda::Sure,
            gamma: Gamma::Laplacian,
        }
    }
}

impl TikhonovConfig {
    pub fn fixed(value: f64) -> Self {
        Self {
            lambda: Lambda::Fixed { value },
            gamma: Gamma::Laplacian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Lambda::Fixed { value } = self.lambda {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(invalid(format!("lambda must be finite and >= 0, got {value}")));
            }
        }
        Ok(())
    }
}

/// Solves `(HᵀH + λΓᵀΓ) x = Hᵀ y` exactly in the Fourier domain.
pub fn tikhonov_deconvolve(y: &Image, psf: &Psf, lambda: f64, gamma: Gamma) -> Result<Image> {
    TikhonovConfig {
        lambda: Lambda::Fixed { value: lambda },
        gamma,
    }
    .validate()?;
    let s = Spectra::new(y, psf)?;
    let damping: Vec<f64> = gamma
        .power(y.height(), y.width())
        .into_iter()
        .map(|g| lambda * g)
        .collect();
    s.solve(y, &damping)
}

/// Default SURE grid: 40 log-spaced points over `[1e-6, 1e2] · mean |ĥ|²`.
pub fn default_sure_grid(psf: &Psf) -> Vec<f64> {
    let h = psf.transfer();
    let mean = h.iter().map(|z| z.norm_sqr()).sum::<f64>() / h.len() as f64;
    log_grid(1e-6 * mean, 1e2 * mean, 40)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SureCurve {
    pub grid: Vec<f64>,
    pub sure: Vec<f64>,
    pub index: usize,
    pub lambda: f64,
}

/// Divergence `tr(H A_λ) = Σ_k |ĥ_k|² / (|ĥ_k|² + λ|Γ̂_k|²)` of the predictor `y ↦ H x̂_λ(y)`.
pub fn tikhonov_divergence(psf: &Psf, lambda: f64, gamma: Gamma) -> f64 {
    let (h, w) = psf.shape();
    psf.transfer()
        .iter()
        .zip(gamma.power(h, w))
        .map(|(z, g)| {
            let a = z.norm_sqr();
            let d = a + lambda * g;
            if d > 0.0 {
                a / d
            } else {
                0.0
            }
        })
        .sum()
}

/// SURE of the prediction risk `E‖H x̂_λ − H x‖²`:
/// `‖y − H x̂_λ‖² − nσ² + 2σ² tr(H A_λ)`.
pub fn sure_value(y: &Image, psf: &Psf, noise_sigma: f64, lambda: f64, gamma: Gamma) -> Result<f64> {
    let x = tikhonov_deconvolve(y, psf, lambda, gamma)?;
    let fit = convolve(&x, psf)?;
    let rss: f64 = fit.data().iter().zip(y.data()).map(|(a, b)| (a - b) * (a - b)).sum();
    let s2 = noise_sigma * noise_sigma;
    Ok(rss - y.len() as f64 * s2 + 2.0 * s2 * tikhonov_divergence(psf, lambda, gamma))
}

/// Grid argmin of SURE; ties go to the smaller λ.
pub fn sure_select_lambda(
    y: &Image,
    psf: &Psf,
    noise_sigma: f64,
    grid: &[f64],
    gamma: Gamma,
) -> Result<SureCurve> {
    if grid.is_empty() {
        return Err(invalid("SURE grid is empty"));
    }
    if !(noise_sigma > 0.0) {
        return Err(invalid("SURE needs a positive noise level"));
    }
    if grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(invalid("SURE grid values must be positive"));
    }
    let sure = grid
        .iter()
        .map(|&l| sure_value(y, psf, noise_sigma, l, gamma))
        .collect::<Result<Vec<f64>>>()?;
    let index = sure
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v < sure[best] { i } else { best });
    Ok(SureCurve {
        grid: grid.to_vec(),
        lambda: grid[index],
        index,
        sure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::gaussian_psf;
    use crate::recon::dense;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_image(n: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn delta_psf_without_regularization_is_identity() {
        let y = random_image(8, 1);
        let x = tikhonov_deconvolve(&y, &Psf::delta(8), 0.0, Gamma::Laplacian).unwrap();
        assert!(x.max_abs_diff(&y) < 1e-14);
    }

    #[test]
    fn matches_dense_normal_equations() {
        let y = random_image(8, 2);
        let psf = gaussian_psf(8, 3.0).unwrap();
        for gamma in [Gamma::Laplacian, Gamma::Identity] {
            let x = tikhonov_deconvolve(&y, &psf, 0.1, gamma).unwrap();
            let h = dense::convolution_matrix(&psf);
            let g = dense::gamma_matrix(gamma, 8, 8);
            let a = h.transpose() * &h + 0.1 * g.transpose() * &g;
            let rhs = h.transpose() * DVector::from_column_slice(y.data());
            let oracle = a.clone().lu().solve(&rhs).unwrap();
            let xv = DVector::from_column_slice(x.data());
            assert!((&xv - &oracle).amax() < 1e-8);
            let residual = &a * &xv - &rhs;
            assert!(residual.amax() < 1e-8 * y.data().iter().fold(0.0f64, |m, v| m.max(v.abs())));
        }
    }

    #[test]
    fn near_zero_lambda_inverts_well_conditioned_blur() {
        // odd side keeps the kernel centred on a pixel, so ĥ is real and positive
        let x = random_image(15, 3);
        let psf = gaussian_psf(15, 1.0).unwrap();
        assert!(psf.transfer().iter().all(|z| z.re > 0.05 && z.im.abs() < 1e-12));
        let y = convolve(&x, &psf).unwrap();
        let xh = tikhonov_deconvolve(&y, &psf, 1e-10, Gamma::Laplacian).unwrap();
        assert!(xh.max_abs_diff(&x) < 1e-4);
    }

    #[test]
    fn vanishing_response_is_singular() {
        let mut k = Image::zeros(8, 8);
        k.set(4, 4, 0.5);
        k.set(4, 5, 0.5);
        let psf = Psf::from_kernel(k).unwrap();
        let y = random_image(8, 4);
        assert!(matches!(
            tikhonov_deconvolve(&y, &psf, 0.0, Gamma::Laplacian),
            Err(crate::ChemError::Singular(_))
        ));
        assert!(tikhonov_deconvolve(&y, &psf, 1e-3, Gamma::Laplacian).is_ok());
        assert!(tikhonov_deconvolve(&y, &psf, -1.0, Gamma::Laplacian).is_err());
    }

    #[test]
    fn data_fit_is_non_decreasing_in_lambda() {
        let x = random_image(16, 5);
        let psf = gaussian_psf(16, 4.0).unwrap();
        let y = convolve(&x, &psf).unwrap();
        let mut last = 0.0;
        for l in log_grid(1e-6, 1e2, 30) {
            let xh = tikhonov_deconvolve(&y, &psf, l, Gamma::Laplacian).unwrap();
            let fit = convolve(&xh, &psf).unwrap();
            let err = fit.mse(&y).unwrap();
            assert!(err >= last * (1.0 - 1e-9));
            last = err;
        }
    }

    #[test]
    fn divergence_matches_dense_trace() {
        let psf = gaussian_psf(8, 2.5).unwrap();
        let h = dense::convolution_matrix(&psf);
        for gamma in [Gamma::Laplacian, Gamma::Identity] {
            let g = dense::gamma_matrix(gamma, 8, 8);
            let lambda = 0.05;
            let a: DMatrix<f64> = (h.transpose() * &h + lambda * g.transpose() * &g)
                .try_inverse()
                .unwrap()
                * h.transpose();
            let trace = (&h * a).trace();
            assert!((trace - tikhonov_divergence(&psf, lambda, gamma)).abs() < 1e-8);
        }
    }

    #[test]
    fn sure_grid_is_well_scaled_for_wide_kernels() {
        let psf = gaussian_psf(128, 25.0).unwrap();
        let grid = default_sure_grid(&psf);
        let energy = psf.kernel().energy();
        assert_eq!(grid.len(), 40);
        assert!((grid[0] / (1e-6 * energy) - 1.0).abs() < 1e-9);
        assert!((grid[39] / (1e2 * energy) - 1.0).abs() < 1e-9);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sure_tracks_prediction_risk() {
        let n = 16;
        let x = random_image(n, 6);
        let psf = gaussian_psf(n, 3.0).unwrap();
        let hx = convolve(&x, &psf).unwrap();
        let sigma = 0.1;
        let grid = default_sure_grid(&psf);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sure = vec![0.0; grid.len()];
        let mut risk = vec![0.0; grid.len()];
        let draws = 200;
        for _ in 0..draws {
            let y = hx.map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal));
            for (i, &l) in grid.iter().enumerate() {
                sure[i] += sure_value(&y, &psf, sigma, l, Gamma::Laplacian).unwrap();
                let fit = convolve(&tikhonov_deconvolve(&y, &psf, l, Gamma::Laplacian).unwrap(), &psf).unwrap();
                risk[i] += fit.mse(&hx).unwrap() * (n * n) as f64;
            }
        }
        let corr = pearson(&sure, &risk);
        assert!(corr > 0.99, "correlation {corr}");
        let curve = sure_select_lambda(&hx, &psf, sigma, &grid, Gamma::Laplacian).unwrap();
        assert!(grid.contains(&curve.lambda));
        assert_eq!(curve.sure.len(), grid.len());
        assert!(sure_select_lambda(&hx, &psf, sigma, &[], Gamma::Laplacian).is_err());
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }
}
