//! Dense matrix oracles for small grids.

use nalgebra::DMatrix;

use super::Gamma;
use crate::forward::Psf;

/// Circulant matrix of `x ↦ h * x` on row-major pixel vectors.
pub fn convolution_matrix(psf: &Psf) -> DMatrix<f64> {
    let (h, w) = psf.shape();
    let k = psf.origin_kernel();
    DMatrix::from_fn(h * w, h * w, |i, j| {
        let (r, c) = (i / w, i % w);
        let (rr, cc) = (j / w, j % w);
        k.get((r + h - rr) % h, (c + w - cc) % w)
    })
}

pub fn gamma_matrix(gamma: Gamma, h: usize, w: usize) -> DMatrix<f64> {
    match gamma {
        Gamma::Identity => DMatrix::identity(h * w, h * w),
        Gamma::Laplacian => {
            let mut m = DMatrix::zeros(h * w, h * w);
            for r in 0..h {
                for c in 0..w {
                    let i = r * w + c;
                    m[(i, i)] += 4.0;
                    for (rr, cc) in [((r + 1) % h, c), ((r + h - 1) % h, c), (r, (c + 1) % w), (r, (c + w - 1) % w)] {
                        m[(i, rr * w + cc)] -= 1.0;
                    }
                }
            }
            m
        }
    }
}
