//! Two-dimensional FFT helpers on row-major complex buffers.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::image::Image;

/// Planned forward/inverse 2D transforms for a fixed grid.
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    fn run(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w);
        row.process(buf);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = buf[r * w + c];
            }
            col.process(&mut column);
            for r in 0..h {
                buf[r * w + c] = column[r];
            }
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse DFT in place, including the 1/(h·w) factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.height * self.width) as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward_image(&self, img: &Image) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>) -> Image {
        self.inverse(&mut spectrum);
        let data = spectrum.into_iter().map(|z| z.re).collect();
        Image::new(self.height, self.width, data).expect("finite inverse FFT output")
    }
}

/// Signed integer frequency of DFT bin `k` on a length-`n` axis, in `[-n/2, n/2)`.
pub fn signed_freq(k: usize, n: usize) -> i64 {
    let k = k as i64;
    let n = n as i64;
    if 2 * k >= n {
        k - n
    } else {
        k
    }
}
