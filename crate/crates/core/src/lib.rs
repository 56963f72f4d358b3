//! Conformal Hallucination Estimation Metric (CHEM) for image reconstruction.
//!
//! Predictions and ground truths are mapped into a wavelet or shearlet domain,
//! per-coefficient intervals are calibrated with split conformal prediction,
//! and hallucination is scored as the capped excess of each coefficient
//! residual over its calibrated radius. A synthetic deconvolution testbed and
//! the polynomial approximation operators used for bound checks are included.

pub mod approx;
pub mod conformal;
pub mod error;
pub mod fft;
pub mod forward;
pub mod image;
pub mod io;
pub mod metric;
pub mod pipeline;
pub mod recon;
pub mod transforms;

pub use error::{ChemError, Result};
pub use image::Image;
