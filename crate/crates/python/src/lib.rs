//! Python bindings: images are nested lists of floats (row-major), coefficient
//! vectors are flat lists, and pipeline results come back as dicts.

use std::path::PathBuf;
use std::sync::Arc;

use chem_core::conformal::{self, Bounds, GFamily};
use chem_core::forward::{convolve, gaussian_psf, ForwardModel};
use chem_core::recon::{parse_reconstructor, Reconstructor};
use chem_core::transforms::{CoefficientField, TransformSpec};
use chem_core::{approx, io, metric, pipeline, ChemError as CoreError, Image};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError};
use pyo3::prelude::*;
use serde::Serialize;

create_exception!(chem, ChemError, PyException, "Error raised by the CHEM core library.");
create_exception!(chem, HashMismatchError, ChemError, "An artifact hash does not match its inputs.");

fn py_err(e: CoreError) -> PyErr {
    match e {
        CoreError::Io(io) => PyOSError::new_err(io.to_string()),
        e @ CoreError::HashMismatch { .. } => HashMismatchError::new_err(e.to_string()),
        e => ChemError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for chem_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn image(rows: Vec<Vec<f64>>) -> PyResult<Image> {
    Image::from_rows(&rows).py()
}

fn rows(img: &Image) -> Vec<Vec<f64>> {
    img.data().chunks(img.width()).map(<[f64]>::to_vec).collect()
}

fn to_dict<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| ChemError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Pipeline configuration. Build from JSON; the common fields are also
/// exposed as attributes.
#[pyclass(name = "RunConfig", from_py_object)]
#[derive(Clone)]
struct PyRunConfig {
    inner: pipeline::RunConfig,
}

#[pymethods]
impl PyRunConfig {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => pipeline::RunConfig::from_json(text).py()?,
            None => pipeline::RunConfig::default(),
        };
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| ChemError::new_err(e.to_string()))
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().py()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn output(&self) -> PathBuf {
        self.inner.output.clone()
    }

    #[setter]
    fn set_output(&mut self, v: PathBuf) {
        self.inner.output = v;
    }

    #[getter]
    fn transform(&self) -> String {
        self.inner.transform.clone()
    }

    #[setter]
    fn set_transform(&mut self, v: String) {
        self.inner.transform = v;
    }

    #[getter]
    fn model(&self) -> String {
        self.inner.model.clone()
    }

    #[setter]
    fn set_model(&mut self, v: String) {
        self.inner.model = v;
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[setter]
    fn set_alpha(&mut self, v: f64) {
        self.inner.alpha = v;
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[setter]
    fn set_theta(&mut self, v: f64) {
        self.inner.theta = v;
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    #[setter]
    fn set_delta(&mut self, v: f64) {
        self.inner.delta = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "RunConfig(transform={:?}, model={:?}, alpha={}, output={:?})",
            self.inner.transform, self.inner.model, self.inner.alpha, self.inner.output
        )
    }
}

#[pyfunction]
fn synth<'py>(py: Python<'py>, config: &PyRunConfig) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| pipeline::cmd_synth(&config.inner)).py()?;
    to_dict(py, &s)
}

#[pyfunction]
fn calibrate<'py>(py: Python<'py>, config: &PyRunConfig, dataset: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| pipeline::cmd_calibrate(&config.inner, &dataset)).py()?;
    to_dict(py, &s)
}

#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    config: &PyRunConfig,
    dataset: PathBuf,
    sidecar: PathBuf,
) -> PyResult<Bound<'py, PyAny>> {
    let r = py.detach(|| pipeline::cmd_evaluate(&config.inner, &dataset, &sidecar)).py()?;
    to_dict(py, &r)
}

/// Returns the sweep CSV text.
#[pyfunction]
fn sweep(py: Python<'_>, config: &PyRunConfig) -> PyResult<String> {
    py.detach(|| pipeline::cmd_sweep(&config.inner)).py()
}

#[pyfunction]
fn theory_sweep<'py>(py: Python<'py>, config: &PyRunConfig) -> PyResult<Bound<'py, PyAny>> {
    let s = py.detach(|| pipeline::cmd_theory_sweep(&config.inner)).py()?;
    to_dict(py, &s)
}

/// Transform plus optional subband RMS normalization on a fixed grid.
#[pyclass(name = "Featurizer")]
struct PyFeaturizer {
    inner: conformal::Featurizer,
}

#[pymethods]
impl PyFeaturizer {
    #[new]
    fn new(transform: &str, rows: usize, cols: usize) -> PyResult<Self> {
        let spec = TransformSpec::parse(transform).py()?;
        Ok(Self {
            inner: conformal::Featurizer::new(&spec, rows, cols).py()?,
        })
    }

    /// Fits per-subband RMS normalization on reference images.
    fn fit_rms(&mut self, images: Vec<Vec<Vec<f64>>>) -> PyResult<()> {
        let imgs = images.into_iter().map(image).collect::<PyResult<Vec<_>>>()?;
        let refs: Vec<&Image> = imgs.iter().collect();
        self.inner = self.inner.clone().fit_rms(&refs).py()?;
        Ok(())
    }

    fn coefficients(&self, img: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        Ok(self.inner.coefficients(&image(img)?).py()?.into_values())
    }

    fn inverse(&self, coefficients: Vec<f64>) -> PyResult<Vec<Vec<f64>>> {
        let template = self.inner.coefficients(&Image::zeros(self.inner.spec().rows, self.inner.spec().cols)).py()?;
        let mut field: CoefficientField = template;
        if coefficients.len() != field.len() {
            return Err(ChemError::new_err(format!(
                "expected {} coefficients, got {}",
                field.len(),
                coefficients.len()
            )));
        }
        field.values_mut().copy_from_slice(&coefficients);
        Ok(rows(&self.inner.inverse(&field).py()?))
    }

    /// Scale index of every coefficient (1 = finest).
    fn scales(&self) -> Vec<usize> {
        let layout = self.inner.layout();
        (0..layout.total_len()).map(|j| layout.scale_of(j)).collect()
    }

    /// Human-readable label of every subband, in layout order.
    fn subband_labels(&self) -> Vec<String> {
        self.inner.layout().subbands().iter().map(|s| format!("s{}:{}", s.scale, s.orientation.label())).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// A reconstruction method parsed from its id string.
#[pyclass(name = "Reconstructor")]
struct PyReconstructor {
    inner: Arc<dyn Reconstructor>,
}

#[pymethods]
impl PyReconstructor {
    #[new]
    fn new(id: &str) -> PyResult<Self> {
        Ok(Self {
            inner: parse_reconstructor(id).py()?,
        })
    }

    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    /// Reconstructs `y` observed through a Gaussian PSF with noise `sigma`.
    #[pyo3(signature = (y, fwhm, noise_sigma = 0.0))]
    fn reconstruct(&self, y: Vec<Vec<f64>>, fwhm: f64, noise_sigma: f64) -> PyResult<Vec<Vec<f64>>> {
        let y = image(y)?;
        let model = ForwardModel {
            psf: gaussian_psf(y.height(), fwhm).py()?,
            noise_sigma,
        };
        Ok(rows(&self.inner.reconstruct(&y, &model).py()?))
    }
}

#[pyfunction]
fn blur(img: Vec<Vec<f64>>, fwhm: f64) -> PyResult<Vec<Vec<f64>>> {
    let img = image(img)?;
    let psf = gaussian_psf(img.height(), fwhm).py()?;
    Ok(rows(&convolve(&img, &psf).py()?))
}

#[pyfunction]
fn read_raster(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    Ok(rows(&io::read_raster(&path).py()?))
}

#[pyfunction]
fn write_raster(path: PathBuf, img: Vec<Vec<f64>>) -> PyResult<()> {
    io::write_raster(&path, &image(img)?).py()
}

/// Split-conformal initial radii from a D1 residual matrix (samples × coefficients).
#[pyfunction]
fn init_radius(residuals: Vec<Vec<f64>>, alpha: f64) -> PyResult<Vec<f64>> {
    conformal::init_radius_from_residuals(&residuals, alpha).py()
}

/// Calibrated `λ_j` and diagnostics from D2 residuals.
#[pyfunction]
#[pyo3(signature = (residuals, radii, alpha, g = "multiplicative", a = 0.0, b = 1e6))]
fn calibrate_lambda<'py>(
    py: Python<'py>,
    residuals: Vec<Vec<f64>>,
    radii: Vec<f64>,
    alpha: f64,
    g: &str,
    a: f64,
    b: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g: GFamily = g.parse().py()?;
    let bounds = Bounds::new(a, b).py()?;
    let fit = conformal::calibrate_lambda_from_residuals(&residuals, &radii, g, bounds, alpha).py()?;
    to_dict(py, &fit)
}

/// `min((|pred − truth| − R_j)_+, θ)` per coefficient.
#[pyfunction]
fn capped_scores(pred: Vec<f64>, truth: Vec<f64>, radii: Vec<f64>, theta: f64) -> PyResult<Vec<f64>> {
    if pred.len() != truth.len() || pred.len() != radii.len() {
        return Err(ChemError::new_err("pred, truth and radii must have equal lengths"));
    }
    Ok(pred
        .iter()
        .zip(&truth)
        .zip(&radii)
        .map(|((p, t), r)| metric::capped_excess((p - t).abs(), *r, theta))
        .collect())
}

/// Aggregate report over a score matrix (images × coefficients).
#[pyfunction]
#[pyo3(signature = (scores, theta = 1.0, alpha = 0.01, delta = 0.05))]
fn chem_aggregate<'py>(
    py: Python<'py>,
    scores: Vec<Vec<f64>>,
    theta: f64,
    alpha: f64,
    delta: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let report = metric::chem_aggregate(&scores, theta, alpha, delta).py()?;
    to_dict(py, &report)
}

#[pyfunction]
fn hoeffding_bound(theta: f64, delta: f64, m: usize) -> PyResult<f64> {
    metric::hoeffding_bound(theta, delta, m).py()
}

/// Re-encodes a Legendre-coefficient polynomial through `φ`; the output should
/// equal the input up to rounding.
#[pyfunction]
fn legendre_roundtrip(coefficients: Vec<f64>, degree: usize, dim: usize) -> PyResult<Vec<f64>> {
    let t = (degree + 1).pow(dim as u32);
    if coefficients.len() != t {
        return Err(ChemError::new_err(format!("expected {t} coefficients, got {}", coefficients.len())));
    }
    let poly = approx::MultiPoly {
        dim,
        degree,
        coeffs: coefficients,
    };
    Ok(approx::encode_phi(&poly, degree).py()?.coeffs)
}

#[pymodule]
fn chem(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ChemError", m.py().get_type::<ChemError>())?;
    m.add("HashMismatchError", m.py().get_type::<HashMismatchError>())?;
    m.add_class::<PyRunConfig>()?;
    m.add_class::<PyFeaturizer>()?;
    m.add_class::<PyReconstructor>()?;
    for f in [
        wrap_pyfunction!(synth, m)?,
        wrap_pyfunction!(calibrate, m)?,
        wrap_pyfunction!(evaluate, m)?,
        wrap_pyfunction!(sweep, m)?,
        wrap_pyfunction!(theory_sweep, m)?,
        wrap_pyfunction!(blur, m)?,
        wrap_pyfunction!(read_raster, m)?,
        wrap_pyfunction!(write_raster, m)?,
        wrap_pyfunction!(init_radius, m)?,
        wrap_pyfunction!(calibrate_lambda, m)?,
        wrap_pyfunction!(capped_scores, m)?,
        wrap_pyfunction!(chem_aggregate, m)?,
        wrap_pyfunction!(hoeffding_bound, m)?,
        wrap_pyfunction!(legendre_roundtrip, m)?,
    ] {
        m.add_function(f)?;
    }
    Ok(())
}
