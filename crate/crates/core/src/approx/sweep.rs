use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bernstein::bernstein_project;
use super::field::{sup_distance, ScalarField};
use super::legendre::gauss_legendre_1d;
use super::modulus::modulus_or_estimate;
use crate::error::{invalid, ChemError, Result};

/// A map `M` between continuous functions with explicit Lipschitz data.
pub trait Operator: Send + Sync {
    fn name(&self) -> String;

    fn apply(&self, f: Arc<dyn ScalarField>) -> Result<Arc<dyn ScalarField>>;

    /// `L_M` with respect to the sup norm.
    fn lipschitz(&self) -> f64;

    /// `L_Y` covering both `M(f)` and `M(V_m f)`.
    fn output_lipschitz(&self, f: &dyn ScalarField) -> Option<f64>;
}

/// Euclidean Lipschitz bound shared by `f` and its Bernstein projections:
/// each partial derivative stays within `L`, so the gradient within `√d L`.
fn projected_lipschitz(f: &dyn ScalarField) -> Option<f64> {
    let l = f.lipschitz()?;
    Some(if f.dim() == 1 { l } else { (f.dim() as f64).sqrt() * l })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityOp;

impl Operator for IdentityOp {
    fn name(&self) -> String {
        "identity".into()
    }

    fn apply(&self, f: Arc<dyn ScalarField>) -> Result<Arc<dyn ScalarField>> {
        Ok(f)
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn output_lipschitz(&self, f: &dyn ScalarField) -> Option<f64> {
        projected_lipschitz(f)
    }
}

/// Pointwise `tanh(f(x))`; 1-Lipschitz.
#[derive(Debug, Clone, Copy, Default)]
pub struct SoftClip;

struct Mapped {
    inner: Arc<dyn ScalarField>,
    op: fn(f64) -> f64,
}

impl ScalarField for Mapped {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.op)(self.inner.eval(x))
    }
}

impl Operator for SoftClip {
    fn name(&self) -> String {
        "softclip".into()
    }

    fn apply(&self, f: Arc<dyn ScalarField>) -> Result<Arc<dyn ScalarField>> {
        Ok(Arc::new(Mapped { inner: f, op: f64::tanh }))
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn output_lipschitz(&self, f: &dyn ScalarField) -> Option<f64> {
        projected_lipschitz(f)
    }
}

/// One-dimensional Gaussian smoothing `M(f)(x) = ∫_{-1}^{1} f(s) κ_σ(x − s) ds`.
///
/// The kernel is not renormalized on the interval, so `L_M ≤ 1` and
/// `L_Y ≤ ‖f‖_∞ ‖κ_σ'‖_1 = 2‖f‖_∞ / (σ√(2π))`.
#[derive(Debug, Clone)]
pub struct GaussianSmoothing {
    pub sigma: f64,
    nodes: Arc<(Vec<f64>, Vec<f64>)>,
}

impl GaussianSmoothing {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(invalid("smoothing width must be positive"));
        }
        Ok(Self {
            sigma,
            nodes: Arc::new(gauss_legendre_1d(200)),
        })
    }
}

struct Smoothed {
    inner: Arc<dyn ScalarField>,
    sigma: f64,
    nodes: Arc<(Vec<f64>, Vec<f64>)>,
}

impl ScalarField for Smoothed {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let norm = 1.0 / (self.sigma * (2.0 * std::f64::consts::PI).sqrt());
        let (s, w) = &*self.nodes;
        s.iter()
            .zip(w)
            .map(|(&si, wi)| {
                let u = (x[0] - si) / self.sigma;
                wi * self.inner.eval(&[si]) * norm * (-0.5 * u * u).exp()
            })
            .sum()
    }
}

impl Operator for GaussianSmoothing {
    fn name(&self) -> String {
        format!("smooth(sigma={})", self.sigma)
    }

    fn apply(&self, f: Arc<dyn ScalarField>) -> Result<Arc<dyn ScalarField>> {
        if f.dim() != 1 {
            return Err(ChemError::Dimension("Gaussian smoothing is one-dimensional".into()));
        }
        Ok(Arc::new(Smoothed {
            inner: f,
            sigma: self.sigma,
            nodes: self.nodes.clone(),
        }))
    }

    fn lipschitz(&self) -> f64 {
        1.0
    }

    fn output_lipschitz(&self, f: &dyn ScalarField) -> Option<f64> {
        Some(2.0 * f.sup_norm()? / (self.sigma * (2.0 * std::f64::consts::PI).sqrt()))
    }
}

/// One row of an error sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub function: String,
    pub operator: String,
    pub m: usize,
    pub error: f64,
    pub bound: f64,
    pub omega_f: f64,
}

impl ErrorRow {
    pub fn within_bound(&self) -> bool {
        self.error <= self.bound
    }
}

/// CSV with header `m,error,bound,omega_f,function,operator`.
pub fn rows_to_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from("m,error,bound,omega_f,function,operator\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},\"{}\",\"{}\"",
            r.m, r.error, r.bound, r.omega_f, r.function, r.operator
        );
    }
    out
}

/// Pair budget and seed for modulus estimates when no closed form exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOptions {
    pub budget: usize,
    pub seed: u64,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        Self {
            budget: 100_000,
            seed: 1,
        }
    }
}

pub type NamedField = (String, Arc<dyn ScalarField>);

/// `‖f − V_m f‖_∞` against `(5d/4) ω_f(2/m)` for every `(f, m)` cell.
pub fn bernstein_error_sweep(fields: &[NamedField], ms: &[usize], opts: ModulusOptions) -> Result<Vec<ErrorRow>> {
    cells(fields, ms)
        .into_par_iter()
        .map(|(name, f, m)| {
            let d = f.dim();
            let v = bernstein_project(f.as_ref(), m, d)?;
            let omega = modulus_or_estimate(f.as_ref(), 2.0 / m as f64, opts.budget, opts.seed)?;
            Ok(ErrorRow {
                function: name,
                operator: "identity".into(),
                m,
                error: sup_distance(f.as_ref(), &v)?,
                bound: 1.25 * d as f64 * omega,
                omega_f: omega,
            })
        })
        .collect()
}

/// `‖M(f) − V_m ∘ M ∘ V_m(f)‖_∞` against `6 L_M d² ω_f(2/m) + 5 L_Y d / (2m)`.
pub fn discretization_error_sweep(
    op: &dyn Operator,
    fields: &[NamedField],
    ms: &[usize],
    opts: ModulusOptions,
) -> Result<Vec<ErrorRow>> {
    cells(fields, ms)
        .into_par_iter()
        .map(|(name, f, m)| {
            let d = f.dim();
            let l_y = op
                .output_lipschitz(f.as_ref())
                .ok_or_else(|| invalid(format!("no output Lipschitz constant for {name}")))?;
            let exact = op.apply(f.clone())?;
            let vf: Arc<dyn ScalarField> = Arc::new(bernstein_project(f.as_ref(), m, d)?);
            let mapped = op.apply(vf)?;
            let approx = bernstein_project(mapped.as_ref(), m, d)?;
            let omega = modulus_or_estimate(f.as_ref(), 2.0 / m as f64, opts.budget, opts.seed)?;
            let (df, mf) = (d as f64, m as f64);
            Ok(ErrorRow {
                function: name,
                operator: op.name(),
                m,
                error: sup_distance(exact.as_ref(), &approx)?,
                bound: 6.0 * op.lipschitz() * df * df * omega + 5.0 * l_y * df / (2.0 * mf),
                omega_f: omega,
            })
        })
        .collect()
}

fn cells(fields: &[NamedField], ms: &[usize]) -> Vec<(String, Arc<dyn ScalarField>, usize)> {
    fields
        .iter()
        .flat_map(|(n, f)| ms.iter().map(move |&m| (n.clone(), f.clone(), m)))
        .collect()
}
