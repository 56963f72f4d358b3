use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, ChemError, Result};

/// A continuous function on `[-1, 1]^d`.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Euclidean Lipschitz constant, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// Upper bound on `sup |f|`, if known.
    fn sup_norm(&self) -> Option<f64> {
        None
    }

    /// Exact modulus of continuity `ω_f(r)`, if known in closed form.
    fn modulus(&self, _r: f64) -> Option<f64> {
        None
    }
}

type Eval = dyn Fn(&[f64]) -> f64 + Send + Sync;
type Modulus = dyn Fn(f64) -> f64 + Send + Sync;

/// Closure-backed field with optional analytic metadata.
#[derive(Clone)]
pub struct FnField {
    pub name: String,
    dim: usize,
    f: Arc<Eval>,
    lipschitz: Option<f64>,
    sup: Option<f64>,
    modulus: Option<Arc<Modulus>>,
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .field("sup", &self.sup)
            .finish()
    }
}

impl FnField {
    pub fn new(name: impl Into<String>, dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            f: Arc::new(f),
            lipschitz: None,
            sup: None,
            modulus: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_sup(mut self, s: f64) -> Self {
        self.sup = Some(s);
        self
    }

    pub fn with_modulus(mut self, w: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.modulus = Some(Arc::new(w));
        self
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(format!("const({c})"), dim, move |_| c)
            .with_lipschitz(0.0)
            .with_sup(c.abs())
            .with_modulus(|_| 0.0)
    }

    /// `f(x) = slope · x₁`.
    pub fn linear(dim: usize, slope: f64) -> Self {
        Self::new(format!("linear({slope})"), dim, move |x| slope * x[0])
            .with_lipschitz(slope.abs())
            .with_sup(slope.abs())
            .with_modulus(move |r| slope.abs() * r.min(2.0))
    }

    /// `f(z) = z²` in one dimension; `ω(r) = r(2 − r)` for `r ≤ 2`.
    pub fn square() -> Self {
        Self::new("square", 1, |x| x[0] * x[0])
            .with_lipschitz(2.0)
            .with_sup(1.0)
            .with_modulus(|r| {
                let r = r.min(2.0);
                r * (2.0 - r)
            })
    }

    /// `f(z) = |z|` in one dimension; `ω(r) = min(r, 1)`.
    pub fn abs() -> Self {
        Self::new("abs", 1, |x| x[0].abs())
            .with_lipschitz(1.0)
            .with_sup(1.0)
            .with_modulus(|r| r.min(1.0))
    }

    /// `f(x) = sin(ω · x₁ + φ)`; `ω_f(r) = 2 sin(min(ωr, π) / 2)` when the
    /// domain is long enough to contain a full half period.
    pub fn sinusoid(dim: usize, freq: f64, phase: f64) -> Self {
        let full_period = freq * 2.0 >= PI;
        let mut out = Self::new(format!("sin({freq}x+{phase})"), dim, move |x| (freq * x[0] + phase).sin())
            .with_lipschitz(freq.abs())
            .with_sup(1.0);
        if full_period {
            out = out.with_modulus(move |r| 2.0 * (0.5 * (freq.abs() * r).min(PI)).sin());
        }
        out
    }

    /// Random trigonometric sum `Σ a_i sin(⟨w_i, x⟩ + φ_i)` with
    /// `Σ |a_i| = 1` and `|w_i| ≤ max_freq`.
    pub fn random_smooth(dim: usize, terms: usize, max_freq: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut comps: Vec<(f64, Vec<f64>, f64)> = (0..terms.max(1))
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let w: Vec<f64> = (0..dim).map(|_| rng.random_range(-max_freq..max_freq)).collect();
                let phase = rng.random_range(0.0..2.0 * PI);
                (a, w, phase)
            })
            .collect();
        let total: f64 = comps.iter().map(|c| c.0.abs()).sum::<f64>().max(1e-12);
        for c in &mut comps {
            c.0 /= total;
        }
        let lipschitz: f64 = comps
            .iter()
            .map(|(a, w, _)| a.abs() * w.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum();
        let comps = Arc::new(comps);
        Self::new(format!("smooth(seed={seed})"), dim, move |x| {
            comps
                .iter()
                .map(|(a, w, p)| a * (w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>() + p).sin())
                .sum()
        })
        .with_lipschitz(lipschitz)
        .with_sup(1.0)
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }

    fn sup_norm(&self) -> Option<f64> {
        self.sup
    }

    fn modulus(&self, r: f64) -> Option<f64> {
        self.modulus.as_ref().map(|w| w(r))
    }
}

/// Points `ξ_1..ξ_t` in `[-1, 1]^d`, optionally with quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
}

impl SampleSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let s = Self { dim, points, weights };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid("sample set dimension must be >= 1"));
        }
        for p in &self.points {
            if p.len() != self.dim {
                return Err(ChemError::Dimension(format!("point of length {} in dimension {}", p.len(), self.dim)));
            }
            if p.iter().any(|v| !(-1.0..=1.0).contains(v)) {
                return Err(invalid("sample point outside [-1, 1]^d"));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != self.points.len() {
                return Err(ChemError::Dimension("weight count differs from point count".into()));
            }
            if w.iter().any(|&v| !(v > 0.0)) {
                return Err(invalid("quadrature weights must be positive"));
            }
            let total: f64 = w.iter().sum();
            let expect = 2f64.powi(self.dim as i32);
            if (total - expect).abs() > 1e-10 * expect {
                return Err(invalid(format!("weights sum to {total}, expected {expect}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Tensor grid of `n` equispaced points per axis, endpoints included.
    pub fn uniform_grid(dim: usize, n: usize) -> Self {
        let axis: Vec<f64> = if n == 1 {
            vec![0.0]
        } else {
            (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
        };
        Self {
            dim,
            points: tensor_points(&axis, dim),
            weights: None,
        }
    }
}

/// All points of `axis^dim`, first coordinate varying slowest.
pub(crate) fn tensor_points(axis: &[f64], dim: usize) -> Vec<Vec<f64>> {
    let n = axis.len();
    let total = n.pow(dim as u32);
    (0..total)
        .map(|flat| multi_index(flat, n, dim).iter().map(|&i| axis[i]).collect())
        .collect()
}

/// Digits of `flat` in base `base`, most significant first.
pub fn multi_index(mut flat: usize, base: usize, dim: usize) -> Vec<usize> {
    let mut out = vec![0; dim];
    for slot in out.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
    out
}

/// `S(f, ξ) = (f(ξ_1), ..., f(ξ_t))`.
pub fn sample_s(f: &dyn ScalarField, xi: &SampleSet) -> Result<Vec<f64>> {
    if f.dim() != xi.dim {
        return Err(ChemError::Dimension(format!(
            "field of dimension {} sampled on a {}-dimensional set",
            f.dim(),
            xi.dim
        )));
    }
    Ok(xi.points.iter().map(|p| f.eval(p)).collect())
}

/// Sup-norm grid resolution per axis: `2^12` in 1D, `2^7` in 2D, `2^5` above.
pub fn sup_grid_size(dim: usize) -> usize {
    match dim {
        1 => 1 << 12,
        2 => 1 << 7,
        _ => 1 << 5,
    }
}

/// `max |f − g|` over the sup-norm grid.
pub fn sup_distance(f: &dyn ScalarField, g: &dyn ScalarField) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(ChemError::Dimension("fields differ in dimension".into()));
    }
    let grid = SampleSet::uniform_grid(f.dim(), sup_grid_size(f.dim()));
    Ok(grid
        .points
        .iter()
        .map(|p| (f.eval(p) - g.eval(p)).abs())
        .fold(0.0, f64::max))
}

pub fn sup_norm_on_grid(f: &dyn ScalarField) -> f64 {
    let grid = SampleSet::uniform_grid(f.dim(), sup_grid_size(f.dim()));
    grid.points.iter().map(|p| f.eval(p).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_pointwise_and_linear() {
        let xi = SampleSet::uniform_grid(2, 5);
        assert_eq!(xi.len(), 25);
        assert_eq!(xi.points[1], vec![-1.0, -0.5]);
        let c = sample_s(&FnField::constant(2, 3.5), &xi).unwrap();
        assert!(c.iter().all(|&v| v == 3.5));
        let f = FnField::new("f", 2, |x| x[0] * x[1]);
        let g = FnField::new("g", 2, |x| x[0] - x[1]);
        let h = FnField::new("h", 2, |x| 2.0 * x[0] * x[1] - 3.0 * (x[0] - x[1]));
        let (sf, sg, sh) = (sample_s(&f, &xi).unwrap(), sample_s(&g, &xi).unwrap(), sample_s(&h, &xi).unwrap());
        for i in 0..25 {
            assert!((sh[i] - (2.0 * sf[i] - 3.0 * sg[i])).abs() < 1e-14);
        }
        assert!(sample_s(&FnField::constant(1, 1.0), &xi).is_err());
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(1, vec![vec![1.5]], None).is_err());
        assert!(SampleSet::new(1, vec![vec![0.0]], Some(vec![1.0])).is_err());
        assert!(SampleSet::new(1, vec![vec![0.0]], Some(vec![2.0])).is_ok());
        assert!(SampleSet::new(1, vec![vec![0.0, 0.0]], None).is_err());
    }

    #[test]
    fn random_smooth_respects_declared_bounds() {
        let f = FnField::random_smooth(2, 4, 3.0, 9);
        let sup = sup_norm_on_grid(&f);
        assert!(sup <= 1.0 + 1e-12);
        let l = f.lipschitz().unwrap();
        let grid = SampleSet::uniform_grid(2, 40);
        for p in grid.points.iter().step_by(7) {
            let q: Vec<f64> = p.iter().map(|v| (v * 0.99 + 0.003).clamp(-1.0, 1.0)).collect();
            let dist = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!((f.eval(p) - f.eval(&q)).abs() <= l * dist + 1e-12);
        }
    }
}
