use crate::error::{invalid, ChemError, Result};

use super::field::{multi_index, tensor_points, SampleSet, ScalarField};

/// Orthonormal Legendre values `P_0(x), ..., P_m(x)` on `[-1, 1]`.
///
/// Standard polynomials come from the three-term recurrence; the factor
/// `√(n + 1/2)` is applied last.
pub fn legendre_all(m: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(m + 1);
    p.push(1.0);
    if m >= 1 {
        p.push(x);
    }
    for n in 1..m {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * p[n] - nf * p[n - 1]) / (nf + 1.0);
        p.push(next);
    }
    for (n, v) in p.iter_mut().enumerate() {
        *v *= (n as f64 + 0.5).sqrt();
    }
    p
}

/// Orthonormal `P_n(x)`.
pub fn legendre_1d(n: usize, x: f64) -> f64 {
    legendre_all(n, x)[n]
}

/// Product basis `P_k(x) = Π_j P_{k_j}(x_j)`.
pub fn legendre_eval(k: &[usize], x: &[f64]) -> Result<f64> {
    if k.len() != x.len() {
        return Err(ChemError::Dimension("multi-index and point differ in length".into()));
    }
    Ok(k.iter().zip(x).map(|(&n, &xi)| legendre_1d(n, xi)).product())
}

/// Basis function with flat index `flat` (zero-based; first coordinate slowest).
pub fn legendre_eval_flat(flat: usize, m: usize, x: &[f64]) -> Result<f64> {
    let t = (m + 1).pow(x.len() as u32);
    if flat >= t {
        return Err(invalid(format!("basis index {flat} exceeds {t}")));
    }
    legendre_eval(&multi_index(flat, m + 1, x.len()), x)
}

/// `n`-point Gauss–Legendre rule on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th largest root
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = standard_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = standard_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        nodes[i] = -x;
        weights[n - 1 - i] = w;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Standard `P_n(x)` and its derivative.
fn standard_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor product of `(m+1)`-point Gauss–Legendre rules.
pub fn gauss_legendre_nodes(m: usize, d: usize) -> Result<SampleSet> {
    if d == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    let (nodes, weights) = gauss_legendre_1d(m + 1);
    let points = tensor_points(&nodes, d);
    let w = (0..points.len())
        .map(|flat| multi_index(flat, m + 1, d).iter().map(|&i| weights[i]).product())
        .collect();
    SampleSet::new(d, points, Some(w))
}

/// Element of `Π_m` in the orthonormal Legendre product basis.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPoly {
    pub dim: usize,
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl MultiPoly {
    pub fn new(dim: usize, degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let t = (degree + 1).pow(dim as u32);
        if dim == 0 || coeffs.len() != t {
            return Err(ChemError::Dimension(format!(
                "{} coefficients for d = {dim}, m = {degree} (expected {t})",
                coeffs.len()
            )));
        }
        Ok(Self { dim, degree, coeffs })
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `‖Q‖_{L2}`, equal to the coefficient norm.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl ScalarField for MultiPoly {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let tables: Vec<Vec<f64>> = x.iter().map(|&xi| legendre_all(self.degree, xi)).collect();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(flat, c)| {
                let k = multi_index(flat, self.degree + 1, self.dim);
                c * k.iter().zip(&tables).map(|(&n, t)| t[n]).product::<f64>()
            })
            .sum()
    }
}

/// `φ(Q) = (⟨Q, P_1⟩, ..., ⟨Q, P_t⟩)` by tensor Gauss quadrature; exact on `Π_m`.
pub fn encode_phi(q: &dyn ScalarField, m: usize) -> Result<MultiPoly> {
    let d = q.dim();
    let xi = gauss_legendre_nodes(m, d)?;
    let weights = xi.weights.as_ref().expect("Gauss rule carries weights");
    let (nodes, _) = gauss_legendre_1d(m + 1);
    let table: Vec<Vec<f64>> = nodes.iter().map(|&x| legendre_all(m, x)).collect();
    let ws: Vec<f64> = xi.points.iter().zip(weights).map(|(p, w)| w * q.eval(p)).collect();
    let t = xi.len();
    let coeffs = (0..t)
        .map(|k| {
            let kk = multi_index(k, m + 1, d);
            (0..t)
                .map(|i| {
                    let ii = multi_index(i, m + 1, d);
                    ws[i] * kk.iter().zip(&ii).map(|(&n, &node)| table[node][n]).product::<f64>()
                })
                .sum()
        })
        .collect();
    MultiPoly::new(d, m, coeffs)
}

/// `S(φ⁻¹(c), ξ)`: the polynomial with coefficients `c` sampled on `ξ`.
pub fn decode_phi(c: &MultiPoly, xi: &SampleSet) -> Result<Vec<f64>> {
    super::field::sample_s(c, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::FnField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn legendre_values() {
        for x in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((legendre_1d(0, x) - 0.5f64.sqrt()).abs() < 1e-15);
        }
        assert!((legendre_1d(1, 1.0) - 1.5f64.sqrt()).abs() < 1e-15);
        // Rodrigues form of P_2: (3x² − 1)/2
        let x: f64 = 0.37;
        assert!((legendre_1d(2, x) - 2.5f64.sqrt() * (3.0 * x * x - 1.0) / 2.0).abs() < 1e-14);
        assert!(legendre_eval(&[1, 0], &[0.5]).is_err());
        assert!(legendre_eval_flat(9, 2, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn orthonormality_by_quadrature() {
        let (x, w) = gauss_legendre_1d(12);
        for i in 0..=8 {
            for j in 0..=8 {
                let ip: f64 = x.iter().zip(&w).map(|(&xi, wi)| wi * legendre_1d(i, xi) * legendre_1d(j, xi)).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "{i} {j}");
            }
        }
    }

    #[test]
    fn gauss_rules() {
        let xi = gauss_legendre_nodes(1, 1).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((xi.points[0][0] + r).abs() < 1e-15 && (xi.points[1][0] - r).abs() < 1e-15);
        assert_eq!(xi.weights.as_ref().unwrap().len(), 2);
        assert!(xi.weights.unwrap().iter().all(|w| (w - 1.0).abs() < 1e-14));
        for (m, d) in [(0, 1), (4, 2), (6, 3)] {
            let s = gauss_legendre_nodes(m, d).unwrap();
            let total: f64 = s.weights.unwrap().iter().sum();
            assert!((total - 2f64.powi(d as i32)).abs() < 1e-12);
        }
        let (x, w) = gauss_legendre_1d(5);
        let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a * a).sum();
        assert!((q - 2.0 / 3.0).abs() < 1e-12);
        // exactness degree 2m+1
        let (x, w) = gauss_legendre_1d(4);
        let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(6)).sum();
        assert!((q - 2.0 / 7.0).abs() < 1e-13);
        // roots oracle: Newton-polished nodes are zeros of P_{m+1}
        for n in [3, 10, 33] {
            for &v in &gauss_legendre_1d(n).0 {
                assert!(legendre_1d(n, v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_quadrature_is_exact_on_products() {
        let (m, d) = (3, 2);
        let xi = gauss_legendre_nodes(m, d).unwrap();
        let w = xi.weights.clone().unwrap();
        let t = (m + 1).pow(2);
        for a in 0..t {
            for b in 0..t {
                let ip: f64 = xi
                    .points
                    .iter()
                    .zip(&w)
                    .map(|(p, wi)| wi * legendre_eval_flat(a, m, p).unwrap() * legendre_eval_flat(b, m, p).unwrap())
                    .sum();
                assert!((ip - if a == b { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
    }

    fn random_poly(d: usize, m: usize, seed: u64) -> MultiPoly {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = (m + 1).pow(d as u32);
        MultiPoly::new(d, m, (0..t).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn phi_round_trip_and_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (d, m) in [(1, 6), (2, 4), (3, 2)] {
            let q = random_poly(d, m, 5 + d as u64);
            let c = encode_phi(&q, m).unwrap();
            for (a, b) in c.coeffs.iter().zip(&q.coeffs) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((c.l2_norm() - q.l2_norm()).abs() < 1e-10);
            let pts: Vec<Vec<f64>> = (0..100).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let set = SampleSet::new(d, pts, None).unwrap();
            let back = decode_phi(&c, &set).unwrap();
            for (p, v) in set.points.iter().zip(back) {
                assert!((q.eval(p) - v).abs() < 1e-9);
            }
        }
        // ‖Q‖²_{L2} by an independent high-order rule
        let q = random_poly(1, 5, 2);
        let (x, w) = gauss_legendre_1d(20);
        let l2: f64 = x.iter().zip(&w).map(|(a, b)| b * q.eval(&[*a]).powi(2)).sum();
        assert!((l2.sqrt() - q.l2_norm()).abs() < 1e-10);
    }

    #[test]
    fn encoder_and_decoder_examples() {
        let p0 = FnField::new("P0", 1, |x| legendre_1d(0, x[0]));
        let c = encode_phi(&p0, 3).unwrap();
        assert!((c.coeffs[0] - 1.0).abs() < 1e-14);
        assert!(c.coeffs[1..].iter().all(|v| v.abs() < 1e-14));
        let xi = gauss_legendre_nodes(2, 2).unwrap();
        let zero = MultiPoly::new(2, 2, vec![0.0; 9]).unwrap();
        assert!(decode_phi(&zero, &xi).unwrap().iter().all(|&v| v == 0.0));
        let mut e1 = vec![0.0; 9];
        e1[0] = 1.0;
        let one = MultiPoly::new(2, 2, e1).unwrap();
        assert!(decode_phi(&one, &xi).unwrap().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(MultiPoly::new(2, 2, vec![0.0; 8]).is_err());
        // Horner-style oracle in the monomial basis: 1 + 2x − x³
        let f = FnField::new("cubic", 1, |x| 1.0 + 2.0 * x[0] - x[0].powi(3));
        let c = encode_phi(&f, 3).unwrap();
        for x in [-0.9, -0.2, 0.4, 1.0] {
            let horner = ((-1.0 * x + 0.0) * x + 2.0) * x + 1.0;
            assert!((c.eval(&[x]) - horner).abs() < 1e-10);
        }
    }
}
