use super::field::{multi_index, ScalarField};
use super::legendre::{encode_phi, MultiPoly};
use crate::error::{invalid, ChemError, Result};

/// Largest tensor grid `(m+1)^d` a projection may evaluate.
pub const MAX_BERNSTEIN_NODES: usize = 1 << 20;

/// `V_m f`: tensor Bernstein polynomial through `f((2k − m)/m)`, rescaled to `[-1, 1]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bernstein {
    pub dim: usize,
    pub degree: usize,
    /// `f` at the nodes, first coordinate varying slowest.
    pub values: Vec<f64>,
}

/// Bernstein basis `C(m,k) t^k (1−t)^{m−k}`, `t = (z+1)/2`, by repeated convex combination.
pub fn bernstein_basis(m: usize, z: f64) -> Vec<f64> {
    let t = 0.5 * (z + 1.0);
    let s = 1.0 - t;
    let mut b = vec![0.0; m + 1];
    b[0] = 1.0;
    for j in 1..=m {
        for k in (1..=j).rev() {
            b[k] = s * b[k] + t * b[k - 1];
        }
        b[0] *= s;
    }
    b
}

pub fn bernstein_project(f: &dyn ScalarField, m: usize, d: usize) -> Result<Bernstein> {
    if m == 0 || d == 0 {
        return Err(invalid("Bernstein projection needs m >= 1 and d >= 1"));
    }
    if f.dim() != d {
        return Err(ChemError::Dimension(format!("field has dimension {}, expected {d}", f.dim())));
    }
    let nodes = (m as u64 + 1).checked_pow(d as u32).unwrap_or(u64::MAX);
    if nodes > MAX_BERNSTEIN_NODES as u64 {
        return Err(ChemError::Budget {
            requested: nodes as usize,
            limit: MAX_BERNSTEIN_NODES,
        });
    }
    let t = nodes as usize;
    let values = (0..t)
        .map(|flat| {
            let x: Vec<f64> = multi_index(flat, m + 1, d)
                .into_iter()
                .map(|k| (2.0 * k as f64 - m as f64) / m as f64)
                .collect();
            f.eval(&x)
        })
        .collect();
    Ok(Bernstein { dim: d, degree: m, values })
}

impl Bernstein {
    /// Coefficients of `V_m f` in the orthonormal Legendre basis.
    pub fn to_legendre(&self) -> Result<MultiPoly> {
        encode_phi(self, self.degree)
    }
}

impl ScalarField for Bernstein {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let n = self.degree + 1;
        let mut acc = self.values.clone();
        // contract the fastest axis first
        for axis in (0..self.dim).rev() {
            let b = bernstein_basis(self.degree, x[axis]);
            acc = acc.chunks(n).map(|c| c.iter().zip(&b).map(|(v, w)| v * w).sum()).collect();
        }
        acc[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::{sup_norm_on_grid, FnField};

    #[test]
    fn reproduces_constants_and_affine_maps() {
        for m in [1, 2, 5, 17] {
            let c = bernstein_project(&FnField::constant(2, 4.25), m, 2).unwrap();
            for x in [[-1.0, 0.3], [0.2, 0.9], [1.0, -1.0]] {
                assert!((c.eval(&x) - 4.25).abs() < 1e-13);
            }
            let f = FnField::linear(1, 1.0);
            let v = bernstein_project(&f, m, 1).unwrap();
            for x in [-1.0, -0.4, 0.0, 0.77, 1.0] {
                assert!((v.eval(&[x]) - x).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn square_at_origin() {
        // term by term: nodes -1, 0, 1 carry weights 1/4, 1/2, 1/4 at z = 0
        let v = bernstein_project(&FnField::square(), 2, 1).unwrap();
        assert!((v.eval(&[0.0]) - 0.5).abs() < 1e-15);
        // V_m z² = z² + (1 − z²)/m
        let v = bernstein_project(&FnField::square(), 7, 1).unwrap();
        for z in [-0.8, 0.1, 0.6] {
            assert!((v.eval(&[z]) - (z * z + (1.0 - z * z) / 7.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn basis_is_a_partition_of_unity() {
        for z in [-1.0, -0.3, 0.5, 1.0] {
            let b = bernstein_basis(30, z);
            assert!((b.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(b.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn operator_norm_is_one() {
        for seed in 0..10 {
            let f = FnField::random_smooth(2, 3, 4.0, seed);
            let v = bernstein_project(&f, 6, 2).unwrap();
            assert!(sup_norm_on_grid(&v) <= sup_norm_on_grid(&f) + 1e-12);
        }
    }

    #[test]
    fn legendre_conversion_and_budget() {
        let f = FnField::random_smooth(2, 3, 2.0, 4);
        let v = bernstein_project(&f, 4, 2).unwrap();
        let q = v.to_legendre().unwrap();
        for x in [[0.1, -0.2], [0.9, 0.95], [-1.0, 1.0]] {
            assert!((q.eval(&x) - v.eval(&x)).abs() < 1e-12);
        }
        let big = FnField::constant(5, 1.0);
        assert!(matches!(bernstein_project(&big, 40, 5), Err(ChemError::Budget { .. })));
        assert!(bernstein_project(&big, 0, 5).is_err());
    }
}
