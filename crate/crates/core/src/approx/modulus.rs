use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::field::ScalarField;
use crate::error::{invalid, Result};

/// Smallest pair distance the estimator samples.
const MIN_DISTANCE: f64 = 1e-6;

/// Lower-bound estimate of `ω_f(r)` from random pairs.
///
/// Pair distances are log-uniform up to the cube diameter; `estimate(r)` is
/// the largest `|f(x) − f(y)|` over pairs at distance `≤ r`, so it is
/// non-decreasing in `r`.
#[derive(Debug, Clone)]
pub struct ModulusEstimator {
    distances: Vec<f64>,
    running_max: Vec<f64>,
}

impl ModulusEstimator {
    pub fn new(f: &dyn ScalarField, budget: usize, seed: u64) -> Self {
        let d = f.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (MIN_DISTANCE.ln(), (2.0 * (d as f64).sqrt()).ln());
        let mut pairs: Vec<(f64, f64)> = (0..budget)
            .map(|_| {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let mut u: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                u.iter_mut().for_each(|v| *v /= norm);
                let r = rng.random_range(lo..=hi).exp();
                let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| (a + r * b).clamp(-1.0, 1.0)).collect();
                let dist = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                (dist, (f.eval(&x) - f.eval(&y)).abs())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = 0.0f64;
        let running_max = pairs
            .iter()
            .map(|p| {
                best = best.max(p.1);
                best
            })
            .collect();
        Self {
            distances: pairs.into_iter().map(|p| p.0).collect(),
            running_max,
        }
    }

    pub fn estimate(&self, r: f64) -> f64 {
        let n = self.distances.partition_point(|&d| d <= r);
        if n == 0 {
            0.0
        } else {
            self.running_max[n - 1]
        }
    }
}

pub fn modulus_of_continuity(f: &dyn ScalarField, r: f64, budget: usize, seed: u64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(invalid("modulus radius must be positive"));
    }
    Ok(ModulusEstimator::new(f, budget, seed).estimate(r))
}

/// Analytic modulus when the field provides one, else the pair estimate.
pub fn modulus_or_estimate(f: &dyn ScalarField, r: f64, budget: usize, seed: u64) -> Result<f64> {
    match f.modulus(r) {
        Some(w) => Ok(w),
        None => modulus_of_continuity(f, r, budget, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approx::FnField;

    #[test]
    fn linear_function_approaches_lr() {
        let f = FnField::new("3x", 1, |x| 3.0 * x[0]);
        let est = ModulusEstimator::new(&f, 100_000, 1);
        for r in [0.01, 0.1, 0.5, 1.0] {
            let w = est.estimate(r);
            assert!(w <= 3.0 * r + 1e-12);
            assert!(w >= 0.95 * 3.0 * r, "r = {r}: {w}");
        }
    }

    #[test]
    fn constant_is_zero_and_estimate_is_monotone() {
        let c = FnField::new("c", 2, |_| 7.0);
        assert_eq!(modulus_of_continuity(&c, 0.5, 5000, 3).unwrap(), 0.0);
        let f = FnField::random_smooth(2, 4, 5.0, 2);
        let est = ModulusEstimator::new(&f, 5000, 4);
        let mut last = 0.0;
        for i in 1..200 {
            let w = est.estimate(i as f64 * 0.015);
            assert!(w >= last);
            last = w;
        }
        assert!(modulus_of_continuity(&f, 0.0, 10, 1).is_err());
    }
}
