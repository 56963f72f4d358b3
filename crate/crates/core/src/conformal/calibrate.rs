use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::Featurizer;
use super::quantile::{conformal_level, empirical_quantile, order_statistic, quantile_rank};
use super::{check_alpha, Bounds, GFamily, RadiusModel, RADIUS_FLOOR};
use crate::error::{invalid, ChemError, Result};
use crate::forward::{ForwardModel, Pair};
use crate::image::Image;
use crate::recon::Reconstructor;
use crate::transforms::CoefficientField;

/// `|Φ(X_n)^_j − (Ŷ_n)_j|` for every pair `n` (rows) and coefficient `j`.
pub fn residual_matrix(
    pairs: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
) -> Result<Vec<Vec<f64>>> {
    pairs
        .par_iter()
        .map(|p| {
            let pred = features.coefficients(&model.reconstruct(&p.x, forward)?)?;
            let truth = features.coefficients(&p.y)?;
            pred.check_compatible(&truth)?;
            Ok(pred
                .values()
                .iter()
                .zip(truth.values())
                .map(|(a, b)| (a - b).abs())
                .collect())
        })
        .collect()
}

fn check_rows(residuals: &[Vec<f64>], what: &str) -> Result<usize> {
    let first = residuals
        .first()
        .ok_or_else(|| invalid(format!("{what} is empty")))?;
    if residuals.iter().any(|r| r.len() != first.len()) {
        return Err(ChemError::Dimension(format!("{what} rows differ in length")));
    }
    Ok(first.len())
}

/// Applies `f` to every column of an `N × t` matrix, in parallel over columns.
fn per_column(rows: &[Vec<f64>], f: impl Fn(&mut Vec<f64>) -> f64 + Sync) -> Vec<f64> {
    let t = rows[0].len();
    (0..t)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(rows.len()),
            |col, j| {
                col.clear();
                col.extend(rows.iter().map(|r| r[j]));
                f(col)
            },
        )
        .collect()
}

/// Per-coefficient empirical quantile of the residuals at level
/// `(1 − α)(1 + 1/n)` (rank clipped to `n`), floored at [`RADIUS_FLOOR`].
pub fn init_radius_from_residuals(residuals: &[Vec<f64>], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_rows(residuals, "radius initialization set")?;
    let level = conformal_level(alpha, residuals.len());
    Ok(per_column(residuals, |col| empirical_quantile(col, level).max(RADIUS_FLOOR)))
}

pub fn init_radius(
    pairs: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
    alpha: f64,
) -> Result<Vec<f64>> {
    if pairs.is_empty() {
        return Err(invalid("radius initialization set is empty"));
    }
    init_radius_from_residuals(&residual_matrix(pairs, model, forward, features)?, alpha)
}

/// `λ_j^n` for one sample, given that sample's radii. The radii may depend on
/// the sample, which is how input-dependent radius functionals plug in.
pub fn lambda_scores(abs_residuals: &[f64], radii: &[f64], g: GFamily, bounds: Bounds) -> Vec<f64> {
    abs_residuals
        .iter()
        .zip(radii)
        .map(|(&e, &r)| g.lambda_score(e, r, bounds))
        .collect()
}

/// Calibrated multipliers and what the quantile rule did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaFit {
    pub lambdas: Vec<f64>,
    pub n: usize,
    /// Unclipped `(1 − α)(1 + 1/N)`.
    pub level: f64,
    /// Order-statistic rank used; `None` when the level exceeds 1.
    pub rank: Option<usize>,
    pub fraction_at_a: f64,
    pub fraction_at_b: f64,
    pub warnings: Vec<String>,
}

pub fn calibrate_lambda_from_residuals(
    residuals: &[Vec<f64>],
    radii: &[f64],
    g: GFamily,
    bounds: Bounds,
    alpha: f64,
) -> Result<LambdaFit> {
    check_alpha(alpha)?;
    bounds.validate()?;
    let t = check_rows(residuals, "calibration set")?;
    if radii.len() != t {
        return Err(ChemError::Dimension(format!(
            "{} radii for {t} coefficients",
            radii.len()
        )));
    }
    let n = residuals.len();
    let level = conformal_level(alpha, n);
    let rank = quantile_rank(level, n);
    let mut warnings = Vec::new();
    let lambdas = match rank {
        Some(k) => {
            let scores: Vec<Vec<f64>> = residuals
                .par_iter()
                .map(|row| lambda_scores(row, radii, g, bounds))
                .collect();
            per_column(&scores, |col| order_statistic(col, k))
        }
        None => {
            let need = ((1.0 - alpha) / alpha - super::RANK_TOLERANCE).ceil() as usize;
            warnings.push(format!(
                "calibration set has N = {n} samples; alpha = {alpha} needs N >= {need}. \
                 Quantile level {level:.6} exceeds 1, so every lambda is set to b = {}",
                bounds.b
            ));
            vec![bounds.b; t]
        }
    };
    let frac = |v: f64| lambdas.iter().filter(|&&l| l == v).count() as f64 / t as f64;
    Ok(LambdaFit {
        n,
        level,
        rank,
        fraction_at_a: frac(bounds.a),
        fraction_at_b: frac(bounds.b),
        warnings,
        lambdas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub model: RadiusModel,
    pub fit: LambdaFit,
}

impl CalibrationResult {
    pub fn warnings(&self) -> &[String] {
        &self.fit.warnings
    }
}

#[allow(clippy::too_many_arguments)]
pub fn calibrate_lambda(
    pairs: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
    radii: &[f64],
    g: GFamily,
    bounds: Bounds,
    alpha: f64,
) -> Result<CalibrationResult> {
    if pairs.is_empty() {
        return Err(invalid("calibration set is empty"));
    }
    let residuals = residual_matrix(pairs, model, forward, features)?;
    let fit = calibrate_lambda_from_residuals(&residuals, radii, g, bounds, alpha)?;
    Ok(CalibrationResult {
        model: RadiusModel {
            features: features.spec().clone(),
            transform_hash: features.spec().transform.hash(),
            radii: radii.to_vec(),
            lambdas: fit.lambdas.clone(),
            g,
            bounds,
            alpha,
        },
        fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub alpha: f64,
    pub g: GFamily,
    pub bounds: Bounds,
    /// Fit subband RMS statistics on the D₁ ground truths.
    pub normalize: bool,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            g: GFamily::Multiplicative,
            bounds: Bounds::default(),
            normalize: true,
        }
    }
}

/// Full split procedure: normalization and `r̂` from `d1`, `λ` from `d2`.
pub fn calibrate_split(
    d1: &[Pair],
    d2: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: Featurizer,
    opts: &CalibrationOptions,
) -> Result<(Featurizer, CalibrationResult)> {
    if d1.is_empty() {
        return Err(invalid("D1 is empty"));
    }
    let features = if opts.normalize {
        let truths: Vec<&Image> = d1.iter().map(|p| &p.y).collect();
        features.fit_rms(&truths)?
    } else {
        features
    };
    let radii = init_radius(d1, model, forward, &features, opts.alpha)?;
    let mut cal = calibrate_lambda(d2, model, forward, &features, &radii, opts.g, opts.bounds, opts.alpha)?;
    if d1.len() < 10 {
        cal.fit
            .warnings
            .push(format!("radius initialization used only {} samples", d1.len()));
    }
    Ok((features, cal))
}

/// Intervals `[Φ(X)^_j − R̂_j, Φ(X)^_j + R̂_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Intervals {
    pub centers: CoefficientField,
    pub half_widths: Vec<f64>,
}

impl Intervals {
    pub fn lower(&self, j: usize) -> f64 {
        self.centers.values()[j] - self.half_widths[j]
    }

    pub fn upper(&self, j: usize) -> f64 {
        self.centers.values()[j] + self.half_widths[j]
    }

    pub fn contains(&self, j: usize, v: f64) -> bool {
        (v - self.centers.values()[j]).abs() <= self.half_widths[j]
    }
}

fn check_features(features: &Featurizer, cal: &RadiusModel) -> Result<()> {
    if features.spec() != &cal.features {
        return Err(ChemError::LayoutMismatch(
            "calibration was fitted with a different transform or normalization".into(),
        ));
    }
    Ok(())
}

pub fn predict_intervals(
    x: &Image,
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
    cal: &RadiusModel,
) -> Result<Intervals> {
    check_features(features, cal)?;
    Ok(Intervals {
        centers: features.coefficients(&model.reconstruct(x, forward)?)?,
        half_widths: cal.half_widths(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub per_coefficient: Vec<f64>,
    pub mean: f64,
    pub samples: usize,
}

impl Coverage {
    pub fn mean_miscoverage(&self) -> f64 {
        1.0 - self.mean
    }
}

pub fn coverage_from_residuals(residuals: &[Vec<f64>], half_widths: &[f64]) -> Result<Coverage> {
    let t = check_rows(residuals, "test set")?;
    if half_widths.len() != t {
        return Err(ChemError::Dimension("half-width count differs from coefficient count".into()));
    }
    let mut hits = vec![0usize; t];
    for row in residuals {
        for ((h, &e), &w) in hits.iter_mut().zip(row).zip(half_widths) {
            if e <= w {
                *h += 1;
            }
        }
    }
    let m = residuals.len() as f64;
    let per_coefficient: Vec<f64> = hits.iter().map(|&h| h as f64 / m).collect();
    let mean = per_coefficient.iter().sum::<f64>() / t as f64;
    Ok(Coverage {
        per_coefficient,
        mean,
        samples: residuals.len(),
    })
}

pub fn coverage_rate(
    pairs: &[Pair],
    model: &dyn Reconstructor,
    forward: &ForwardModel,
    features: &Featurizer,
    cal: &RadiusModel,
) -> Result<Coverage> {
    check_features(features, cal)?;
    coverage_from_residuals(&residual_matrix(pairs, model, forward, features)?, &cal.half_widths())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::Psf;
    use crate::recon::Identity;
    use crate::transforms::TransformSpec;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn column(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn init_radius_examples() {
        let res = column(&(1..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
        assert_eq!(init_radius_from_residuals(&res, 0.1).unwrap(), vec![1.0]);
        let zero = vec![vec![0.0; 4]; 12];
        assert_eq!(init_radius_from_residuals(&zero, 0.1).unwrap(), vec![RADIUS_FLOOR; 4]);
        let scaled: Vec<Vec<f64>> = res.iter().map(|r| vec![r[0] * 3.5]).collect();
        let a = init_radius_from_residuals(&res, 0.3).unwrap()[0];
        let b = init_radius_from_residuals(&scaled, 0.3).unwrap()[0];
        assert!((b - 3.5 * a).abs() < 1e-15);
        assert!(init_radius_from_residuals(&[], 0.1).is_err());
    }

    #[test]
    fn calibrate_examples() {
        let g = GFamily::Multiplicative;
        let bounds = Bounds::default();
        let nine = column(&(1..=9).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
        let fit = calibrate_lambda_from_residuals(&nine, &[1.0], g, bounds, 0.1).unwrap();
        assert!((fit.level - 1.0).abs() < 1e-12);
        assert_eq!(fit.lambdas, vec![0.9]);
        assert!(fit.warnings.is_empty());

        let zeros = vec![vec![0.0; 3]; 20];
        let fit = calibrate_lambda_from_residuals(&zeros, &[0.5; 3], g, Bounds::new(0.25, 9.0).unwrap(), 0.1).unwrap();
        assert_eq!(fit.lambdas, vec![0.25; 3]);
        assert_eq!(fit.fraction_at_a, 1.0);

        // N = 4, α = 0.5: rank 3 of 4 for every ordering
        let ratios = [0.4, 0.1, 0.3, 0.2];
        let mut idx = [0, 1, 2, 3];
        for _ in 0..24 {
            let res = column(&idx.map(|i| ratios[i]));
            let fit = calibrate_lambda_from_residuals(&res, &[1.0], g, bounds, 0.5).unwrap();
            assert_eq!(fit.lambdas, vec![0.3]);
            assert_eq!(fit.rank, Some(3));
            next_permutation(&mut idx);
        }
    }

    fn next_permutation(a: &mut [usize]) {
        let Some(i) = (0..a.len() - 1).rev().find(|&i| a[i] < a[i + 1]) else {
            a.reverse();
            return;
        };
        let j = (i + 1..a.len()).rev().find(|&j| a[j] > a[i]).unwrap();
        a.swap(i, j);
        a[i + 1..].reverse();
    }

    #[test]
    fn too_few_samples_sets_b_with_warning() {
        let res = vec![vec![0.1, 0.2]; 8];
        let fit = calibrate_lambda_from_residuals(&res, &[1.0, 1.0], GFamily::Multiplicative, Bounds::default(), 0.1).unwrap();
        assert_eq!(fit.lambdas, vec![1e6, 1e6]);
        assert_eq!(fit.rank, None);
        assert_eq!(fit.fraction_at_b, 1.0);
        assert_eq!(fit.warnings.len(), 1);
        assert!(fit.warnings[0].contains("N >= 9"));
    }

    #[test]
    fn errors() {
        let res = vec![vec![0.1]; 5];
        let g = GFamily::Multiplicative;
        assert!(calibrate_lambda_from_residuals(&[], &[1.0], g, Bounds::default(), 0.1).is_err());
        assert!(calibrate_lambda_from_residuals(&res, &[1.0], g, Bounds { a: 2.0, b: 1.0 }, 0.1).is_err());
        assert!(calibrate_lambda_from_residuals(&res, &[1.0, 2.0], g, Bounds::default(), 0.1).is_err());
        assert!(calibrate_lambda_from_residuals(&res, &[1.0], g, Bounds::default(), 1.0).is_err());
    }

    /// Bisection on `g_λ(r) ≥ e` over `[a, b]`.
    fn bisect(g: GFamily, e: f64, r: f64, bounds: Bounds) -> f64 {
        if g.eval(bounds.a, r) >= e {
            return bounds.a;
        }
        if g.eval(bounds.b, r) < e {
            return bounds.b;
        }
        let (mut lo, mut hi) = (bounds.a, bounds.b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g.eval(mid, r) >= e {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    proptest! {
        #[test]
        fn closed_form_matches_bisection(e in 0.0f64..10.0, r in 0.0f64..5.0, a in 0.0f64..1.0, w in 0.5f64..20.0) {
            let bounds = Bounds::new(a, a + w).unwrap();
            for g in [GFamily::Multiplicative, GFamily::Additive] {
                let closed = g.lambda_score(e, r, bounds);
                let slow = bisect(g, e, r, bounds);
                prop_assert!((closed - slow).abs() < 1e-10 * (1.0 + slow), "{g:?} {closed} {slow}");
            }
        }

        #[test]
        fn permutation_invariance(seed in any::<u64>(), n in 10usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut res: Vec<Vec<f64>> = (0..n).map(|_| (0..5).map(|_| rng.random::<f64>()).collect()).collect();
            let radii = [0.3, 0.5, 1.0, 0.0, 2.0];
            let a = calibrate_lambda_from_residuals(&res, &radii, GFamily::Multiplicative, Bounds::default(), 0.1).unwrap();
            res.shuffle(&mut rng);
            let b = calibrate_lambda_from_residuals(&res, &radii, GFamily::Multiplicative, Bounds::default(), 0.1).unwrap();
            prop_assert_eq!(a.lambdas, b.lambdas);
        }
    }

    #[test]
    fn intervals_and_coverage() {
        let n = 8;
        let pairs: Vec<Pair> = (0..12)
            .map(|i| {
                let y = Image::from_fn(n, n, |r, c| ((r * 3 + c + i) % 5) as f64);
                Pair { x: y.map(|v| v + 0.1 * ((i % 3) as f64 - 1.0)), y }
            })
            .collect();
        let forward = ForwardModel { psf: Psf::delta(n), noise_sigma: 0.0 };
        let feats = Featurizer::new(&TransformSpec::parse("haar:2").unwrap(), n, n).unwrap();
        let radii = init_radius(&pairs[..6], &Identity, &forward, &feats, 0.2).unwrap();
        let cal = calibrate_lambda(&pairs[6..], &Identity, &forward, &feats, &radii, GFamily::Multiplicative, Bounds::default(), 0.2).unwrap();
        let iv = predict_intervals(&pairs[0].x, &Identity, &forward, &feats, &cal.model).unwrap();
        for j in 0..iv.half_widths.len() {
            assert!(iv.half_widths[j] >= 0.0);
            assert!(iv.contains(j, iv.centers.values()[j]));
            assert!(iv.lower(j) <= iv.upper(j));
        }
        let mut wide = cal.model.clone();
        wide.lambdas = vec![f64::INFINITY; wide.lambdas.len()];
        let cov = coverage_rate(&pairs, &Identity, &forward, &feats, &wide).unwrap();
        assert!(cov.per_coefficient.iter().all(|&c| c == 1.0));
        let other = Featurizer::new(&TransformSpec::parse("haar:1").unwrap(), n, n).unwrap();
        assert!(predict_intervals(&pairs[0].x, &Identity, &forward, &other, &cal.model).is_err());
    }

    #[test]
    fn degenerate_and_known_half_widths() {
        let res = vec![vec![0.0, 0.2]; 3];
        let cov = coverage_from_residuals(&res, &[0.0, 0.1]).unwrap();
        assert_eq!(cov.per_coefficient, vec![1.0, 0.0]);
        assert_eq!(cov.mean, 0.5);
        assert_eq!(GFamily::Multiplicative.eval(2.0, 0.5), 1.0);
    }
}
