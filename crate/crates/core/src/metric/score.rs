use serde::{Deserialize, Serialize};

use crate::error::{invalid, ChemError, Result};
use crate::transforms::{CoefficientField, SubbandLayout};

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || theta.is_nan() {
        return Err(invalid(format!("theta must be positive, got {theta}")));
    }
    Ok(())
}

/// `min{(|Φ(X)^_j − Ŷ_j| − R̂_j)_+, θ}` for every coefficient.
pub fn chem_per_coefficient(
    pred: &CoefficientField,
    truth: &CoefficientField,
    radii: &[f64],
    theta: f64,
) -> Result<Vec<f64>> {
    check_theta(theta)?;
    pred.check_compatible(truth)?;
    if radii.len() != pred.len() {
        return Err(ChemError::LayoutMismatch(format!(
            "{} radii for {} coefficients",
            radii.len(),
            pred.len()
        )));
    }
    Ok(pred
        .values()
        .iter()
        .zip(truth.values())
        .zip(radii)
        .map(|((a, b), r)| capped_excess((a - b).abs(), *r, theta))
        .collect())
}

pub fn capped_excess(residual: f64, radius: f64, theta: f64) -> f64 {
    (residual - radius).max(0.0).min(theta)
}

/// Half-width `θ √(ln(2/δ) / (2M))` of the two-sided Hoeffding interval.
pub fn hoeffding_bound(theta: f64, delta: f64, m: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(theta >= 0.0) {
        return Err(invalid("theta must be non-negative"));
    }
    if m == 0 {
        return Err(invalid("sample count must be >= 1"));
    }
    Ok(theta * ((2.0 / delta).ln() / (2.0 * m as f64)).sqrt())
}

/// Smallest `M` whose Hoeffding half-width is at most `half_width`.
pub fn hoeffding_samples(theta: f64, delta: f64, half_width: f64) -> Result<usize> {
    check_delta(delta)?;
    if !(half_width > 0.0) {
        return Err(invalid("target half-width must be positive"));
    }
    let m = (theta * theta * (2.0 / delta).ln() / (2.0 * half_width * half_width)).ceil();
    let mut m = (m as usize).max(1);
    // the ceiling can land one short after rounding
    while hoeffding_bound(theta, delta, m)? > half_width {
        m += 1;
    }
    Ok(m)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// How `H̃_j` is standardized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Standardization {
    /// `(H_j − H) / σ`, `σ` the population standard deviation of `{H_j}` over `j`.
    #[default]
    AcrossCoefficients,
    /// `(H_j − H) / σ_j`, `σ_j` the population standard deviation of the
    /// per-image scores at `j`.
    PerCoefficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub mode: Standardization,
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Denominator of the across-coefficient mode.
    pub std: Option<f64>,
    /// Set when a zero denominator forced scores to 0.
    pub guarded: bool,
}

/// Mean and population standard deviation, summed in index order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn standardize(values: &[f64], per_j_std: Option<&[f64]>) -> Result<Standardized> {
    if values.is_empty() {
        return Err(invalid("no scores to standardize"));
    }
    let (mean, std) = mean_std(values);
    match per_j_std {
        None => {
            let guarded = !(std > 0.0);
            let scores = if guarded {
                vec![0.0; values.len()]
            } else {
                values.iter().map(|v| (v - mean) / std).collect()
            };
            Ok(Standardized {
                mode: Standardization::AcrossCoefficients,
                scores,
                mean,
                std: Some(std),
                guarded,
            })
        }
        Some(s) => {
            if s.len() != values.len() {
                return Err(ChemError::Dimension("per-coefficient std has the wrong length".into()));
            }
            let mut guarded = false;
            let scores = values
                .iter()
                .zip(s)
                .map(|(v, &sd)| {
                    if sd > 0.0 {
                        (v - mean) / sd
                    } else {
                        guarded = true;
                        0.0
                    }
                })
                .collect();
            Ok(Standardized {
                mode: Standardization::PerCoefficient,
                scores,
                mean,
                std: None,
                guarded,
            })
        }
    }
}

/// Mean of `values` over each scale, finest first; the approximation band
/// counts as the last scale.
pub fn scale_means(values: &[f64], layout: &SubbandLayout) -> Vec<f64> {
    let k = layout.scale_count();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for band in layout.subbands() {
        let s = band.scale - 1;
        sums[s] += values[band.range()].iter().sum::<f64>();
        counts[s] += band.len();
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| if c > 0 { s / c as f64 } else { 0.0 })
        .collect()
}
