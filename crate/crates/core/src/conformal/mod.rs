//! Split conformal calibration of per-coefficient intervals.

mod calibrate;
mod features;
mod quantile;

use serde::{Deserialize, Serialize};

pub use calibrate::{
    calibrate_lambda, calibrate_lambda_from_residuals, calibrate_split, coverage_from_residuals,
    coverage_rate, init_radius, init_radius_from_residuals, lambda_scores, predict_intervals,
    residual_matrix, CalibrationOptions, CalibrationResult, Coverage, Intervals, LambdaFit,
};
pub use features::{FeatureSpec, Featurizer};
pub use quantile::{conformal_level, empirical_quantile, order_statistic, quantile_rank, RANK_TOLERANCE};

use crate::error::{invalid, Result};

/// Smallest radius used anywhere; keeps `g_λ(r̂)` informative when `r̂ = 0`.
pub const RADIUS_FLOOR: f64 = 1e-12;

/// Non-decreasing calibration family `g_λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GFamily {
    /// `g_λ(r) = λ · max(r, ε)`.
    #[default]
    Multiplicative,
    /// `g_λ(r) = r + λ`.
    Additive,
}

impl GFamily {
    pub fn id(&self) -> &'static str {
        match self {
            GFamily::Multiplicative => "multiplicative",
            GFamily::Additive => "additive",
        }
    }

    pub fn eval(&self, lambda: f64, r: f64) -> f64 {
        match self {
            GFamily::Multiplicative => lambda * r.max(RADIUS_FLOOR),
            GFamily::Additive => r + lambda,
        }
    }

    /// `inf{λ ∈ [a, b] : g_λ(r) ≥ residual}` in closed form; `b` when no λ in
    /// the range qualifies.
    pub fn lambda_score(&self, residual: f64, r: f64, bounds: Bounds) -> f64 {
        let raw = match self {
            GFamily::Multiplicative => residual / r.max(RADIUS_FLOOR),
            GFamily::Additive => residual - r,
        };
        raw.clamp(bounds.a, bounds.b)
    }
}

impl std::str::FromStr for GFamily {
    type Err = crate::ChemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplicative" | "mul" => Ok(GFamily::Multiplicative),
            "additive" | "add" => Ok(GFamily::Additive),
            other => Err(invalid(format!("unknown calibration family `{other}`"))),
        }
    }
}

/// Search range `[a, b]` for each `λ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub a: f64,
    pub b: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self { a: 0.0, b: 1e6 }
    }
}

impl Bounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let out = Self { a, b };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(invalid(format!("invalid bounds [{}, {}]", self.a, self.b)));
        }
        Ok(())
    }
}

/// Calibrated radii `R̂_j = g_{λ_j}(r̂_j)` tied to one coefficient map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusModel {
    pub features: FeatureSpec,
    pub transform_hash: String,
    pub radii: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub g: GFamily,
    pub bounds: Bounds,
    pub alpha: f64,
}

impl RadiusModel {
    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn radius(&self, j: usize) -> f64 {
        self.g.eval(self.lambdas[j], self.radii[j])
    }

    pub fn half_widths(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.radius(j)).collect()
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_families_are_monotone_in_lambda() {
        for g in [GFamily::Multiplicative, GFamily::Additive] {
            for r in [0.0, 1e-3, 0.5, 4.0] {
                let mut last = f64::NEG_INFINITY;
                for i in 0..200 {
                    let v = g.eval(i as f64 * 0.05, r);
                    assert!(v >= last);
                    last = v;
                }
            }
        }
        assert_eq!(GFamily::Multiplicative.eval(2.0, 0.5), 1.0);
        assert_eq!(GFamily::Multiplicative.eval(0.0, 0.5), 0.0);
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(1.0, 1.0).is_err());
        assert!(Bounds::new(2.0, 1.0).is_err());
        assert!(Bounds::new(0.0, f64::INFINITY).is_err());
        assert!(Bounds::new(0.0, 1.0).is_ok());
    }
}
