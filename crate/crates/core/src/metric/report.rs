use serde::{Deserialize, Serialize};

use super::score::{check_theta, hoeffding_bound, mean_std, standardize, Standardization, Standardized};
use crate::error::{invalid, ChemError, Result};

/// Running per-coefficient sums of `H^θ(X_m, Y_m)_j` and their squares.
///
/// Images must be added in a fixed order for bit-reproducible results.
#[derive(Debug, Clone)]
pub struct ScoreAccumulator {
    theta: f64,
    count: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    rows: Option<Vec<Vec<f64>>>,
}

impl ScoreAccumulator {
    pub fn new(len: usize, theta: f64, keep_rows: bool) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self {
            theta,
            count: 0,
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
            rows: keep_rows.then(Vec::new),
        })
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, scores: Vec<f64>) -> Result<()> {
        if scores.len() != self.sum.len() {
            return Err(ChemError::Dimension(format!(
                "score row has {} entries, expected {}",
                scores.len(),
                self.sum.len()
            )));
        }
        if let Some(bad) = scores.iter().find(|&&s| !(0.0..=self.theta).contains(&s)) {
            return Err(invalid(format!("score {bad} outside [0, {}]", self.theta)));
        }
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(&scores) {
            *s += v;
            *q += v * v;
        }
        self.count += 1;
        if let Some(rows) = &mut self.rows {
            rows.push(scores);
        }
        Ok(())
    }

    /// Assembles the report; `alpha` is recorded, `delta` sets the Hoeffding half-width.
    pub fn finish(self, alpha: f64, delta: f64, mode: Standardization) -> Result<ChemReport> {
        if self.count == 0 {
            return Err(invalid("no images were scored"));
        }
        let m = self.count as f64;
        let per_coefficient: Vec<f64> = self.sum.iter().map(|s| s / m).collect();
        let per_coefficient_std: Vec<f64> = self
            .sum_sq
            .iter()
            .zip(&per_coefficient)
            .map(|(q, mu)| (q / m - mu * mu).max(0.0).sqrt())
            .collect();
        let aggregate = per_coefficient.iter().sum::<f64>() / per_coefficient.len() as f64;
        let standardized = match mode {
            Standardization::AcrossCoefficients => standardize(&per_coefficient, None)?,
            Standardization::PerCoefficient => standardize(&per_coefficient, Some(&per_coefficient_std))?,
        };
        Ok(ChemReport {
            theta: self.theta,
            alpha,
            delta,
            images: self.count,
            aggregate,
            hoeffding_half_width: hoeffding_bound(self.theta, delta, self.count)?,
            per_coefficient,
            per_coefficient_std,
            standardized,
            per_image: self.rows,
        })
    }
}

/// Aggregated CHEM scores over a test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChemReport {
    pub theta: f64,
    pub alpha: f64,
    pub delta: f64,
    /// Test-set size `M`.
    pub images: usize,
    /// `H^θ(Φ)`: mean of `per_coefficient`.
    pub aggregate: f64,
    pub hoeffding_half_width: f64,
    /// `H^θ(Φ)_j`: mean over images.
    pub per_coefficient: Vec<f64>,
    /// Population standard deviation over images at each `j`.
    pub per_coefficient_std: Vec<f64>,
    pub standardized: Standardized,
    /// `M × t̂` per-image scores, when kept; stored separately from the JSON.
    #[serde(skip)]
    pub per_image: Option<Vec<Vec<f64>>>,
}

impl ChemReport {
    /// Recomputes the standardized scores with another convention.
    pub fn restandardize(&mut self, mode: Standardization) -> Result<()> {
        self.standardized = match mode {
            Standardization::AcrossCoefficients => standardize(&self.per_coefficient, None)?,
            Standardization::PerCoefficient => standardize(&self.per_coefficient, Some(&self.per_coefficient_std))?,
        };
        Ok(())
    }

    /// Spread of the per-coefficient means over `j`.
    pub fn coefficient_spread(&self) -> f64 {
        mean_std(&self.per_coefficient).1
    }
}

/// Builds a report from an `M × t̂` score matrix.
pub fn chem_aggregate(scores: &[Vec<f64>], theta: f64, alpha: f64, delta: f64) -> Result<ChemReport> {
    let first = scores.first().ok_or_else(|| invalid("score matrix is empty"))?;
    let mut acc = ScoreAccumulator::new(first.len(), theta, true)?;
    for row in scores {
        acc.push(row.clone())?;
    }
    acc.finish(alpha, delta, Standardization::default())
}

/// Convenience for [`ChemReport::standardized`] under a chosen convention.
pub fn standardize_scores(report: &ChemReport, mode: Standardization) -> Result<Standardized> {
    let mut r = report.clone();
    r.restandardize(mode)?;
    Ok(r.standardized)
}
