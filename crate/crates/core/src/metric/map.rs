use super::report::ChemReport;
use crate::conformal::Featurizer;
use crate::error::{ChemError, Result};
use crate::image::Image;
use crate::transforms::CoefficientField;

/// Keeps the coefficients of `source` whose standardized score exceeds
/// `threshold` and whose scale is at most `scale_count`, then inverts.
///
/// `source` is usually the prediction's coefficient field.
pub fn hallucination_map(
    report: &ChemReport,
    source: &CoefficientField,
    features: &Featurizer,
    scale_count: usize,
    threshold: f64,
) -> Result<Image> {
    let scores = &report.standardized.scores;
    if scores.len() != source.len() {
        return Err(ChemError::LayoutMismatch(format!(
            "{} scores for {} coefficients",
            scores.len(),
            source.len()
        )));
    }
    let layout = source.layout();
    let kept = source.filtered(|j| scores[j] > threshold && layout.scale_of(j) <= scale_count);
    features.inverse(&kept)
}
