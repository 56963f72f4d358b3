use crate::error::Result;
use crate::image::Image;
use crate::transforms::{Transform, TransformSpec};

/// Soft-thresholds every detail coefficient at `factor · σ̂`, with `σ̂` the
/// median absolute finest-scale coefficient over 0.6745.
pub fn wavelet_soft_threshold(x: &Image, spec: &TransformSpec, factor: f64) -> Result<Image> {
    let t = Transform::new(spec)?;
    let mut coef = t.forward(x)?;
    let layout = coef.layout().clone();
    let mut finest: Vec<f64> = layout
        .indices_up_to_scale(1)
        .into_iter()
        .map(|j| coef.values()[j].abs())
        .collect();
    if finest.is_empty() {
        return Ok(x.clone());
    }
    finest.sort_by(f64::total_cmp);
    let tau = factor * finest[finest.len() / 2] / 0.6745;
    for band in layout.subbands() {
        if band.orientation.is_approximation() {
            continue;
        }
        for v in &mut coef.values_mut()[band.range()] {
            *v = v.signum() * (v.abs() - tau).max(0.0);
        }
    }
    t.inverse(&coef)
}
