use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Reconstructor;
use crate::error::{invalid, Result};
use crate::forward::ForwardModel;
use crate::image::Image;

/// Hann-tapered oriented sinusoid on a square patch, scaled to unit RMS.
///
/// `angle_deg` is the stripe orientation, measured from the column axis
/// toward the row axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub angle_deg: f64,
    pub period: f64,
    pub size: usize,
}

impl Default for Texture {
    fn default() -> Self {
        Self {
            angle_deg: 45.0,
            period: 3.0,
            size: 16,
        }
    }
}

impl Texture {
    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(invalid("texture patch must be non-empty"));
        }
        if !(self.period > 0.0) || !self.angle_deg.is_finite() {
            return Err(invalid("texture needs a positive period and a finite angle"));
        }
        Ok(())
    }

    /// The `size × size` patch; its mean square is 1.
    pub fn patch(&self) -> Image {
        let s = self.size;
        let theta = self.angle_deg.to_radians();
        let (nr, nc) = (theta.cos(), -theta.sin());
        let mid = (s as f64 - 1.0) / 2.0;
        let taper = |i: usize| (std::f64::consts::PI * (i as f64 + 0.5) / s as f64).sin().powi(2);
        let raw = Image::from_fn(s, s, |r, c| {
            let phase = std::f64::consts::TAU * ((r as f64 - mid) * nr + (c as f64 - mid) * nc) / self.period;
            taper(r) * taper(c) * phase.cos()
        });
        let rms = (raw.energy() / raw.len() as f64).sqrt();
        if rms > 0.0 {
            raw.map(|v| v / rms)
        } else {
            // degenerate phase pattern: fall back to the taper alone
            let t = Image::from_fn(s, s, |r, c| taper(r) * taper(c));
            let rms = (t.energy() / t.len() as f64).sqrt();
            t.map(|v| v / rms)
        }
    }
}

/// Where the patch centre goes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Placement {
    /// Brightest pixel of the base output, shifted by an offset.
    Brightest { dr: isize, dc: isize },
    Fixed { row: usize, col: usize },
}

impl Default for Placement {
    fn default() -> Self {
        Placement::Brightest { dr: 0, dc: 0 }
    }
}

/// Adds `amplitude · patch` (wrapping periodically) centred at `(row, col)`.
pub fn inject_texture(img: &Image, texture: &Texture, amplitude: f64, row: usize, col: usize) -> Result<Image> {
    texture.validate()?;
    let (h, w) = img.shape();
    if texture.size > h || texture.size > w {
        return Err(invalid(format!(
            "texture patch {} does not fit a {h}x{w} image",
            texture.size
        )));
    }
    let mut out = img.clone();
    if amplitude == 0.0 {
        return Ok(out);
    }
    let patch = texture.patch();
    let s = texture.size;
    let r0 = row + h - s / 2;
    let c0 = col + w - s / 2;
    for i in 0..s {
        for j in 0..s {
            let (r, c) = ((r0 + i) % h, (c0 + j) % w);
            out.set(r, c, out.get(r, c) + amplitude * patch.get(i, j));
        }
    }
    Ok(out)
}

/// Wraps a reconstructor and adds a texture absent from any ground truth.
#[derive(Debug, Clone)]
pub struct Hallucinator {
    pub base: Arc<dyn Reconstructor>,
    pub texture: Texture,
    pub amplitude: f64,
    pub placement: Placement,
}

impl Hallucinator {
    pub fn new(base: Arc<dyn Reconstructor>, texture: Texture, amplitude: f64, placement: Placement) -> Result<Self> {
        if !(amplitude >= 0.0) || !amplitude.is_finite() {
            return Err(invalid(format!("amplitude must be >= 0, got {amplitude}")));
        }
        texture.validate()?;
        Ok(Self {
            base,
            texture,
            amplitude,
            placement,
        })
    }

    fn centre(&self, img: &Image) -> (usize, usize) {
        let (h, w) = img.shape();
        match self.placement {
            Placement::Fixed { row, col } => (row % h, col % w),
            Placement::Brightest { dr, dc } => {
                let (r, c) = img.argmax();
                (
                    (r as isize + dr).rem_euclid(h as isize) as usize,
                    (c as isize + dc).rem_euclid(w as isize) as usize,
                )
            }
        }
    }
}

impl Reconstructor for Hallucinator {
    fn id(&self) -> String {
        let mut s = format!(
            "hallucinator:base={},amp={},angle={},period={},size={}",
            self.base.id().replace(',', ";"),
            self.amplitude,
            self.texture.angle_deg,
            self.texture.period,
            self.texture.size
        );
        match self.placement {
            Placement::Brightest { dr: 0, dc: 0 } => {}
            Placement::Brightest { dr, dc } => s.push_str(&format!(",dr={dr},dc={dc}")),
            Placement::Fixed { row, col } => s.push_str(&format!(",row={row},col={col}")),
        }
        s
    }

    fn is_deterministic(&self) -> bool {
        self.base.is_deterministic()
    }

    fn reconstruct(&self, y: &Image, model: &ForwardModel) -> Result<Image> {
        let out = self.base.reconstruct(y, model)?;
        let (r, c) = self.centre(&out);
        inject_texture(&out, &self.texture, self.amplitude, r, c)
    }
}
