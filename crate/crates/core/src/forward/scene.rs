use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Gaussian,
    /// Sersic-like profile `exp(-b_n((r/R)^(1/n) - 1))` with half-light radius `R`.
    Sersic { index: f64 },
}

/// One analytic source. Positions are in pixel coordinates (pixel centres at integers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub row: f64,
    pub col: f64,
    /// Integrated flux over the plane.
    pub flux: f64,
    /// `1 - minor/major` axis ratio, in `[0, 1)`.
    pub ellipticity: f64,
    /// Major-axis orientation, radians from the column axis.
    pub angle: f64,
    /// Gaussian σ along the major axis, or Sersic half-light radius.
    pub scale_radius: f64,
    pub profile: Profile,
}

impl Source {
    pub fn gaussian(row: f64, col: f64, flux: f64, sigma: f64) -> Self {
        Self {
            row,
            col,
            flux,
            ellipticity: 0.0,
            angle: 0.0,
            scale_radius: sigma,
            profile: Profile::Gaussian,
        }
    }

    fn validate(&self, side: usize) -> Result<()> {
        let inside = |v: f64| v >= 0.0 && v <= (side - 1) as f64;
        if !inside(self.row) || !inside(self.col) {
            return Err(invalid(format!(
                "source at ({}, {}) lies outside the {side}x{side} grid",
                self.row, self.col
            )));
        }
        if !(self.flux >= 0.0) {
            return Err(invalid("source flux must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.ellipticity) {
            return Err(invalid("ellipticity must lie in [0, 1)"));
        }
        if !(self.scale_radius > 0.0) {
            return Err(invalid("scale radius must be positive"));
        }
        if let Profile::Sersic { index } = self.profile {
            if !(index > 0.0) {
                return Err(invalid("Sersic index must be positive"));
            }
        }
        Ok(())
    }

    /// Surface brightness at a point.
    pub fn intensity(&self, row: f64, col: f64) -> f64 {
        let (dr, dc) = (row - self.row, col - self.col);
        let (s, c) = self.angle.sin_cos();
        let u = dc * c + dr * s;
        let v = -dc * s + dr * c;
        let q = 1.0 - self.ellipticity;
        match self.profile {
            Profile::Gaussian => {
                let sa = self.scale_radius;
                let sb = sa * q;
                let norm = self.flux / (2.0 * std::f64::consts::PI * sa * sb);
                norm * (-0.5 * (u * u / (sa * sa) + v * v / (sb * sb))).exp()
            }
            Profile::Sersic { index } => {
                let b = sersic_b(index);
                let re = self.scale_radius;
                let r = (u * u + (v / q) * (v / q)).sqrt();
                let total = 2.0 * std::f64::consts::PI * q * index * re * re * b.exp() * gamma(2.0 * index)
                    / b.powf(2.0 * index);
                self.flux / total * (-b * ((r / re).powf(1.0 / index) - 1.0)).exp()
            }
        }
    }

    /// Source sampled alone on a `side × side` grid.
    pub fn render(&self, side: usize) -> Image {
        Image::from_fn(side, side, |r, c| self.intensity(r as f64, c as f64))
    }
}

/// Ciotti & Bertin asymptotic expansion of the Sersic `b_n` constant.
fn sersic_b(n: f64) -> f64 {
    2.0 * n - 1.0 / 3.0 + 4.0 / (405.0 * n) + 46.0 / (25515.0 * n * n)
}

/// Random scene description. With `sources` set, the random fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub side: usize,
    pub min_sources: usize,
    pub max_sources: usize,
    /// Fluxes are drawn log-uniformly from this range.
    pub flux_range: (f64, f64),
    pub radius_range: (f64, f64),
    pub max_ellipticity: f64,
    /// Probability that a source uses the Sersic profile.
    pub sersic_fraction: f64,
    pub sersic_index: f64,
    /// Minimum distance of source centres from the border, in pixels.
    pub margin: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<Source>>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            side: 128,
            min_sources: 2,
            max_sources: 6,
            flux_range: (50.0, 2000.0),
            radius_range: (1.5, 5.0),
            max_ellipticity: 0.5,
            sersic_fraction: 0.5,
            sersic_index: 1.0,
            margin: 8.0,
            seed: 0,
            sources: None,
        }
    }
}

impl SceneConfig {
    pub fn with_side(mut self, side: usize) -> Self {
        self.side = side;
        self.margin = self.margin.min(side as f64 / 4.0);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.side == 0 {
            return Err(invalid("scene side must be >= 1"));
        }
        if self.min_sources > self.max_sources {
            return Err(invalid("min_sources exceeds max_sources"));
        }
        let (f0, f1) = self.flux_range;
        if !(f0 > 0.0 && f1 >= f0) {
            return Err(invalid("flux range must be positive and ordered"));
        }
        let (r0, r1) = self.radius_range;
        if !(r0 > 0.0 && r1 >= r0) {
            return Err(invalid("radius range must be positive and ordered"));
        }
        if !(0.0..1.0).contains(&self.max_ellipticity) {
            return Err(invalid("max ellipticity must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.sersic_fraction) {
            return Err(invalid("sersic fraction must lie in [0, 1]"));
        }
        if 2.0 * self.margin > (self.side - 1) as f64 {
            return Err(invalid("margin leaves no room for sources"));
        }
        Ok(())
    }

    /// Sources for this configuration with an explicit seed.
    pub fn draw_sources(&self, seed: u64) -> Result<Vec<Source>> {
        self.validate()?;
        if let Some(sources) = &self.sources {
            for s in sources {
                s.validate(self.side)?;
            }
            return Ok(sources.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(self.min_sources..=self.max_sources);
        let hi = (self.side - 1) as f64 - self.margin;
        let (lf0, lf1) = (self.flux_range.0.ln(), self.flux_range.1.ln());
        let sources = (0..count)
            .map(|_| {
                let profile = if rng.random_bool(self.sersic_fraction) {
                    Profile::Sersic {
                        index: self.sersic_index,
                    }
                } else {
                    Profile::Gaussian
                };
                Source {
                    row: rng.random_range(self.margin..=hi),
                    col: rng.random_range(self.margin..=hi),
                    flux: (lf0 + (lf1 - lf0) * rng.random::<f64>()).exp(),
                    ellipticity: self.max_ellipticity * rng.random::<f64>(),
                    angle: std::f64::consts::PI * rng.random::<f64>(),
                    scale_radius: rng.random_range(self.radius_range.0..=self.radius_range.1),
                    profile,
                }
            })
            .collect();
        Ok(sources)
    }
}

/// Sum of the sources sampled at pixel centres.
pub fn render_sources(side: usize, sources: &[Source]) -> Image {
    let mut img = Image::zeros(side, side);
    for s in sources {
        for r in 0..side {
            for c in 0..side {
                let v = img.get(r, c) + s.intensity(r as f64, c as f64);
                img.set(r, c, v);
            }
        }
    }
    img
}

pub fn synthesize_scene(cfg: &SceneConfig) -> Result<Image> {
    let sources = cfg.draw_sources(cfg.seed)?;
    Ok(render_sources(cfg.side, &sources))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit(side: usize, sources: Vec<Source>) -> SceneConfig {
        SceneConfig {
            sources: Some(sources),
            ..SceneConfig::default().with_side(side)
        }
    }

    /// Midpoint rule on a grid `sub` times finer than the pixels.
    fn fine_integral(s: &Source, side: usize, sub: usize) -> f64 {
        let h = 1.0 / sub as f64;
        let mut acc = 0.0;
        for i in 0..side * sub {
            for j in 0..side * sub {
                let r = -0.5 + (i as f64 + 0.5) * h;
                let c = -0.5 + (j as f64 + 0.5) * h;
                acc += s.intensity(r, c);
            }
        }
        acc * h * h
    }

    #[test]
    fn zero_sources_zero_image() {
        let img = synthesize_scene(&explicit(16, vec![])).unwrap();
        assert!(img.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gaussian_flux_is_conserved() {
        let s = Source::gaussian(15.3, 16.1, 250.0, 2.0);
        let img = synthesize_scene(&explicit(32, vec![s])).unwrap();
        let oracle = fine_integral(&s, 32, 8);
        assert!((oracle - 250.0).abs() / 250.0 < 1e-3);
        assert!((img.sum() - 250.0).abs() / 250.0 < 0.01);
    }

    #[test]
    fn sersic_flux_is_conserved() {
        let s = Source {
            profile: Profile::Sersic { index: 1.0 },
            ellipticity: 0.3,
            angle: 0.4,
            ..Source::gaussian(31.5, 31.5, 100.0, 3.0)
        };
        let img = synthesize_scene(&explicit(64, vec![s])).unwrap();
        assert!((img.sum() - 100.0).abs() / 100.0 < 0.02);
    }

    #[test]
    fn mirrored_sources_give_symmetric_image() {
        let side = 24;
        let a = Source {
            ellipticity: 0.0,
            ..Source::gaussian(7.25, 5.5, 80.0, 1.7)
        };
        let b = Source {
            col: (side - 1) as f64 - a.col,
            ..a
        };
        let img = synthesize_scene(&explicit(side, vec![a, b])).unwrap();
        for r in 0..side {
            for c in 0..side {
                assert!((img.get(r, c) - img.get(r, side - 1 - c)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn random_scenes_are_reproducible_and_valid() {
        let cfg = SceneConfig::default().with_side(64).with_seed(11);
        let a = cfg.draw_sources(3).unwrap();
        assert_eq!(a, cfg.draw_sources(3).unwrap());
        assert_ne!(a, cfg.draw_sources(4).unwrap());
        for s in &a {
            s.validate(64).unwrap();
        }
        let bad = explicit(8, vec![Source::gaussian(9.0, 1.0, 1.0, 1.0)]);
        assert!(synthesize_scene(&bad).is_err());
    }
}
