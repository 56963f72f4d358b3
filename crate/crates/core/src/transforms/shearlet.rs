//! Band-limited cone-adapted shearlet frame built in the frequency domain.
//!
//! Windows are products of a Meyer-type radial partition (on the sup-norm of
//! the frequency) and a Meyer-type partition of the slope inside each cone.
//! The squared windows sum to one at every DFT bin, so the transform is a
//! Parseval frame and its adjoint is the inverse.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::coefficients::CoefficientField;
use super::layout::{Cone, Orientation, Subband, SubbandLayout};
use super::TransformSpec;
use crate::error::{ChemError, Result};
use crate::fft::{signed_freq, Fft2};
use crate::image::Image;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShearletSpec {
    /// Number of band-pass scales.
    pub scales: usize,
    /// Shear level per scale, listed coarsest to finest. A scale with level
    /// `l` is split into `2^(l+2)` directional bands.
    pub shear_levels: Vec<u32>,
}

impl Default for ShearletSpec {
    fn default() -> Self {
        Self {
            scales: 3,
            shear_levels: vec![1, 2, 2],
        }
    }
}

impl ShearletSpec {
    pub fn new(scales: usize, shear_levels: Vec<u32>) -> Result<Self> {
        let spec = Self {
            scales,
            shear_levels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scales == 0 {
            return Err(ChemError::InvalidInput("shearlet scales must be >= 1".into()));
        }
        if self.shear_levels.len() != self.scales {
            return Err(ChemError::InvalidInput(format!(
                "{} shear levels given for {} scales",
                self.shear_levels.len(),
                self.scales
            )));
        }
        if self.shear_levels.iter().any(|&l| l > 6) {
            return Err(ChemError::InvalidInput("shear level above 6".into()));
        }
        Ok(())
    }

    /// Shear level of detail scale `scale` (1 = finest).
    pub fn shear_level(&self, scale: usize) -> u32 {
        self.shear_levels[self.scales - scale]
    }

    /// Smallest admissible image side: the lowpass window must span at least one bin.
    pub fn min_side(&self) -> usize {
        1 << (self.scales + 2)
    }

    pub fn check_image(&self, rows: usize, cols: usize) -> Result<()> {
        self.validate()?;
        if rows != cols {
            return Err(ChemError::Dimension(format!(
                "shearlet transform needs a square image, got {rows}x{cols}"
            )));
        }
        if !rows.is_power_of_two() {
            return Err(ChemError::Dimension(format!(
                "shearlet image side {rows} is not a power of two"
            )));
        }
        if rows < self.min_side() {
            return Err(ChemError::Dimension(format!(
                "side {rows} too small for {} scales (need >= {})",
                self.scales,
                self.min_side()
            )));
        }
        Ok(())
    }
}

/// Meyer auxiliary polynomial: smooth, 0 at 0, 1 at 1, `v(x) + v(1-x) = 1`.
fn meyer_aux(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        x.powi(4) * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x.powi(3))
    }
}

/// Radial lowpass: 1 below `r`, 0 above `2r`.
fn radial_lowpass(rho: f64, r: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 * meyer_aux(rho / r - 1.0)).cos()
}

/// Directional bump with `Σ_k bump(u - k)² = 1`.
fn bump(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        0.0
    } else {
        (std::f64::consts::FRAC_PI_2 * meyer_aux(a)).cos()
    }
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    /// Interior shear of the horizontal cone (|ω_row| <= |ω_col|).
    Horizontal(i32),
    Vertical(i32),
    /// Slope sign of the glued diagonal window.
    Diagonal(i32),
}

impl Direction {
    fn all(level: u32) -> Vec<Direction> {
        let top = 1i32 << level;
        let mut dirs = Vec::new();
        for k in -(top - 1)..=top - 1 {
            dirs.push(Direction::Horizontal(k));
            dirs.push(Direction::Vertical(k));
        }
        dirs.push(Direction::Diagonal(-1));
        dirs.push(Direction::Diagonal(1));
        dirs.sort_by(|a, b| {
            a.angle_deg(level)
                .partial_cmp(&b.angle_deg(level))
                .expect("finite angles")
        });
        dirs
    }

    /// Orientation of captured structures, degrees in [0, 180).
    fn angle_deg(self, level: u32) -> f64 {
        let scale = f64::from(1u32 << level);
        let a = match self {
            Direction::Horizontal(k) => (f64::from(k) / scale).atan().to_degrees() + 90.0,
            Direction::Vertical(k) => 180.0 - (f64::from(k) / scale).atan().to_degrees(),
            Direction::Diagonal(s) => 90.0 + 45.0 * f64::from(s),
        };
        let a = a.rem_euclid(180.0);
        // snap tiny rounding residue at the wrap point
        if (a - 180.0).abs() < 1e-9 {
            0.0
        } else {
            a
        }
    }

    fn orientation(self, level: u32) -> Orientation {
        let (cone, shear) = match self {
            Direction::Horizontal(k) => (Cone::Horizontal, k),
            Direction::Vertical(k) => (Cone::Vertical, k),
            Direction::Diagonal(s) => (Cone::Diagonal, s * (1 << level)),
        };
        Orientation::Shear {
            cone,
            shear,
            angle_deg: self.angle_deg(level),
        }
    }

    /// Directional window at frequency (ω_row, ω_col), not both zero.
    fn window(self, level: u32, wr: f64, wc: f64) -> f64 {
        let top = f64::from(1u32 << level);
        let horizontal_cone = wr.abs() <= wc.abs();
        match self {
            Direction::Horizontal(k) if horizontal_cone => bump(top * wr / wc - f64::from(k)),
            Direction::Vertical(k) if !horizontal_cone => bump(top * wc / wr - f64::from(k)),
            Direction::Diagonal(s) => {
                let u = if horizontal_cone {
                    top * wr / wc
                } else {
                    top * wc / wr
                };
                bump(u - f64::from(s) * top)
            }
            _ => 0.0,
        }
    }
}

/// Precomputed frequency windows for one image side.
#[derive(Debug, Clone)]
pub struct ShearletSystem {
    spec: ShearletSpec,
    side: usize,
    layout: SubbandLayout,
    /// One window per subband, row-major over DFT bins.
    windows: Vec<Vec<f64>>,
}

impl ShearletSystem {
    pub fn new(spec: &ShearletSpec, side: usize) -> Result<Self> {
        spec.check_image(side, side)?;
        let n = side;
        let nf = n as f64;
        let scales = spec.scales;
        // Φ_s lowpass radii: N / 2^(s+2) for s = 1..=scales.
        let lowpass_radius = |s: usize| nf / f64::from(1u32 << (s + 2));

        let mut raw: Vec<Vec<f64>> = Vec::new();
        let mut bands = Vec::new();
        let mut offset = 0;
        let mut push_band = |bands: &mut Vec<Subband>, scale, orientation| {
            bands.push(Subband {
                scale,
                orientation,
                offset,
                rows: n,
                cols: n,
            });
            offset += n * n;
        };

        let freqs: Vec<f64> = (0..n).map(|k| signed_freq(k, n) as f64).collect();
        let grid = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            let mut w = vec![0.0; n * n];
            for r in 0..n {
                for c in 0..n {
                    w[r * n + c] = f(freqs[r], freqs[c]);
                }
            }
            w
        };
        let rho = |wr: f64, wc: f64| wr.abs().max(wc.abs());

        raw.push(grid(&|wr, wc| radial_lowpass(rho(wr, wc), lowpass_radius(scales))));
        push_band(&mut bands, scales + 1, Orientation::Approximation);

        for scale in (1..=scales).rev() {
            let level = spec.shear_level(scale);
            let outer = |p: f64| {
                if scale == 1 {
                    1.0
                } else {
                    radial_lowpass(p, lowpass_radius(scale - 1))
                }
            };
            let radial = grid(&|wr, wc| {
                let p = rho(wr, wc);
                let inner = radial_lowpass(p, lowpass_radius(scale));
                (outer(p).powi(2) - inner.powi(2)).max(0.0).sqrt()
            });
            for dir in Direction::all(level) {
                let w = grid(&|wr, wc| {
                    if wr == 0.0 && wc == 0.0 {
                        0.0
                    } else {
                        dir.window(level, wr, wc)
                    }
                });
                raw.push(radial.iter().zip(&w).map(|(a, b)| a * b).collect());
                push_band(&mut bands, scale, dir.orientation(level));
            }
        }

        // Average each squared window with its mirror bin so every window is
        // Hermitian-symmetric (only the Nyquist row/column changes).
        let mirror = |k: usize| (n - k) % n;
        let windows = raw
            .into_iter()
            .map(|w| {
                let mut out = vec![0.0; n * n];
                for r in 0..n {
                    for c in 0..n {
                        let a = w[r * n + c];
                        let b = w[mirror(r) * n + mirror(c)];
                        out[r * n + c] = (0.5 * (a * a + b * b)).sqrt();
                    }
                }
                out
            })
            .collect();

        let layout = SubbandLayout::new(
            TransformSpec::Shearlet {
                scales,
                shear_levels: spec.shear_levels.clone(),
            },
            n,
            n,
            scales,
            bands,
        )?;
        Ok(Self {
            spec: spec.clone(),
            side: n,
            layout,
            windows,
        })
    }

    pub fn spec(&self) -> &ShearletSpec {
        &self.spec
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    /// Frequency window of subband `band`, row-major over DFT bins.
    pub fn window(&self, band: usize) -> &[f64] {
        &self.windows[band]
    }

    /// Largest deviation of `Σ_b |ψ̂_b(ω)|²` from one over the grid.
    pub fn partition_defect(&self) -> f64 {
        (0..self.side * self.side)
            .map(|i| {
                let s: f64 = self.windows.iter().map(|w| w[i] * w[i]).sum();
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn forward(&self, img: &Image) -> Result<CoefficientField> {
        if img.shape() != (self.side, self.side) {
            return Err(ChemError::Dimension(format!(
                "shearlet system built for {0}x{0}, got {1:?}",
                self.side,
                img.shape()
            )));
        }
        let fft = Fft2::new(self.side, self.side);
        let spectrum = fft.forward_image(img);
        let mut values = Vec::with_capacity(self.layout.total_len());
        let mut buf = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        for w in &self.windows {
            for ((b, s), &g) in buf.iter_mut().zip(&spectrum).zip(w) {
                *b = s * g;
            }
            fft.inverse(&mut buf);
            values.extend(buf.iter().map(|z| z.re));
        }
        CoefficientField::new(self.layout.clone(), values)
    }

    /// Adjoint synthesis, which is the inverse for this Parseval frame.
    pub fn inverse(&self, coef: &CoefficientField) -> Result<Image> {
        if coef.layout() != &self.layout {
            return Err(ChemError::LayoutMismatch(
                "coefficient layout does not match the shearlet system".into(),
            ));
        }
        if coef.is_normalized() {
            return Err(ChemError::LayoutMismatch(
                "denormalize coefficients before inversion".into(),
            ));
        }
        let n2 = self.side * self.side;
        let fft = Fft2::new(self.side, self.side);
        let mut acc = vec![Complex64::new(0.0, 0.0); n2];
        let mut buf = vec![Complex64::new(0.0, 0.0); n2];
        for (band, w) in self.layout.subbands().iter().zip(&self.windows) {
            let vals = &coef.values()[band.range()];
            if vals.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (b, &v) in buf.iter_mut().zip(vals) {
                *b = Complex64::new(v, 0.0);
            }
            fft.forward(&mut buf);
            for ((a, b), &g) in acc.iter_mut().zip(&buf).zip(w) {
                *a += b * g;
            }
        }
        Ok(fft.inverse_real(acc))
    }
}

pub fn shearlet_forward(img: &Image, spec: &ShearletSpec) -> Result<CoefficientField> {
    spec.check_image(img.height(), img.width())?;
    ShearletSystem::new(spec, img.height())?.forward(img)
}

pub fn shearlet_inverse(coef: &CoefficientField, spec: &ShearletSpec) -> Result<Image> {
    let layout = coef.layout();
    ShearletSystem::new(spec, layout.image_rows)?.inverse(coef)
}
