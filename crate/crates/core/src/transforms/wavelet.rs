//! Orthonormal multilevel 2D discrete wavelet transform with periodic extension.

use serde::{Deserialize, Serialize};

use super::coefficients::CoefficientField;
use super::layout::{Orientation, Subband, SubbandLayout};
use super::TransformSpec;
use crate::error::{ChemError, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    /// Daubechies, 4 vanishing moments (8 taps).
    Db4,
    /// Daubechies, 8 vanishing moments (16 taps).
    Db8,
}

impl WaveletFamily {
    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Db4 => "db4",
            WaveletFamily::Db8 => "db8",
        }
    }

    pub const ALL: [WaveletFamily; 3] = [WaveletFamily::Haar, WaveletFamily::Db4, WaveletFamily::Db8];
}

impl std::str::FromStr for WaveletFamily {
    type Err = ChemError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" | "db1" => Ok(WaveletFamily::Haar),
            "db4" => Ok(WaveletFamily::Db4),
            "db8" => Ok(WaveletFamily::Db8),
            other => Err(ChemError::InvalidInput(format!("unknown wavelet family {other:?}"))),
        }
    }
}

// Minimum-phase Daubechies scaling filters (synthesis lowpass order).
const DB4: [f64; 8] = [
    0.2303778133088965,
    0.7148465705529157,
    0.6308807679298589,
    -0.027983769416859854,
    -0.18703481171909309,
    0.030841381835560764,
    0.0328830116668852,
    -0.010597401785069032,
];

const DB8: [f64; 16] = [
    0.05441584224310401,
    0.31287159091429995,
    0.6756307362972898,
    0.5853546836542067,
    -0.015829105256349306,
    -0.2840155429615469,
    0.0004724845739132828,
    0.12874742662047847,
    -0.017369301001807547,
    -0.044088253930794755,
    0.013981027917398282,
    0.008746094047405777,
    -0.004870352993451574,
    -0.00039174037337694705,
    0.0006754494064505693,
    -0.00011747678412476953,
];

/// Orthonormal two-channel filter bank with periodic boundary handling.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSpec {
    family: WaveletFamily,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
}

/// Tolerance for the perfect-reconstruction identities checked on construction.
pub const FILTER_TOLERANCE: f64 = 1e-12;

impl WaveletSpec {
    pub fn new(family: WaveletFamily) -> Result<Self> {
        let lowpass: Vec<f64> = match family {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Db4 => DB4.to_vec(),
            WaveletFamily::Db8 => DB8.to_vec(),
        };
        let spec = Self::from_lowpass(family, lowpass);
        let defect = spec.orthonormality_defect();
        if defect > FILTER_TOLERANCE {
            return Err(ChemError::InvalidInput(format!(
                "{} filters violate orthonormality by {defect:e}",
                family.name()
            )));
        }
        Ok(spec)
    }

    fn from_lowpass(family: WaveletFamily, lowpass: Vec<f64>) -> Self {
        let n = lowpass.len();
        // Quadrature mirror: g[i] = (-1)^i h[L-1-i].
        let highpass = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * lowpass[n - 1 - i])
            .collect();
        Self {
            family,
            lowpass,
            highpass,
        }
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Largest violation of the orthonormal filter-bank identities:
    /// `<h, h(.-2k)> = δ_k`, `<g, g(.-2k)> = δ_k`, `<h, g(.-2k)> = 0`, `Σh = √2`.
    pub fn orthonormality_defect(&self) -> f64 {
        let shifted = |a: &[f64], b: &[f64], k: usize| -> f64 {
            (0..a.len())
                .filter(|&i| i + 2 * k < b.len())
                .map(|i| a[i + 2 * k] * b[i])
                .sum()
        };
        let (h, g) = (&self.lowpass, &self.highpass);
        let mut worst: f64 = (h.iter().sum::<f64>() - std::f64::consts::SQRT_2).abs();
        worst = worst.max(g.iter().sum::<f64>().abs());
        for k in 0..h.len() / 2 {
            let target = if k == 0 { 1.0 } else { 0.0 };
            worst = worst.max((shifted(h, h, k) - target).abs());
            worst = worst.max((shifted(g, g, k) - target).abs());
            worst = worst.max(shifted(h, g, k).abs());
            worst = worst.max(shifted(g, h, k).abs());
        }
        worst
    }

    /// One analysis step on a strided 1D signal of even length `n`.
    fn analyze(&self, input: &[f64], approx: &mut [f64], detail: &mut [f64]) {
        let n = input.len();
        for k in 0..n / 2 {
            let (mut a, mut d) = (0.0, 0.0);
            for (i, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                let x = input[(2 * k + i) % n];
                a += h * x;
                d += g * x;
            }
            approx[k] = a;
            detail[k] = d;
        }
    }

    fn synthesize(&self, approx: &[f64], detail: &[f64], output: &mut [f64]) {
        let n = output.len();
        output.fill(0.0);
        for k in 0..n / 2 {
            for (i, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                output[(2 * k + i) % n] += h * approx[k] + g * detail[k];
            }
        }
    }
}

/// Checks that a `rows × cols` image admits `levels` decimation steps.
pub fn check_wavelet_shape(rows: usize, cols: usize, levels: usize) -> Result<()> {
    if levels == 0 {
        return Err(ChemError::InvalidInput("levels must be >= 1".into()));
    }
    if levels >= usize::BITS as usize || rows.min(cols) < (1usize << levels) {
        return Err(ChemError::Dimension(format!(
            "{levels} levels too deep for a {rows}x{cols} image"
        )));
    }
    let step = 1usize << levels;
    if rows % step != 0 || cols % step != 0 {
        return Err(ChemError::Dimension(format!(
            "image sides {rows}x{cols} are not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

/// Layout of a `levels`-deep wavelet decomposition of a `rows × cols` image.
pub fn wavelet_layout(
    family: WaveletFamily,
    rows: usize,
    cols: usize,
    levels: usize,
) -> Result<SubbandLayout> {
    check_wavelet_shape(rows, cols, levels)?;
    let mut bands = Vec::with_capacity(3 * levels + 1);
    let (cr, cc) = (rows >> levels, cols >> levels);
    let mut offset = 0;
    bands.push(Subband {
        scale: levels + 1,
        orientation: Orientation::Approximation,
        offset,
        rows: cr,
        cols: cc,
    });
    offset += cr * cc;
    for scale in (1..=levels).rev() {
        let (r, c) = (rows >> scale, cols >> scale);
        for orientation in [Orientation::Lh, Orientation::Hl, Orientation::Hh] {
            bands.push(Subband {
                scale,
                orientation,
                offset,
                rows: r,
                cols: c,
            });
            offset += r * c;
        }
    }
    SubbandLayout::new(TransformSpec::Wavelet { family, levels }, rows, cols, levels, bands)
}

/// Copies one quadrant of the Mallat buffer into/out of the flat vector.
fn copy_block(
    mallat: &mut [f64],
    width: usize,
    (r0, c0): (usize, usize),
    band: &Subband,
    flat: &mut [f64],
    to_flat: bool,
) {
    for r in 0..band.rows {
        for c in 0..band.cols {
            let m = (r0 + r) * width + c0 + c;
            let f = band.offset + r * band.cols + c;
            if to_flat {
                flat[f] = mallat[m];
            } else {
                mallat[m] = flat[f];
            }
        }
    }
}

/// Top-left corner of a subband inside the Mallat pyramid.
fn block_origin(band: &Subband) -> (usize, usize) {
    match band.orientation {
        Orientation::Approximation => (0, 0),
        Orientation::Lh => (band.rows, 0),
        Orientation::Hl => (0, band.cols),
        Orientation::Hh => (band.rows, band.cols),
        Orientation::Shear { .. } => unreachable!("shear band in a wavelet layout"),
    }
}

/// Single-level 2D analysis on the top-left `rows × cols` block of `buf`.
fn analyze_block(spec: &WaveletSpec, buf: &mut [f64], width: usize, rows: usize, cols: usize) {
    let mut line = vec![0.0; rows.max(cols)];
    let mut lo = vec![0.0; rows.max(cols) / 2];
    let mut hi = vec![0.0; rows.max(cols) / 2];
    for r in 0..rows {
        line[..cols].copy_from_slice(&buf[r * width..r * width + cols]);
        spec.analyze(&line[..cols], &mut lo[..cols / 2], &mut hi[..cols / 2]);
        buf[r * width..r * width + cols / 2].copy_from_slice(&lo[..cols / 2]);
        buf[r * width + cols / 2..r * width + cols].copy_from_slice(&hi[..cols / 2]);
    }
    for c in 0..cols {
        for r in 0..rows {
            line[r] = buf[r * width + c];
        }
        spec.analyze(&line[..rows], &mut lo[..rows / 2], &mut hi[..rows / 2]);
        for r in 0..rows / 2 {
            buf[r * width + c] = lo[r];
            buf[(r + rows / 2) * width + c] = hi[r];
        }
    }
}

fn synthesize_block(spec: &WaveletSpec, buf: &mut [f64], width: usize, rows: usize, cols: usize) {
    let mut line = vec![0.0; rows.max(cols)];
    let mut lo = vec![0.0; rows.max(cols) / 2];
    let mut hi = vec![0.0; rows.max(cols) / 2];
    for c in 0..cols {
        for r in 0..rows / 2 {
            lo[r] = buf[r * width + c];
            hi[r] = buf[(r + rows / 2) * width + c];
        }
        spec.synthesize(&lo[..rows / 2], &hi[..rows / 2], &mut line[..rows]);
        for r in 0..rows {
            buf[r * width + c] = line[r];
        }
    }
    for r in 0..rows {
        lo[..cols / 2].copy_from_slice(&buf[r * width..r * width + cols / 2]);
        hi[..cols / 2].copy_from_slice(&buf[r * width + cols / 2..r * width + cols]);
        spec.synthesize(&lo[..cols / 2], &hi[..cols / 2], &mut line[..cols]);
        buf[r * width..r * width + cols].copy_from_slice(&line[..cols]);
    }
}

/// Forward multilevel DWT, flattened coarsest-first (LL, then LH/HL/HH per scale).
pub fn dwt_forward(img: &Image, spec: &WaveletSpec, levels: usize) -> Result<CoefficientField> {
    let (rows, cols) = img.shape();
    let layout = wavelet_layout(spec.family(), rows, cols, levels)?;
    let mut buf = img.data().to_vec();
    for level in 0..levels {
        analyze_block(spec, &mut buf, cols, rows >> level, cols >> level);
    }
    let mut flat = vec![0.0; layout.total_len()];
    for band in layout.subbands() {
        copy_block(&mut buf, cols, block_origin(band), band, &mut flat, true);
    }
    CoefficientField::new(layout, flat)
}

/// Inverse of [`dwt_forward`]. The field must be raw (not RMS-normalized).
pub fn dwt_inverse(coef: &CoefficientField, spec: &WaveletSpec) -> Result<Image> {
    let layout = coef.layout();
    let levels = match layout.transform {
        TransformSpec::Wavelet { family, levels } if family == spec.family() => levels,
        ref other => {
            return Err(ChemError::LayoutMismatch(format!(
                "layout for {other:?} cannot be inverted with {}",
                spec.family().name()
            )))
        }
    };
    if coef.is_normalized() {
        return Err(ChemError::LayoutMismatch(
            "denormalize coefficients before inversion".into(),
        ));
    }
    let expected = wavelet_layout(spec.family(), layout.image_rows, layout.image_cols, levels)?;
    if &expected != layout {
        return Err(ChemError::LayoutMismatch("inconsistent wavelet layout".into()));
    }
    let (rows, cols) = (layout.image_rows, layout.image_cols);
    let mut buf = vec![0.0; rows * cols];
    let mut flat = coef.values().to_vec();
    for band in layout.subbands() {
        copy_block(&mut buf, cols, block_origin(band), band, &mut flat, false);
    }
    for level in (0..levels).rev() {
        synthesize_block(spec, &mut buf, cols, rows >> level, cols >> level);
    }
    Image::new(rows, cols, buf)
}
