use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::psf::{convolve, gaussian_psf, Psf};
use super::scene::{render_sources, SceneConfig, Source};
use super::ForwardModel;
use crate::error::{invalid, Result};
use crate::image::Image;

/// Per-sample seed derived from a base seed and a sample index.
pub fn derive_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Concrete degradation `y = h * x + η` with `η ~ N(0, σ²)` i.i.d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationConfig {
    pub psf: Psf,
    pub noise_sigma: f64,
    pub seed: u64,
}

pub fn degrade(x: &Image, cfg: &DegradationConfig) -> Result<Image> {
    if !(cfg.noise_sigma >= 0.0) {
        return Err(invalid("noise sigma must be non-negative"));
    }
    let mut y = convolve(x, &cfg.psf)?;
    if cfg.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for v in y.data_mut() {
            let n: f64 = StandardNormal.sample(&mut rng);
            *v += cfg.noise_sigma * n;
        }
    }
    Ok(y)
}

/// How the noise level of a dataset is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum NoiseRule {
    /// Fixed σ in raw scene intensity units.
    Absolute { sigma: f64 },
    /// σ set so that the faintest blurred source peak has this S/N.
    FaintestPeakSnr { snr: f64 },
}

impl Default for NoiseRule {
    fn default() -> Self {
        NoiseRule::FaintestPeakSnr { snr: 1.0 }
    }
}

/// Recipe for the degraded half of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegradationSpec {
    pub fwhm: f64,
    pub noise: NoiseRule,
    pub seed: u64,
}

impl Default for DegradationSpec {
    fn default() -> Self {
        Self {
            fwhm: 15.0,
            noise: NoiseRule::default(),
            seed: 1,
        }
    }
}

/// Affine map from raw intensities to model space: `v * scale + offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub scale: f64,
    pub offset: f64,
}

impl Normalization {
    /// Maps `[0, max]` onto `[-1, 1]`.
    pub fn unit_range(max: f64) -> Self {
        if max > 0.0 {
            Self {
                scale: 2.0 / max,
                offset: -1.0,
            }
        } else {
            Self {
                scale: 1.0,
                offset: 0.0,
            }
        }
    }

    pub fn apply(&self, img: &Image) -> Image {
        img.map(|v| v * self.scale + self.offset)
    }

    pub fn invert(&self, img: &Image) -> Image {
        img.map(|v| (v - self.offset) / self.scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    /// Degraded observation in model space.
    pub x: Image,
    /// Ground truth in model space.
    pub y: Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub scene_seed: u64,
    pub noise_seed: u64,
    pub sources: usize,
    /// `(max(h * y) - offset) / σ`, in model-space units; absent when σ = 0.
    pub peak_snr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub side: usize,
    pub fwhm: f64,
    pub psf_sigma: f64,
    pub noise_rule: NoiseRule,
    /// Noise standard deviation in raw scene units.
    pub noise_sigma_raw: f64,
    /// Noise standard deviation in model space.
    pub noise_sigma: f64,
    pub normalization: Normalization,
    pub scene_seed: u64,
    pub noise_seed: u64,
    /// Range of blurred per-source peak S/N over the whole dataset.
    pub min_source_peak_snr: Option<f64>,
    pub max_source_peak_snr: Option<f64>,
    pub pairs: Vec<PairRecord>,
}

impl DatasetManifest {
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn forward_model(&self) -> Result<ForwardModel> {
        Ok(ForwardModel {
            psf: gaussian_psf(self.side, self.fwhm)?,
            noise_sigma: self.noise_sigma,
        })
    }
}

/// Sizes of the radius-initialization, calibration and test splits, taken in
/// that order from a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub d1: usize,
    pub d2: usize,
    pub test: usize,
}

impl Default for Splits {
    fn default() -> Self {
        Self {
            d1: 50,
            d2: 50,
            test: 100,
        }
    }
}

impl Splits {
    pub fn total(&self) -> usize {
        self.d1 + self.d2 + self.test
    }

    pub fn validate(&self) -> Result<()> {
        if self.d1 == 0 || self.d2 == 0 || self.test == 0 {
            return Err(invalid("every split needs at least one pair"));
        }
        Ok(())
    }

    pub fn label(&self, index: usize) -> &'static str {
        if index < self.d1 {
            "d1"
        } else if index < self.d1 + self.d2 {
            "d2"
        } else {
            "test"
        }
    }

    /// `(D₁, D₂, test)` slices.
    pub fn split<'a, T>(&self, items: &'a [T]) -> Result<(&'a [T], &'a [T], &'a [T])> {
        self.validate()?;
        if items.len() < self.total() {
            return Err(invalid(format!(
                "dataset has {} pairs, splits need {}",
                items.len(),
                self.total()
            )));
        }
        let (d1, rest) = items.split_at(self.d1);
        let (d2, rest) = rest.split_at(self.d2);
        Ok((d1, d2, &rest[..self.test]))
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub pairs: Vec<Pair>,
    pub manifest: DatasetManifest,
}

impl Dataset {
    pub fn forward_model(&self) -> Result<ForwardModel> {
        self.manifest.forward_model()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Largest value of each source blurred on its own.
fn blurred_source_peaks(side: usize, sources: &[Source], psf: &Psf) -> Result<Vec<f64>> {
    sources
        .iter()
        .map(|s| Ok(convolve(&s.render(side), psf)?.max()))
        .collect()
}

/// Generates `n` (degraded, truth) pairs. Scene `i` uses seed
/// `derive_seed(scene.seed, i)` and noise seed `derive_seed(deg.seed, i)`, so
/// datasets differing only in `deg` share their ground truths.
pub fn make_dataset(scene: &SceneConfig, deg: &DegradationSpec, n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("dataset size must be >= 1"));
    }
    scene.validate()?;
    let side = scene.side;
    let psf = gaussian_psf(side, deg.fwhm)?;

    let drawn: Vec<(u64, Vec<Source>)> = (0..n)
        .map(|i| {
            let seed = derive_seed(scene.seed, i);
            Ok((seed, scene.draw_sources(seed)?))
        })
        .collect::<Result<_>>()?;
    let truths: Vec<Image> = drawn
        .par_iter()
        .map(|(_, sources)| render_sources(side, sources))
        .collect();
    let peaks: Vec<Vec<f64>> = drawn
        .par_iter()
        .map(|(_, sources)| blurred_source_peaks(side, sources, &psf))
        .collect::<Result<_>>()?;
    let all_peaks = || peaks.iter().flatten().copied();
    let faintest = all_peaks().fold(f64::INFINITY, f64::min);
    let brightest = all_peaks().fold(f64::NEG_INFINITY, f64::max);

    let noise_sigma_raw = match deg.noise {
        NoiseRule::Absolute { sigma } => {
            if !(sigma >= 0.0) {
                return Err(invalid("noise sigma must be non-negative"));
            }
            sigma
        }
        NoiseRule::FaintestPeakSnr { snr } => {
            if !(snr > 0.0) {
                return Err(invalid("target S/N must be positive"));
            }
            if !faintest.is_finite() {
                return Err(invalid("S/N noise rule needs at least one source"));
            }
            faintest / snr
        }
    };
    let snr = |peak: f64| (noise_sigma_raw > 0.0 && peak.is_finite()).then(|| peak / noise_sigma_raw);

    let norm = Normalization::unit_range(truths.iter().map(Image::max).fold(0.0, f64::max));
    let noise_sigma = noise_sigma_raw * norm.scale;

    let built: Vec<(Pair, PairRecord)> = truths
        .into_par_iter()
        .zip(drawn.par_iter())
        .enumerate()
        .map(|(i, (truth, (scene_seed, sources)))| {
            let noise_seed = derive_seed(deg.seed, i);
            let blurred = convolve(&truth, &psf)?;
            let cfg = DegradationConfig {
                psf: psf.clone(),
                noise_sigma: noise_sigma_raw,
                seed: noise_seed,
            };
            let x = norm.apply(&degrade(&truth, &cfg)?);
            let y = norm.apply(&truth);
            let peak = (norm.apply(&blurred).max() - norm.offset) / norm.scale;
            let record = PairRecord {
                index: i,
                scene_seed: *scene_seed,
                noise_seed,
                sources: sources.len(),
                peak_snr: snr(peak),
                x_path: None,
                y_path: None,
                split: None,
            };
            Ok((Pair { x, y }, record))
        })
        .collect::<Result<_>>()?;
    let (pairs, records): (Vec<_>, Vec<_>) = built.into_iter().unzip();

    let manifest = DatasetManifest {
        version: 1,
        side,
        fwhm: deg.fwhm,
        psf_sigma: psf.sigma(),
        noise_rule: deg.noise,
        noise_sigma_raw,
        noise_sigma,
        normalization: norm,
        scene_seed: scene.seed,
        noise_seed: deg.seed,
        min_source_peak_snr: snr(faintest),
        max_source_peak_snr: snr(brightest),
        pairs: records,
    };
    Ok(Dataset { pairs, manifest })
}
