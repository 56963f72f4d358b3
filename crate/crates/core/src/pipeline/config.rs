use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::approx::ModulusOptions;
use crate::conformal::{check_alpha, Bounds, CalibrationOptions, GFamily};
use crate::error::{invalid, Result};
use crate::forward::{DegradationSpec, SceneConfig, Splits};
use crate::io::sha256_hex;
use crate::metric::{EvalOptions, Standardization, SweepConfig};
use crate::recon::{parse_reconstructor, Reconstructor};
use crate::transforms::TransformSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub scene: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { scene: 0, noise: 1 }
    }
}

/// Hallucination-map export for `evaluate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapOptions {
    pub enabled: bool,
    /// Number of leading test images to map.
    pub images: usize,
    pub scales: usize,
    pub threshold: f64,
}

impl Default for MapOptions {
    fn default() -> Self {
        Self {
            enabled: false,
            images: 4,
            scales: 2,
            threshold: 0.5,
        }
    }
}

/// Inputs of `theory-sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TheoryConfig {
    pub dim: usize,
    pub ms: Vec<usize>,
    /// Number of random trigonometric fields.
    pub random_fields: usize,
    pub max_freq: f64,
    /// Adds the closed-form fields (linear, sinusoid, and in 1D square and |z|).
    pub analytic: bool,
    /// `identity`, `softclip` or `smoothing:<sigma>`.
    pub operators: Vec<String>,
    pub modulus: ModulusOptions,
}

impl Default for TheoryConfig {
    fn default() -> Self {
        Self {
            dim: 1,
            ms: vec![4, 8, 16, 32, 64],
            random_fields: 5,
            max_freq: 3.0,
            analytic: true,
            operators: vec!["identity".into(), "softclip".into()],
            modulus: ModulusOptions::default(),
        }
    }
}

/// Everything a pipeline command needs. `seeds` overrides the seeds inside
/// `scene` and `degradation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub transform: String,
    pub model: String,
    pub alpha: f64,
    pub theta: f64,
    pub delta: f64,
    pub splits: Splits,
    pub seeds: Seeds,
    pub scene: SceneConfig,
    pub degradation: DegradationSpec,
    pub g: GFamily,
    pub bounds: Bounds,
    pub normalize: bool,
    pub standardization: Standardization,
    pub keep_per_image: bool,
    pub maps: MapOptions,
    /// FWHM list for `sweep`.
    pub fwhms: Vec<f64>,
    /// Models for `sweep`; empty means just `model`.
    pub sweep_models: Vec<String>,
    pub theory: TheoryConfig,
    /// Not part of the config hash.
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            transform: "db8:4".into(),
            model: "tikhonov:sure,gamma=laplacian".into(),
            alpha: 0.01,
            theta: 1.0,
            delta: 0.05,
            splits: Splits::default(),
            seeds: Seeds::default(),
            scene: SceneConfig::default(),
            degradation: DegradationSpec::default(),
            g: GFamily::default(),
            bounds: Bounds::default(),
            normalize: true,
            standardization: Standardization::default(),
            keep_per_image: false,
            maps: MapOptions::default(),
            fwhms: vec![10.0, 15.0, 20.0, 25.0],
            sweep_models: Vec::new(),
            theory: TheoryConfig::default(),
            output: PathBuf::from("chem-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| invalid(format!("config: {e}")))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(invalid(format!("theta must be positive, got {}", self.theta)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        self.splits.validate()?;
        self.bounds.validate()?;
        self.scene_config().validate()?;
        self.transform_spec()?;
        self.reconstructor()?;
        for m in &self.sweep_models {
            parse_reconstructor(m)?;
        }
        if self.fwhms.iter().any(|f| !(*f > 0.0)) {
            return Err(invalid("sweep FWHMs must be positive"));
        }
        Ok(())
    }

    pub fn transform_spec(&self) -> Result<TransformSpec> {
        TransformSpec::parse(&self.transform)
    }

    pub fn reconstructor(&self) -> Result<std::sync::Arc<dyn Reconstructor>> {
        parse_reconstructor(&self.model)
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            seed: self.seeds.scene,
            ..self.scene.clone()
        }
    }

    pub fn degradation_spec(&self) -> DegradationSpec {
        DegradationSpec {
            seed: self.seeds.noise,
            ..self.degradation.clone()
        }
    }

    pub fn calibration_options(&self) -> CalibrationOptions {
        CalibrationOptions {
            alpha: self.alpha,
            g: self.g,
            bounds: self.bounds,
            normalize: self.normalize,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            theta: self.theta,
            delta: self.delta,
            keep_per_image: self.keep_per_image,
            standardization: self.standardization,
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        Ok(SweepConfig {
            scene: self.scene_config(),
            nominal: self.degradation_spec(),
            fwhms: self.fwhms.clone(),
            splits: self.splits,
            transform: self.transform_spec()?,
            calibration: self.calibration_options(),
            eval: self.eval_options(),
        })
    }

    /// SHA-256 of the canonical JSON encoding with seeds folded in and the
    /// output directory cleared.
    pub fn hash(&self) -> String {
        let canon = Self {
            scene: self.scene_config(),
            degradation: self.degradation_spec(),
            output: PathBuf::new(),
            ..self.clone()
        };
        sha256_hex(&serde_json::to_vec(&canon).expect("config serializes"))
    }

    /// Hash of the fields a calibration depends on; `evaluate` refuses a
    /// sidecar whose hash differs.
    pub fn calibration_hash(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            transform: &'a str,
            model: &'a str,
            alpha: f64,
            d1: usize,
            d2: usize,
            scene: SceneConfig,
            degradation: DegradationSpec,
            g: GFamily,
            bounds: Bounds,
            normalize: bool,
        }
        let key = Key {
            transform: &self.transform,
            model: &self.model,
            alpha: self.alpha,
            d1: self.splits.d1,
            d2: self.splits.d2,
            scene: self.scene_config(),
            degradation: self.degradation_spec(),
            g: self.g,
            bounds: self.bounds,
            normalize: self.normalize,
        };
        sha256_hex(&serde_json::to_vec(&key).expect("key serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn invalid_fields_are_rejected() {
        let bad = [
            RunConfig { alpha: 1.0, ..RunConfig::default() },
            RunConfig { theta: 0.0, ..RunConfig::default() },
            RunConfig { delta: 0.0, ..RunConfig::default() },
            RunConfig { splits: Splits { d1: 0, d2: 1, test: 1 }, ..RunConfig::default() },
            RunConfig { transform: "db5:2".into(), ..RunConfig::default() },
            RunConfig { model: "magic".into(), ..RunConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
        assert!(RunConfig::from_json("{\"alpha\": \"x\"}").is_err());
    }

    #[test]
    fn hash_ignores_output_and_tracks_seeds() {
        let a = RunConfig::default();
        let b = RunConfig { output: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = RunConfig { seeds: Seeds { scene: 9, noise: 1 }, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
        assert_ne!(a.calibration_hash(), c.calibration_hash());
        let d = RunConfig { theta: 2.0, ..a.clone() };
        assert_ne!(a.hash(), d.hash());
        assert_eq!(a.calibration_hash(), d.calibration_hash());
    }
}
