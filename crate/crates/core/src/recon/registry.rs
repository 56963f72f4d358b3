use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    Gamma, Hallucinator, Identity, Lambda, Placement, Reconstructor, Texture, Tikhonov,
    TikhonovConfig, TikhonovShrink, Wiener,
};
use crate::error::{invalid, ChemError, Result};
use crate::transforms::{TransformSpec, WaveletFamily};

struct Args {
    model: String,
    flags: Vec<String>,
    values: BTreeMap<String, String>,
}

impl Args {
    fn parse(model: &str, body: &str) -> Result<Self> {
        let mut flags = Vec::new();
        let mut values = BTreeMap::new();
        for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part.split_once('=') {
                Some((k, v)) => {
                    if values.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                        return Err(invalid(format!("{model}: duplicate argument `{k}`")));
                    }
                }
                None => flags.push(part.to_string()),
            }
        }
        Ok(Self {
            model: model.to_string(),
            flags,
            values,
        })
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.values.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| invalid(format!("{}: bad value `{v}` for `{key}`", self.model))),
        }
    }

    fn take_flag(&mut self, flag: &str) -> bool {
        let before = self.flags.len();
        self.flags.retain(|f| f != flag);
        self.flags.len() != before
    }

    /// A bare positional number, if any.
    fn take_number(&mut self) -> Result<Option<f64>> {
        if let Some(i) = self.flags.iter().position(|f| f.parse::<f64>().is_ok()) {
            return Ok(Some(self.flags.remove(i).parse().expect("checked")));
        }
        Ok(None)
    }

    fn finish(self) -> Result<()> {
        let mut left: Vec<String> = self.flags;
        left.extend(self.values.into_keys());
        if left.is_empty() {
            Ok(())
        } else {
            Err(invalid(format!("{}: unknown arguments {left:?}", self.model)))
        }
    }
}

fn tikhonov_config(args: &mut Args) -> Result<TikhonovConfig> {
    let sure = args.take_flag("sure");
    let lambda = match (args.take::<f64>("lambda")?, args.take_number()?) {
        (Some(_), Some(_)) => return Err(invalid("tikhonov: lambda given twice")),
        (Some(v), None) | (None, Some(v)) => Some(v),
        (None, None) => None,
    };
    let lambda = match (sure, lambda) {
        (true, Some(_)) => return Err(invalid("tikhonov: `sure` conflicts with a fixed lambda")),
        (_, Some(value)) => Lambda::Fixed { value },
        _ => Lambda::Sure,
    };
    let gamma = match args.take::<String>("gamma")?.as_deref() {
        None | Some("laplacian") => Gamma::Laplacian,
        Some("identity") => Gamma::Identity,
        Some(other) => return Err(invalid(format!("tikhonov: unknown gamma `{other}`"))),
    };
    let cfg = TikhonovConfig { lambda, gamma };
    cfg.validate()?;
    Ok(cfg)
}

/// Builds a reconstructor from an identifier such as `tikhonov:sure`,
/// `wiener:snr=100` or `hallucinator:base=tikhonov,amp=0.2,angle=45`.
///
/// Arguments of a hallucinator's base model are separated by `;`.
pub fn parse_reconstructor(s: &str) -> Result<Arc<dyn Reconstructor>> {
    let s = s.trim();
    let (name, body) = s.split_once(':').unwrap_or((s, ""));
    let mut args = Args::parse(name, body)?;
    let model: Arc<dyn Reconstructor> = match name {
        "identity" => Arc::new(Identity),
        "tikhonov" => Arc::new(Tikhonov::new(tikhonov_config(&mut args)?)?),
        "wiener" => {
            let snr = match (args.take::<f64>("snr")?, args.take_number()?) {
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => 100.0,
                _ => return Err(invalid("wiener: snr given twice")),
            };
            if !(snr > 0.0) {
                return Err(invalid("wiener: snr must be positive"));
            }
            Arc::new(Wiener { snr })
        }
        "tikhonov-soft" => {
            let tikhonov = Tikhonov::new(tikhonov_config(&mut args)?)?;
            let family: WaveletFamily = args.take::<String>("wavelet")?.as_deref().unwrap_or("db4").parse()?;
            let levels = args.take("levels")?.unwrap_or(3);
            let factor = args.take("factor")?.unwrap_or(3.0);
            if !(factor >= 0.0) {
                return Err(invalid("tikhonov-soft: factor must be >= 0"));
            }
            Arc::new(TikhonovShrink {
                tikhonov,
                wavelet: TransformSpec::Wavelet { family, levels },
                factor,
            })
        }
        "hallucinator" => {
            let base = match args.take::<String>("base")? {
                Some(b) => parse_reconstructor(&b.replace(';', ","))?,
                None => parse_reconstructor("tikhonov")?,
            };
            let d = Texture::default();
            let texture = Texture {
                angle_deg: args.take("angle")?.unwrap_or(d.angle_deg),
                period: args.take("period")?.unwrap_or(d.period),
                size: args.take("size")?.unwrap_or(d.size),
            };
            let amplitude = args.take("amp")?.unwrap_or(0.2);
            let fixed = (args.take::<usize>("row")?, args.take::<usize>("col")?);
            let offset = (args.take::<isize>("dr")?, args.take::<isize>("dc")?);
            let placement = match fixed {
                (Some(row), Some(col)) => {
                    if offset != (None, None) {
                        return Err(invalid("hallucinator: fixed placement takes no offset"));
                    }
                    Placement::Fixed { row, col }
                }
                (None, None) => Placement::Brightest {
                    dr: offset.0.unwrap_or(0),
                    dc: offset.1.unwrap_or(0),
                },
                _ => return Err(invalid("hallucinator: give both row and col")),
            };
            Arc::new(Hallucinator::new(base, texture, amplitude, placement)?)
        }
        other => {
            return Err(ChemError::InvalidInput(format!("unknown reconstructor `{other}`")));
        }
    };
    args.finish()?;
    Ok(model)
}
