use std::sync::Arc;

use chem_core::conformal::{calibrate_split, CalibrationOptions, Featurizer};
use chem_core::forward::{make_dataset, DegradationSpec, NoiseRule, SceneConfig, Splits};
use chem_core::metric::{evaluate, hallucination_map, perturbation_sweep, EvalOptions, SweepConfig};
use chem_core::recon::{Hallucinator, Identity, Placement, Reconstructor, Texture, Tikhonov, TikhonovConfig};
use chem_core::transforms::TransformSpec;

fn scene(side: usize, seed: u64) -> SceneConfig {
    SceneConfig {
        side,
        margin: 4.0,
        seed,
        ..SceneConfig::default()
    }
}

#[test]
fn identity_mse_grows_with_blur() {
    let cfg = SweepConfig {
        scene: scene(32, 3),
        nominal: DegradationSpec {
            fwhm: 2.0,
            noise: NoiseRule::Absolute { sigma: 0.0 },
            seed: 1,
        },
        fwhms: vec![2.0, 4.0, 6.0, 8.0],
        splits: Splits { d1: 6, d2: 6, test: 6 },
        transform: TransformSpec::parse("haar:3").unwrap(),
        calibration: CalibrationOptions {
            alpha: 0.2,
            ..CalibrationOptions::default()
        },
        eval: EvalOptions::default(),
    };
    let res = perturbation_sweep(&[Arc::new(Identity)], &cfg).unwrap();
    let mse: Vec<f64> = res.rows.iter().map(|r| r.mse).collect();
    assert_eq!(mse.len(), 4);
    assert!(mse.windows(2).all(|w| w[1] > w[0]), "{mse:?}");
}

#[test]
fn hallucinator_scores_above_its_base() {
    let side = 32;
    let splits = Splits { d1: 12, d2: 12, test: 8 };
    let data = make_dataset(
        &scene(side, 11),
        &DegradationSpec {
            fwhm: 3.0,
            ..DegradationSpec::default()
        },
        splits.total(),
    )
    .unwrap();
    let forward = data.forward_model().unwrap();
    let (d1, d2, test) = splits.split(&data.pairs).unwrap();
    let base: Arc<dyn Reconstructor> = Arc::new(Tikhonov::new(TikhonovConfig::default()).unwrap());
    let opts = CalibrationOptions {
        alpha: 0.1,
        ..CalibrationOptions::default()
    };
    let features = Featurizer::new(&TransformSpec::parse("shearlet").unwrap(), side, side).unwrap();
    let (features, cal) = calibrate_split(d1, d2, base.as_ref(), &forward, features, &opts).unwrap();
    let texture = Texture {
        size: 12,
        ..Texture::default()
    };
    let hall = Hallucinator::new(base.clone(), texture, 0.5, Placement::Fixed { row: 16, col: 16 }).unwrap();
    let eval = EvalOptions::default();
    let b = evaluate(test, base.as_ref(), &forward, &features, &cal.model, &eval).unwrap();
    let h = evaluate(test, &hall, &forward, &features, &cal.model, &eval).unwrap();
    assert!(h.report.aggregate > b.report.aggregate, "{} vs {}", h.report.aggregate, b.report.aggregate);
}

#[test]
fn all_scale_map_carries_more_energy() {
    let side = 32;
    let splits = Splits { d1: 10, d2: 10, test: 6 };
    let data = make_dataset(&scene(side, 5), &DegradationSpec::default(), splits.total()).unwrap();
    let forward = data.forward_model().unwrap();
    let (d1, d2, test) = splits.split(&data.pairs).unwrap();
    let model = Tikhonov::new(TikhonovConfig::default()).unwrap();
    let features = Featurizer::new(&TransformSpec::parse("db4:3").unwrap(), side, side).unwrap();
    let opts = CalibrationOptions {
        alpha: 0.1,
        ..CalibrationOptions::default()
    };
    let (features, cal) = calibrate_split(d1, d2, &model, &forward, features, &opts).unwrap();
    let e = evaluate(test, &model, &forward, &features, &cal.model, &EvalOptions::default()).unwrap();
    let pred = model.reconstruct(&test[0].x, &forward).unwrap();
    let source = features.coefficients(&pred).unwrap();
    let scales = source.layout().scale_count();
    let fine = hallucination_map(&e.report, &source, &features, 2, 0.5).unwrap();
    let all = hallucination_map(&e.report, &source, &features, scales, 0.5).unwrap();
    assert!(all.energy() > fine.energy(), "{} vs {}", all.energy(), fine.energy());
}
