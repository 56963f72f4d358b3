use std::path::PathBuf;
use std::process::ExitCode;

use chem_core::forward::NoiseRule;
use chem_core::pipeline::{
    cmd_calibrate, cmd_evaluate, cmd_sweep, cmd_synth, cmd_theory_sweep, exit_code, RunConfig, CALIBRATION_FILE,
    DATASET_DIR,
};
use chem_core::ChemError;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Conformal hallucination estimation pipelines.
#[derive(Debug, Parser)]
#[command(name = "chem", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of the JSON config (or the defaults).
#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "CHEM_OUTPUT_ROOT")]
    output: Option<PathBuf>,
    /// Transform, e.g. `db8:4`, `haar:3`, `shearlet:3:1,2,2`.
    #[arg(long, global = true)]
    transform: Option<String>,
    /// Reconstructor id, e.g. `tikhonov:sure,gamma=laplacian`.
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    theta: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    d1: Option<usize>,
    #[arg(long, global = true)]
    d2: Option<usize>,
    #[arg(long, global = true)]
    test: Option<usize>,
    #[arg(long, global = true)]
    scene_seed: Option<u64>,
    #[arg(long, global = true)]
    noise_seed: Option<u64>,
    /// Image side in pixels.
    #[arg(long, global = true)]
    side: Option<usize>,
    /// Nominal PSF FWHM in pixels.
    #[arg(long, global = true)]
    fwhm: Option<f64>,
    /// Fixed noise sigma in raw scene units (replaces the S/N rule).
    #[arg(long, global = true)]
    noise_sigma: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize a degraded/ground-truth dataset.
    Synth,
    /// Calibrate per-coefficient radii on D1/D2.
    Calibrate {
        /// Dataset directory; defaults to `<output>/dataset`.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Score the test split against a calibration sidecar.
    Evaluate {
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Sidecar JSON; defaults to `<output>/calibration.json`.
        #[arg(long)]
        calibration: Option<PathBuf>,
        /// Export hallucination maps.
        #[arg(long)]
        maps: bool,
        #[arg(long)]
        map_images: Option<usize>,
        #[arg(long)]
        map_scales: Option<usize>,
        #[arg(long)]
        map_threshold: Option<f64>,
        /// Also write the per-image score matrix.
        #[arg(long)]
        keep_per_image: bool,
    },
    /// FWHM perturbation sweep.
    Sweep {
        /// Test-set FWHMs, comma separated.
        #[arg(long, value_delimiter = ',')]
        fwhms: Vec<f64>,
        /// Model ids to compare; repeatable.
        #[arg(long = "sweep-model")]
        models: Vec<String>,
    },
    /// Polynomial approximation error tables.
    TheorySweep {
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        ms: Vec<usize>,
        #[arg(long)]
        random_fields: Option<usize>,
        /// `identity`, `softclip` or `smoothing:<sigma>`; comma separated.
        #[arg(long, value_delimiter = ',')]
        operators: Vec<String>,
    },
}

fn load_config(c: &Common) -> Result<RunConfig, ChemError> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ChemError::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($field:expr, $value:expr) => {
            if let Some(v) = $value.clone() {
                $field = v;
            }
        };
    }
    set!(cfg.output, c.output);
    set!(cfg.transform, c.transform);
    set!(cfg.model, c.model);
    set!(cfg.alpha, c.alpha);
    set!(cfg.theta, c.theta);
    set!(cfg.delta, c.delta);
    set!(cfg.splits.d1, c.d1);
    set!(cfg.splits.d2, c.d2);
    set!(cfg.splits.test, c.test);
    set!(cfg.seeds.scene, c.scene_seed);
    set!(cfg.seeds.noise, c.noise_seed);
    set!(cfg.scene.side, c.side);
    set!(cfg.degradation.fwhm, c.fwhm);
    if let Some(sigma) = c.noise_sigma {
        cfg.degradation.noise = NoiseRule::Absolute { sigma };
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), ChemError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<(), ChemError> {
    let mut cfg = load_config(&cli.common)?;
    let dataset_or_default = |d: Option<PathBuf>, cfg: &RunConfig| d.unwrap_or_else(|| cfg.output.join(DATASET_DIR));
    match cli.command {
        Command::Synth => print_json(&cmd_synth(&cfg)?),
        Command::Calibrate { dataset } => {
            let summary = cmd_calibrate(&cfg, &dataset_or_default(dataset, &cfg))?;
            eprintln!(
                "clipped at a: {:.4}, clipped at b: {:.4}",
                summary.fraction_at_a, summary.fraction_at_b
            );
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&summary)
        }
        Command::Evaluate {
            dataset,
            calibration,
            maps,
            map_images,
            map_scales,
            map_threshold,
            keep_per_image,
        } => {
            cfg.maps.enabled |= maps;
            cfg.keep_per_image |= keep_per_image;
            if let Some(v) = map_images {
                cfg.maps.images = v;
            }
            if let Some(v) = map_scales {
                cfg.maps.scales = v;
            }
            if let Some(v) = map_threshold {
                cfg.maps.threshold = v;
            }
            let dataset = dataset_or_default(dataset, &cfg);
            let sidecar = calibration.unwrap_or_else(|| cfg.output.join(CALIBRATION_FILE));
            let file = cmd_evaluate(&cfg, &dataset, &sidecar)?;
            println!(
                "{{\"aggregate\": {}, \"hoeffding_half_width\": {}, \"mse\": {}, \"images\": {}}}",
                file.report.aggregate, file.report.hoeffding_half_width, file.mse, file.report.images
            );
            Ok(())
        }
        Command::Sweep { fwhms, models } => {
            if !fwhms.is_empty() {
                cfg.fwhms = fwhms;
            }
            if !models.is_empty() {
                cfg.sweep_models = models;
            }
            print!("{}", cmd_sweep(&cfg)?);
            Ok(())
        }
        Command::TheorySweep {
            dim,
            ms,
            random_fields,
            operators,
        } => {
            let t = &mut cfg.theory;
            if let Some(d) = dim {
                t.dim = d;
            }
            if !ms.is_empty() {
                t.ms = ms;
            }
            if let Some(n) = random_fields {
                t.random_fields = n;
            }
            if !operators.is_empty() {
                t.operators = operators;
            }
            let s = cmd_theory_sweep(&cfg)?;
            let worst = s
                .bernstein
                .iter()
                .filter(|r| !r.within_bound())
                .map(|r| format!("{} m={}", r.function, r.m))
                .collect::<Vec<_>>();
            if !worst.is_empty() {
                eprintln!("rows above the Bernstein bound: {}", worst.join(", "));
            }
            println!(
                "{{\"bernstein_rows\": {}, \"discretization_rows\": {}}}",
                s.bernstein.len(),
                s.discretization.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
