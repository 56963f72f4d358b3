//! Reproducible command pipelines shared by the CLI and the Python bindings.

mod commands;
mod config;

pub use commands::{
    cmd_calibrate, cmd_evaluate, cmd_synth, cmd_sweep, cmd_theory_sweep, exit_code, CalibrateSummary, MapIndex,
    MapRecord, SynthSummary, TheorySummary, CALIBRATION_FILE, DATASET_DIR, MAPS_DIR, REPORT_FILE, SWEEP_FILE,
    THEORY_DIR,
};
pub use config::{MapOptions, RunConfig, Seeds, TheoryConfig};
