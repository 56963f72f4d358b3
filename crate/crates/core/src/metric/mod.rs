//! Capped hallucination scores, aggregation, bounds, maps and sweeps.

mod evaluate;
mod map;
mod report;
mod score;
mod sweep;

pub use evaluate::{evaluate, EvalOptions, Evaluation};
pub use map::hallucination_map;
pub use report::{chem_aggregate, standardize_scores, ChemReport, ScoreAccumulator};
pub use score::{
    capped_excess, chem_per_coefficient, hoeffding_bound, hoeffding_samples, mean_std, scale_means,
    standardize, Standardization, Standardized,
};
pub use sweep::{perturbation_sweep, sweep_datasets, SweepConfig, SweepData, SweepResult, SweepRow};
