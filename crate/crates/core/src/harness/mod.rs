//! Experiment orchestration: seeded trials run in parallel, results written
//! as CSV with a JSON manifest and optional SVG plots.
//!
//! Every trial derives its randomness from `(master seed, trial index)`, and
//! results are gathered in trial order before writing, so output files do not
//! depend on the number of worker threads.

pub mod bounds_sweep;
pub mod comparison;
pub mod config;
mod learning;
pub mod output;
pub mod oversmoothing;
pub mod plot;
pub mod spectrum_study;
pub mod training;
pub mod tuning;

pub use bounds_sweep::{compute_bounds_sweep, run_bounds_sweep, BoundsOutcome};
pub use comparison::{compute_comparison, run_comparison, ComparisonOutcome};
pub use config::{resolve_config, AlignMode, DataPath, ExperimentConfig, ExperimentKind, PartialConfig};
pub use output::{median, OutputDir, ResultRow, RunArtifacts, RunOptions, SummaryRow};
pub use training::{compute_training, run_training, TrainingData, TrainingOutcome};
pub use oversmoothing::{compute_oversmoothing, run_oversmoothing, OversmoothingOutcome};
pub use plot::{emit_svg_plot, render_svg, AxesConfig, Series};
pub use spectrum_study::{compute_spectrum_study, run_spectrum_study, SpectrumOutcome};
pub use tuning::{clip_gamma_grid, tune_hyperparameter};

use crate::error::Result;
use crate::rng::{derive_seed, streams};

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, streams::TRIAL, trial as u64)
}

/// Random disjoint split of `0..len` into `first` indices and the rest.
pub fn split_indices(len: usize, first: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut perm = crate::rng::SplitMix64::new(derive_seed(seed, streams::SPLIT, 0)).permutation(len);
    let rest = perm.split_off(first.min(len));
    (perm, rest)
}

/// Runs the experiment named in `cfg` and writes its artifacts.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunArtifacts> {
    Ok(match cfg.experiment {
        ExperimentKind::SpectrumStudy => run_spectrum_study(cfg, opts)?.1,
        ExperimentKind::SgdVsRidge => run_comparison(cfg, opts)?.1,
        ExperimentKind::Oversmoothing => run_oversmoothing(cfg, opts)?.1,
        ExperimentKind::BoundsSweep => run_bounds_sweep(cfg, opts)?.1,
    })
}
