//! Tuned SGD vs tuned ridge on data drawn from a power-law spectrum.

use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::learning::{fit_both, measure, Split};
use crate::harness::output::{run_parallel, summarize, OutputDir, ResultRow, RunArtifacts, RunOptions, SummaryRow};
use crate::harness::plot::{render_svg, AxesConfig, Series};
use crate::harness::{split_indices, trial_seed};
use crate::rng::{derive_seed, streams};
use crate::spectral::synthetic_spectrum;
use crate::synthesis::{draw_spectrum_rows, make_ground_truth, responses_for, AggregationDataset};

#[derive(Debug, Clone)]
pub struct ComparisonOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
}

/// One trial on the spectrum path: draws `n_train` training rows plus a
/// disjoint validation block and a fresh evaluation population, tunes and
/// trains both learners and measures them. `stream` separates the random
/// draws of different `(β, N)` cells of the same trial.
pub(crate) fn spectrum_trial(
    cfg: &ExperimentConfig,
    beta: f64,
    n_train: usize,
    trial: usize,
    stream: u64,
) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(cfg.seed, trial);
    let spec = synthetic_spectrum(cfg.d, beta)?.to_decomposition();
    let gt = make_ground_truth(&spec, cfg.alignment())?;

    let n_val = cfg.validation_rows(n_train);
    let rows = draw_spectrum_rows(&spec, n_train + n_val, derive_seed(seed, streams::SPECTRUM, 2 * stream))?;
    let y = responses_for(&rows, &gt, cfg.sigma, derive_seed(seed, streams::NOISE, stream))?;
    let (train_idx, val_idx) = split_indices(rows.rows(), n_train, derive_seed(seed, streams::SPLIT, stream));
    let split = Split {
        train_x: rows.select_rows(&train_idx),
        train_y: train_idx.iter().map(|&i| y[i]).collect(),
        val_x: rows.select_rows(&val_idx),
    };
    let population = AggregationDataset::from_samples(
        draw_spectrum_rows(&spec, cfg.population, derive_seed(seed, streams::SPECTRUM, 2 * stream + 1))?,
        cfg.sigma,
        1,
        false,
    )?;

    let iterations = cfg.sgd_iterations.unwrap_or(n_train);
    let fitted = fit_both(cfg, &split, &gt.theta_star, iterations, derive_seed(seed, streams::SAMPLING, stream))?;
    fitted
        .iter()
        .map(|f| {
            let m = measure(
                cfg,
                f,
                &split,
                &gt,
                &population,
                iterations,
                derive_seed(seed, streams::REPEAT, stream),
            )?;
            Ok(ResultRow {
                experiment: cfg.experiment.as_str().to_string(),
                trial,
                algorithm: m.algorithm.as_str().to_string(),
                hyperparameter: m.hyper,
                delta: m.delta,
                bias_hat: m.bias_hat,
                var_hat: m.var_hat,
                layers: Some(1),
                beta: Some(beta),
                n: n_train,
                seed,
            })
        })
        .collect()
}

pub fn compute_comparison(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ComparisonOutcome> {
    if cfg.experiment != ExperimentKind::SgdVsRidge {
        return Err(Error::config("experiment", "expected sgd_vs_ridge"));
    }
    let nb = cfg.betas.len();
    let cells = run_parallel(jobs, nb * cfg.trials, |task| {
        let (bi, trial) = (task / cfg.trials, task % cfg.trials);
        spectrum_trial(cfg, cfg.betas[bi], cfg.n_train, trial, bi as u64)
    })?;
    let rows: Vec<ResultRow> = cells.into_iter().flatten().collect();
    let summary = summarize(&rows, "beta", |r| r.beta.unwrap_or(f64::NAN));
    Ok(ComparisonOutcome { rows, summary })
}

pub fn run_comparison(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(ComparisonOutcome, RunArtifacts)> {
    let outcome = compute_comparison(cfg, opts.jobs)?;
    let mut out = OutputDir::create(&opts.out_dir)?;
    out.write_csv("results.csv", &outcome.rows)?;
    out.write_csv("summary.csv", &outcome.summary)?;
    if cfg.plots {
        let mut betas = cfg.betas.clone();
        betas.sort_by(f64::total_cmp);
        betas.dedup();
        let series: Vec<Series> = ["sgd", "ridge"]
            .iter()
            .map(|alg| {
                let pts = betas
                    .iter()
                    .filter_map(|b| {
                        outcome
                            .summary
                            .iter()
                            .find(|s| s.value == *b && s.algorithm == *alg)
                            .map(|s| (*b, s.median_delta))
                    })
                    .collect();
                Series::new(*alg, pts)
            })
            .collect();
        let y_log = outcome.summary.iter().all(|s| s.median_delta > 0.0);
        let axes = AxesConfig {
            title: "Median excess risk vs spectral decay".into(),
            x_label: "beta".into(),
            y_label: "median excess risk".into(),
            y_log,
            ..Default::default()
        };
        out.write_text("comparison.svg", &render_svg(&series, &axes)?)?;
    }
    let artifacts = out.finish(cfg)?;
    Ok((outcome, artifacts))
}
