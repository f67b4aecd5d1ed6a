//! Excess risk as graph layers are stacked, with the ground truth fixed in the
//! one-layer covariance eigenbasis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_operator, generate_ba};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::learning::{fit_both, measure, Split};
use crate::harness::output::{run_parallel, summarize, OutputDir, ResultRow, RunArtifacts, RunOptions, SummaryRow};
use crate::harness::plot::{render_svg, AxesConfig, Series};
use crate::harness::{split_indices, trial_seed};
use crate::rng::{derive_seed, streams};
use crate::spectral::{eigh_symmetric, ratio_amplification_check, SpectralDecomposition};
use crate::synthesis::{make_ground_truth, responses_for, sample_features, AggregationDataset};

/// Outcome of the layer-stacking ratio check at one depth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioCheck {
    pub trial: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    /// Pairs with `μ_i > μ_j > 0`.
    pub strict_pairs: usize,
    pub amplified: usize,
    /// Pairs with `μ_i = μ_j > 0`.
    pub equal_pairs: usize,
    pub equal_amplified: usize,
}

impl RatioCheck {
    pub fn holds(&self) -> bool {
        self.amplified == self.strict_pairs && self.equal_amplified == 0
    }
}

/// Checks every pair of positive eigenvalues of `dec` at depth `layers`.
pub fn check_all_pairs(dec: &SpectralDecomposition, layers: usize, trial: usize) -> Result<RatioCheck> {
    let mu = dec.eigenvalues();
    let positive = mu.iter().take_while(|m| **m > 0.0).count();
    let mut check = RatioCheck {
        trial,
        layers,
        strict_pairs: 0,
        amplified: 0,
        equal_pairs: 0,
        equal_amplified: 0,
    };
    for i in 0..positive {
        for j in (i + 1)..positive {
            let amp = ratio_amplification_check(dec, i, j, layers)?;
            if mu[i] > mu[j] {
                check.strict_pairs += 1;
                check.amplified += amp as usize;
            } else {
                check.equal_pairs += 1;
                check.equal_amplified += amp as usize;
            }
        }
    }
    Ok(check)
}

#[derive(Debug, Clone)]
pub struct OversmoothingOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub ratio_checks: Vec<RatioCheck>,
}

impl OversmoothingOutcome {
    /// Median excess risk per entry of `layers`, for `algorithm`.
    pub fn medians(&self, layers: &[usize], algorithm: &str) -> Vec<f64> {
        layers
            .iter()
            .map(|&l| {
                self.summary
                    .iter()
                    .find(|s| s.value == l as f64 && s.algorithm == algorithm)
                    .map_or(f64::NAN, |s| s.median_delta)
            })
            .collect()
    }
}

pub fn compute_oversmoothing(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<OversmoothingOutcome> {
    if cfg.experiment != ExperimentKind::Oversmoothing {
        return Err(Error::config("experiment", "expected oversmoothing"));
    }
    let mut layers = cfg.layers.clone();
    layers.sort_unstable();
    layers.dedup();
    let max_l = *layers.last().expect("validated non-empty");

    let per_trial = run_parallel(jobs, cfg.trials, |trial| {
        let seed = trial_seed(cfg.seed, trial);
        let g = generate_ba(cfg.n, cfg.ba_m, derive_seed(seed, streams::GRAPH, 0))?;
        let op = build_operator(&g, cfg.operator, 1)?;
        let op_dec = eigh_symmetric(&op.matrix)?;
        let x = sample_features(cfg.n, cfg.d, derive_seed(seed, streams::FEATURES, 0))?;

        let n_val = ((cfg.n as f64 * cfg.validation_fraction).round() as usize).clamp(1, cfg.n - 1);
        let (val_idx, train_idx) = split_indices(cfg.n, n_val, derive_seed(seed, streams::SPLIT, 0));

        let mut rows = Vec::new();
        let mut checks = Vec::new();
        let mut gt = None;
        let mut d = x.matrix.clone();
        for l in 1..=max_l {
            d = op.matrix.matmul(&d)?;
            let ds = AggregationDataset::from_samples(d.clone(), cfg.sigma, l, false)?;
            if l == 1 {
                gt = Some(make_ground_truth(ds.spectral(), cfg.alignment())?);
            }
            if !layers.contains(&l) {
                continue;
            }
            let gt = gt.as_ref().expect("set at l = 1");
            checks.push(check_all_pairs(&op_dec, l, trial)?);
            // Same noise draw at every depth.
            let y = responses_for(&d, gt, cfg.sigma, derive_seed(seed, streams::NOISE, 0))?;
            let split = Split {
                train_x: d.select_rows(&train_idx),
                train_y: train_idx.iter().map(|&i| y[i]).collect(),
                val_x: d.select_rows(&val_idx),
            };
            let iterations = cfg.iterations();
            let sampling_seed = derive_seed(seed, streams::SAMPLING, l as u64);
            for f in fit_both(cfg, &split, &gt.theta_star, iterations, sampling_seed)? {
                let m = measure(cfg, &f, &split, gt, &ds, iterations, derive_seed(seed, streams::REPEAT, l as u64))?;
                rows.push(ResultRow {
                    experiment: cfg.experiment.as_str().to_string(),
                    trial,
                    algorithm: m.algorithm.as_str().to_string(),
                    hyperparameter: m.hyper,
                    delta: m.delta,
                    bias_hat: m.bias_hat,
                    var_hat: m.var_hat,
                    layers: Some(l),
                    beta: None,
                    n: iterations,
                    seed,
                });
            }
        }
        Ok((rows, checks))
    })?;
    let mut rows = Vec::new();
    let mut ratio_checks = Vec::new();
    for (r, c) in per_trial {
        rows.extend(r);
        ratio_checks.extend(c);
    }
    let summary = summarize(&rows, "L", |r| r.layers.unwrap_or(0) as f64);
    Ok(OversmoothingOutcome {
        rows,
        summary,
        ratio_checks,
    })
}

pub fn run_oversmoothing(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(OversmoothingOutcome, RunArtifacts)> {
    let outcome = compute_oversmoothing(cfg, opts.jobs)?;
    let mut out = OutputDir::create(&opts.out_dir)?;
    out.write_csv("results.csv", &outcome.rows)?;
    out.write_csv("summary.csv", &outcome.summary)?;
    out.write_csv("ratio_checks.csv", &outcome.ratio_checks)?;
    if cfg.plots {
        let mut layers = cfg.layers.clone();
        layers.sort_unstable();
        layers.dedup();
        let series: Vec<Series> = ["sgd", "ridge"]
            .iter()
            .map(|alg| {
                let pts = layers
                    .iter()
                    .zip(outcome.medians(&layers, alg))
                    .map(|(l, m)| (*l as f64, m))
                    .collect();
                Series::new(*alg, pts)
            })
            .collect();
        let axes = AxesConfig {
            title: format!("Excess risk vs depth ({} truth)", cfg.alignment().label()),
            x_label: "layers L".into(),
            y_label: "median excess risk".into(),
            ..Default::default()
        };
        out.write_text("oversmoothing.svg", &render_svg(&series, &axes)?)?;
    }
    let artifacts = out.finish(cfg)?;
    Ok((outcome, artifacts))
}
