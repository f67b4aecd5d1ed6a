//! A single train-and-evaluate run with its dataset, estimator, risk report
//! and bound profiles written to disk.

use crate::bounds::{ridge_cutoff, ridge_risk_bound, sgd_risk_bound, BoundProfile, RidgeBoundParams, SgdBoundParams, Side};
use crate::error::{Error, Result};
use crate::graph::{build_operator, generate_ba};
use crate::harness::config::{DataPath, ExperimentConfig};
use crate::harness::output::{OutputDir, RunArtifacts, RunOptions};
use crate::harness::tuning::{tune_ridge, tune_sgd, TuneData};
use crate::harness::{split_indices, trial_seed};
use crate::learners::{covariance_trace, ridge_fit, sgd_tail_averaged, Algorithm, Estimator, RidgeConfig, SgdConfig};
use crate::matrix::Matrix;
use crate::rng::{derive_seed, streams};
use crate::risk::RiskReport;
use crate::spectral::synthetic_spectrum;
use crate::synthesis::{
    draw_spectrum_rows, make_ground_truth, responses_for, sample_features, AggregationDataset, GroundTruth,
};

#[derive(Debug, Clone)]
pub struct TrainingOutcome {
    pub estimator: Estimator,
    pub report: RiskReport,
    pub bounds: Vec<BoundProfile>,
}

struct Prepared {
    train_x: Matrix,
    train_y: Vec<f64>,
    val_x: Matrix,
    population: AggregationDataset,
    gt: GroundTruth,
    /// Spectrum the bounds are evaluated on, sorted non-increasing.
    mu: Vec<f64>,
}

fn prepare(cfg: &ExperimentConfig, seed: u64) -> Result<Prepared> {
    match cfg.data_path {
        DataPath::Spectrum => {
            let spec = synthetic_spectrum(cfg.d, cfg.betas[0])?;
            let dec = spec.to_decomposition();
            let gt = make_ground_truth(&dec, cfg.alignment())?;
            let n_val = cfg.validation_rows(cfg.n_train);
            let rows = draw_spectrum_rows(&dec, cfg.n_train + n_val, derive_seed(seed, streams::SPECTRUM, 0))?;
            let y = responses_for(&rows, &gt, cfg.sigma, derive_seed(seed, streams::NOISE, 0))?;
            let (train_idx, val_idx) = split_indices(rows.rows(), cfg.n_train, derive_seed(seed, streams::SPLIT, 0));
            let population = AggregationDataset::from_samples(
                draw_spectrum_rows(&dec, cfg.population, derive_seed(seed, streams::SPECTRUM, 1))?,
                cfg.sigma,
                1,
                false,
            )?;
            Ok(Prepared {
                train_x: rows.select_rows(&train_idx),
                train_y: train_idx.iter().map(|&i| y[i]).collect(),
                val_x: rows.select_rows(&val_idx),
                population,
                gt,
                mu: spec.values,
            })
        }
        DataPath::Graph => {
            let layers = cfg.layers[0];
            let g = generate_ba(cfg.n, cfg.ba_m, derive_seed(seed, streams::GRAPH, 0))?;
            let op = build_operator(&g, cfg.operator, layers)?;
            let x = sample_features(cfg.n, cfg.d, derive_seed(seed, streams::FEATURES, 0))?;
            let population = AggregationDataset::from_samples(op.matrix.matmul(&x.matrix)?, cfg.sigma, layers, false)?;
            let gt = make_ground_truth(population.spectral(), cfg.alignment())?;
            let d = population.samples();
            let y = responses_for(d, &gt, cfg.sigma, derive_seed(seed, streams::NOISE, 0))?;
            let n_val = ((cfg.n as f64 * cfg.validation_fraction).round() as usize).clamp(1, cfg.n - 1);
            let (val_idx, train_idx) = split_indices(cfg.n, n_val, derive_seed(seed, streams::SPLIT, 0));
            // Round-off can leave tiny negative eigenvalues; the bounds need a PSD spectrum.
            let mu = population.spectral().eigenvalues().iter().map(|m| m.max(0.0)).collect();
            Ok(Prepared {
                train_x: d.select_rows(&train_idx),
                train_y: train_idx.iter().map(|&i| y[i]).collect(),
                val_x: d.select_rows(&val_idx),
                population,
                gt,
                mu,
            })
        }
    }
}

fn fit(cfg: &ExperimentConfig, p: &Prepared, algorithm: Algorithm, seed: u64) -> Result<Estimator> {
    let data = TuneData {
        train_x: &p.train_x,
        train_y: &p.train_y,
        val_x: &p.val_x,
        theta_star: &p.gt.theta_star,
    };
    match algorithm {
        Algorithm::Sgd => {
            let base = SgdConfig {
                gamma: 0.0,
                iterations: cfg.iterations(),
                sampling: cfg.sampling,
                seed: derive_seed(seed, streams::SAMPLING, 0),
                enforce_stepsize: false,
            };
            match cfg.gamma {
                Some(gamma) => sgd_tail_averaged(&p.train_x, &p.train_y, &SgdConfig { gamma, ..base }),
                None => {
                    let grid = cfg.gamma_grid.clone().unwrap_or_else(|| {
                        let tr = covariance_trace(&p.train_x);
                        cfg.gamma_grid_rel.iter().map(|r| r / tr).collect()
                    });
                    Ok(tune_sgd(&data, &grid, &base)?.1)
                }
            }
        }
        Algorithm::Ridge => match cfg.lambda {
            Some(lambda) => ridge_fit(&p.train_x, &p.train_y, &RidgeConfig { lambda }),
            None => Ok(tune_ridge(&data, &cfg.lambda_grid)?.1),
        },
    }
}

fn bound_profiles(cfg: &ExperimentConfig, p: &Prepared, est: &Estimator) -> Result<Vec<BoundProfile>> {
    let (mu, coords) = (&p.mu, &p.gt.coords);
    let n = match est.algorithm {
        Algorithm::Sgd => est.iterate_count,
        Algorithm::Ridge => p.train_x.rows(),
    };
    let h = est.hyperparameter();
    match est.algorithm {
        Algorithm::Sgd => {
            if !(h > 0.0) {
                return Ok(Vec::new());
            }
            let params = SgdBoundParams {
                n,
                gamma: h,
                sigma: cfg.sigma,
                side: Side::Lower,
                k1: 0,
                k2: 0,
                enforce_stepsize: false,
            };
            let lower = sgd_risk_bound(mu, coords, &params)?;
            let k = lower.cutoffs.k_star;
            let upper = sgd_risk_bound(mu, coords, &SgdBoundParams { side: Side::Upper, k1: k, k2: k, ..params })?;
            Ok(vec![upper, lower])
        }
        Algorithm::Ridge => {
            let k = ridge_cutoff(mu, n, h, cfg.ridge_b)?.0;
            let params = RidgeBoundParams {
                n,
                lambda: h,
                sigma: cfg.sigma,
                side: Side::Upper,
                k,
                b: cfg.ridge_b,
            };
            let mut out = vec![ridge_risk_bound(mu, coords, &params)?];
            if h > 0.0 {
                out.push(ridge_risk_bound(mu, coords, &RidgeBoundParams { side: Side::Lower, ..params })?);
            }
            Ok(out)
        }
    }
}

/// Trains one estimator (trial 0 of `cfg`) and evaluates it against the
/// ground truth and the bounds at the chosen hyperparameter.
pub fn compute_training(cfg: &ExperimentConfig, algorithm: Algorithm) -> Result<(TrainingOutcome, TrainingData)> {
    let seed = trial_seed(cfg.seed, 0);
    let p = prepare(cfg, seed)?;
    let estimator = fit(cfg, &p, algorithm, seed)?;
    let bounds = bound_profiles(cfg, &p, &estimator)?;
    let k = bounds.first().map_or(0, |b| b.cutoffs.k_star);
    let report = RiskReport::evaluate(&estimator.theta, &p.gt, &p.population, k, None)?;
    let data = TrainingData {
        train: AggregationDataset::from_samples(p.train_x, cfg.sigma, p.population.layers, false)?,
        train_y: p.train_y,
        seed,
    };
    Ok((TrainingOutcome { estimator, report, bounds }, data))
}

/// The training set of a [`compute_training`] run.
pub struct TrainingData {
    pub train: AggregationDataset,
    pub train_y: Vec<f64>,
    pub seed: u64,
}

pub fn run_training(
    cfg: &ExperimentConfig,
    algorithm: Algorithm,
    opts: &RunOptions,
) -> Result<(TrainingOutcome, RunArtifacts)> {
    let (outcome, data) = compute_training(cfg, algorithm)?;
    let mut out = OutputDir::create(&opts.out_dir)?;

    let mut csv_body = Vec::new();
    data.train.write_csv(&data.train_y, &mut csv_body)?;
    out.write_text("dataset.csv", &String::from_utf8(csv_body).map_err(|e| Error::Parse(e.to_string()))?)?;
    let sidecar = data.train.sidecar(data.seed, cfg.alignment().name());
    out.write_text("dataset.json", &(serde_json::to_string_pretty(&sidecar)? + "\n"))?;
    out.write_text("estimator.json", &(outcome.estimator.to_json()? + "\n"))?;

    let mut w = csv::Writer::from_writer(Vec::new());
    outcome.report.write_csv_row(&mut w)?;
    out.write_text("risk.csv", &csv_text(w)?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(BoundProfile::CSV_HEADER)?;
    for b in &outcome.bounds {
        b.write_csv_row(&mut w)?;
    }
    out.write_text("bounds.csv", &csv_text(w)?)?;

    let name = format!("train_{}", algorithm.as_str());
    let artifacts = out.finish_as(&name, cfg.seed, serde_json::to_value(cfg)?)?;
    Ok((outcome, artifacts))
}

fn csv_text(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
