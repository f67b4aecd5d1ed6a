//! Shared tune / train / evaluate steps of the learning experiments.

use crate::error::Result;
use crate::harness::config::ExperimentConfig;
use crate::harness::tuning::{tune_ridge, tune_sgd, TuneData};
use crate::learners::{
    covariance_trace, ridge_fit, sgd_tail_averaged, Algorithm, RidgeConfig, SgdConfig,
};
use crate::matrix::Matrix;
use crate::risk::{bias_variance_split, excess_risk};
use crate::synthesis::{responses_for, AggregationDataset, GroundTruth};

pub(crate) struct Split {
    pub train_x: Matrix,
    pub train_y: Vec<f64>,
    pub val_x: Matrix,
}

pub(crate) struct Fitted {
    pub algorithm: Algorithm,
    pub hyper: f64,
    pub theta: Vec<f64>,
}

pub(crate) struct Measured {
    pub algorithm: Algorithm,
    pub hyper: f64,
    pub delta: f64,
    pub bias_hat: f64,
    pub var_hat: f64,
}

fn sgd_config(cfg: &ExperimentConfig, gamma: f64, iterations: usize, seed: u64) -> SgdConfig {
    SgdConfig {
        gamma,
        iterations,
        sampling: cfg.sampling,
        seed,
        enforce_stepsize: false,
    }
}

/// Tunes (unless fixed in the config) and trains SGD and ridge on `split`.
pub(crate) fn fit_both(
    cfg: &ExperimentConfig,
    split: &Split,
    theta_star: &[f64],
    iterations: usize,
    sgd_seed: u64,
) -> Result<[Fitted; 2]> {
    let data = TuneData {
        train_x: &split.train_x,
        train_y: &split.train_y,
        val_x: &split.val_x,
        theta_star,
    };
    let base = sgd_config(cfg, 0.0, iterations, sgd_seed);
    let sgd = match cfg.gamma {
        Some(gamma) => sgd_tail_averaged(&split.train_x, &split.train_y, &SgdConfig { gamma, ..base })?,
        None => {
            let grid: Vec<f64> = match &cfg.gamma_grid {
                Some(g) => g.clone(),
                None => {
                    let tr = covariance_trace(&split.train_x);
                    cfg.gamma_grid_rel.iter().map(|r| r / tr).collect()
                }
            };
            tune_sgd(&data, &grid, &base)?.1
        }
    };
    let ridge = match cfg.lambda {
        Some(lambda) => ridge_fit(&split.train_x, &split.train_y, &RidgeConfig { lambda })?,
        None => tune_ridge(&data, &cfg.lambda_grid)?.1,
    };
    Ok([sgd, ridge].map(|e| Fitted {
        algorithm: e.algorithm,
        hyper: e.hyperparameter(),
        theta: e.theta,
    }))
}

/// Excess risk on `population`, plus the bias/variance split from
/// `cfg.repeats` retrainings with fresh noise and sampling order.
pub(crate) fn measure(
    cfg: &ExperimentConfig,
    fitted: &Fitted,
    split: &Split,
    gt: &GroundTruth,
    population: &AggregationDataset,
    iterations: usize,
    seed: u64,
) -> Result<Measured> {
    let delta = excess_risk(&fitted.theta, gt, population)?;
    let (bias_hat, var_hat) = if cfg.repeats >= 2 {
        let trainer = |s: u64| -> Result<Vec<f64>> {
            let y = responses_for(&split.train_x, gt, cfg.sigma, s)?;
            let est = match fitted.algorithm {
                Algorithm::Sgd => sgd_tail_averaged(&split.train_x, &y, &sgd_config(cfg, fitted.hyper, iterations, s))?,
                Algorithm::Ridge => ridge_fit(&split.train_x, &y, &RidgeConfig { lambda: fitted.hyper })?,
            };
            Ok(est.theta)
        };
        let bv = bias_variance_split(trainer, population, gt, cfg.repeats, seed)?;
        (bv.bias_hat, bv.var_hat)
    } else {
        (0.0, 0.0)
    };
    Ok(Measured {
        algorithm: fitted.algorithm,
        hyper: fitted.hyper,
        delta,
        bias_hat,
        var_hat,
    })
}
