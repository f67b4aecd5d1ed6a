//! Grid search on a validation set.

use crate::error::{Error, Result};
use crate::learners::{covariance_trace, ridge_fit, sgd_tail_averaged, Estimator, RidgeConfig, SgdConfig};
use crate::matrix::Matrix;
use crate::risk::excess_risk_rows;

#[derive(Debug, Clone, PartialEq)]
pub struct TuneResult {
    pub best: f64,
    pub best_score: f64,
    /// `(value, score)` for every grid point that evaluated successfully.
    pub scores: Vec<(f64, f64)>,
}

/// Evaluates `score` on every grid value (ascending) and returns the
/// minimizer; ties go to the smaller value. Failing or non-finite points are
/// skipped; an error is returned only if every point fails.
pub fn tune_hyperparameter<F>(grid: &[f64], mut score: F) -> Result<TuneResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if grid.is_empty() {
        return Err(Error::invalid("hyperparameter grid is empty"));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut scores = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for v in sorted {
        match score(v) {
            Ok(s) if s.is_finite() => {
                scores.push((v, s));
                if best.map_or(true, |(_, b)| s < b) {
                    best = Some((v, s));
                }
            }
            Ok(s) => last_err = Some(Error::Numerical(format!("score {s} at grid value {v}"))),
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((best, best_score)) => Ok(TuneResult {
            best,
            best_score,
            scores,
        }),
        None => Err(last_err.unwrap_or_else(|| Error::invalid("no grid point evaluated"))),
    }
}

/// Stepsize grid clipped to `(0, 1/tr(M̂)]` (clipped values collapse onto the
/// limit).
pub fn clip_gamma_grid(grid: &[f64], trace: f64) -> Vec<f64> {
    let limit = 1.0 / trace;
    let mut out: Vec<f64> = grid.iter().filter(|g| **g > 0.0).map(|g| g.min(limit)).collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

/// The training and validation data for one tuning problem.
pub struct TuneData<'a> {
    pub train_x: &'a Matrix,
    pub train_y: &'a [f64],
    pub val_x: &'a Matrix,
    pub theta_star: &'a [f64],
}

/// Picks `γ` from `grid` (absolute, clipped to `1/tr(M̂_train)`) by validation
/// excess risk; returns the tuning trace and the estimator at the chosen `γ`.
pub fn tune_sgd(data: &TuneData<'_>, grid: &[f64], base: &SgdConfig) -> Result<(TuneResult, Estimator)> {
    let clipped = clip_gamma_grid(grid, covariance_trace(data.train_x));
    let res = tune_hyperparameter(&clipped, |gamma| {
        let est = sgd_tail_averaged(data.train_x, data.train_y, &SgdConfig { gamma, ..*base })?;
        excess_risk_rows(data.val_x, &est.theta, data.theta_star)
    })?;
    let est = sgd_tail_averaged(data.train_x, data.train_y, &SgdConfig { gamma: res.best, ..*base })?;
    Ok((res, est))
}

pub fn tune_ridge(data: &TuneData<'_>, grid: &[f64]) -> Result<(TuneResult, Estimator)> {
    let res = tune_hyperparameter(grid, |lambda| {
        let est = ridge_fit(data.train_x, data.train_y, &RidgeConfig { lambda })?;
        excess_risk_rows(data.val_x, &est.theta, data.theta_star)
    })?;
    let est = ridge_fit(data.train_x, data.train_y, &RidgeConfig { lambda: res.best })?;
    Ok((res, est))
}
