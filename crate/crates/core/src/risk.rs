//! Excess risk over the sample population, its quadratic proxy, eigenbasis
//! weighted norms and the empirical bias/variance split.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{dot, sub, Matrix};
use crate::rng::{derive_seed, streams};
use crate::spectral::SpectralDecomposition;
use crate::synthesis::{relu, AggregationDataset, GroundTruth};

fn check_dim(x: &Matrix, v: &[f64], what: &'static str) -> Result<()> {
    if v.len() != x.cols() {
        return Err(Error::DimensionMismatch {
            what,
            expected: x.cols(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// `Δ(θ) = (1/2n) Σ_i (ReLU(m_iᵀθ) − ReLU(m_iᵀθ*))²`.
pub fn excess_risk(theta: &[f64], gt: &GroundTruth, ds: &AggregationDataset) -> Result<f64> {
    excess_risk_rows(ds.samples(), theta, &gt.theta_star)
}

/// [`excess_risk`] over arbitrary rows.
pub fn excess_risk_rows(x: &Matrix, theta: &[f64], theta_star: &[f64]) -> Result<f64> {
    check_dim(x, theta, "estimator length")?;
    check_dim(x, theta_star, "ground truth length")?;
    let sum: f64 = (0..x.rows())
        .map(|i| {
            let m = x.row(i);
            let diff = relu(dot(m, theta)) - relu(dot(m, theta_star));
            diff * diff
        })
        .sum();
    Ok(sum / (2.0 * x.rows() as f64))
}

/// `(θ − θ*)ᵀ M̂ (θ − θ*)`.
pub fn quadratic_proxy(theta: &[f64], gt: &GroundTruth, ds: &AggregationDataset) -> Result<f64> {
    check_dim(ds.samples(), theta, "estimator length")?;
    check_dim(ds.samples(), &gt.theta_star, "ground truth length")?;
    ds.covariance().quad_form(&sub(theta, &gt.theta_star))
}

/// `(Σ_{i<k} (v_iᵀθ)²/μ_i, Σ_{i≥k} μ_i (v_iᵀθ)²)` with 0-based `i`.
pub fn weighted_norms(theta: &[f64], spec: &SpectralDecomposition, k: usize) -> Result<(f64, f64)> {
    let coords = spec.coords(theta)?;
    weighted_norms_coords(&coords, spec.eigenvalues(), k)
}

pub fn weighted_norms_coords(coords: &[f64], mu: &[f64], k: usize) -> Result<(f64, f64)> {
    if coords.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            what: "coordinate length vs spectrum",
            expected: mu.len(),
            actual: coords.len(),
        });
    }
    if k > mu.len() {
        return Err(Error::invalid(format!("norm split k={k} exceeds dimension {}", mu.len())));
    }
    let mut head = 0.0;
    for i in 0..k {
        if !(mu[i] > 0.0) {
            return Err(Error::invalid(format!(
                "head eigenvalue {} = {} is not positive",
                i + 1,
                mu[i]
            )));
        }
        head += coords[i] * coords[i] / mu[i];
    }
    let tail = (k..mu.len()).map(|i| mu[i] * coords[i] * coords[i]).sum();
    Ok((head, tail))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasVariance {
    pub bias_hat: f64,
    pub var_hat: f64,
    pub mean_theta: Vec<f64>,
    /// `mean_r ‖θ_r − θ*‖²_M̂`.
    pub mean_sq_error: f64,
}

/// Trains `repeats` estimators, each handed its own seed derived from
/// `(seed, repeat)`, and splits the mean squared `M̂`-error into
/// `‖θ̄ − θ*‖²_M̂` and `(1/R) Σ ‖θ_r − θ̄‖²_M̂`.
pub fn bias_variance_split<F>(
    trainer: F,
    ds: &AggregationDataset,
    gt: &GroundTruth,
    repeats: usize,
    seed: u64,
) -> Result<BiasVariance>
where
    F: Fn(u64) -> Result<Vec<f64>> + Sync,
{
    if repeats < 2 {
        return Err(Error::invalid("bias/variance split needs at least 2 repeats"));
    }
    let d = ds.d();
    let thetas: Vec<Vec<f64>> = (0..repeats)
        .into_par_iter()
        .map(|r| trainer(derive_seed(seed, streams::REPEAT, r as u64)))
        .collect::<Result<_>>()?;
    for t in &thetas {
        check_dim(ds.samples(), t, "trained estimator length")?;
    }
    let mut mean = vec![0.0; d];
    for t in &thetas {
        mean.iter_mut().zip(t).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= repeats as f64);
    let cov = ds.covariance();
    let bias_hat = cov.quad_form(&sub(&mean, &gt.theta_star))?;
    let mut var = 0.0;
    let mut mse = 0.0;
    for t in &thetas {
        var += cov.quad_form(&sub(t, &mean))?;
        mse += cov.quad_form(&sub(t, &gt.theta_star))?;
    }
    Ok(BiasVariance {
        bias_hat: bias_hat.max(0.0),
        var_hat: (var / repeats as f64).max(0.0),
        mean_theta: mean,
        mean_sq_error: mse / repeats as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub delta: f64,
    pub proxy: f64,
    pub bias_hat: f64,
    pub var_hat: f64,
    pub k: usize,
    /// Weighted norms of the error `θ̂ − θ*`.
    pub head_norm: f64,
    pub tail_norm: f64,
}

impl RiskReport {
    pub fn evaluate(
        theta: &[f64],
        gt: &GroundTruth,
        ds: &AggregationDataset,
        k: usize,
        split: Option<&BiasVariance>,
    ) -> Result<Self> {
        let delta = excess_risk(theta, gt, ds)?;
        let proxy = quadratic_proxy(theta, gt, ds)?;
        let (head_norm, tail_norm) = weighted_norms(&sub(theta, &gt.theta_star), ds.spectral(), k)?;
        Ok(Self {
            delta,
            proxy,
            bias_hat: split.map_or(0.0, |s| s.bias_hat),
            var_hat: split.map_or(0.0, |s| s.var_hat),
            k,
            head_norm,
            tail_norm,
        })
    }

    pub const CSV_HEADER: [&'static str; 7] =
        ["delta", "proxy", "bias_hat", "var_hat", "k", "head_norm", "tail_norm"];

    pub fn write_csv_row<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.serialize(self)?;
        Ok(())
    }
}
