//! Measured excess risk against the closed-form bound profiles over a grid of
//! sample sizes.

use serde::Serialize;

use crate::bounds::{ridge_risk_bound, sgd_risk_bound, BoundProfile, RidgeBoundParams, SgdBoundParams, Side};
use crate::error::{Error, Result};
use crate::harness::comparison::spectrum_trial;
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::output::{median, run_parallel, summarize, OutputDir, ResultRow, RunArtifacts, RunOptions, SummaryRow};
use crate::harness::plot::{render_svg, AxesConfig, Series};
use crate::spectral::synthetic_spectrum;
use crate::synthesis::make_ground_truth;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub algorithm: String,
    pub side: String,
    pub hyperparameter: f64,
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
    pub k_star: usize,
    pub k_dagger: Option<usize>,
    pub lambda_hat: Option<f64>,
    pub median_delta: f64,
}

impl BoundRow {
    fn new(n: usize, hyper: f64, p: &BoundProfile, median_delta: f64) -> Self {
        Self {
            n,
            algorithm: p.algorithm.as_str().to_string(),
            side: p.side.as_str().to_string(),
            hyperparameter: hyper,
            bias: p.bias,
            variance: p.variance,
            total: p.total,
            k_star: p.cutoffs.k_star,
            k_dagger: p.cutoffs.k_dagger,
            lambda_hat: p.cutoffs.lambda_hat,
            median_delta,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub bounds: Vec<BoundRow>,
}

impl BoundsOutcome {
    pub fn bound(&self, n: usize, algorithm: &str, side: &str) -> Option<&BoundRow> {
        self.bounds
            .iter()
            .find(|b| b.n == n && b.algorithm == algorithm && b.side == side)
    }
}

/// Bound profiles for SGD (at the median tuned `γ`, cutoffs `k1 = k2 = k*`)
/// and ridge (at the median tuned `λ`, `k = k*`) for every `N`.
pub fn compute_bounds_sweep(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<BoundsOutcome> {
    if cfg.experiment != ExperimentKind::BoundsSweep {
        return Err(Error::config("experiment", "expected bounds_sweep"));
    }
    let beta = cfg.betas[0];
    let grid = &cfg.n_grid;
    let cells = run_parallel(jobs, grid.len() * cfg.trials, |task| {
        let (ni, trial) = (task / cfg.trials, task % cfg.trials);
        spectrum_trial(cfg, beta, grid[ni], trial, ni as u64)
    })?;
    let rows: Vec<ResultRow> = cells.into_iter().flatten().collect();
    let summary = summarize(&rows, "N", |r| r.n as f64);

    let spec = synthetic_spectrum(cfg.d, beta)?;
    let gt = make_ground_truth(&spec.to_decomposition(), cfg.alignment())?;
    let mu = &spec.values;
    let mut bounds = Vec::new();
    for &n in grid {
        let pick = |alg: &str, f: fn(&ResultRow) -> f64| -> Vec<f64> {
            rows.iter().filter(|r| r.n == n && r.algorithm == alg).map(f).collect()
        };
        let gamma = median(&pick("sgd", |r| r.hyperparameter));
        let lambda = median(&pick("ridge", |r| r.hyperparameter));
        let d_sgd = median(&pick("sgd", |r| r.delta));
        let d_ridge = median(&pick("ridge", |r| r.delta));

        let lower = sgd_risk_bound(
            mu,
            &gt.coords,
            &SgdBoundParams {
                n,
                gamma,
                sigma: cfg.sigma,
                side: Side::Lower,
                k1: 0,
                k2: 0,
                enforce_stepsize: false,
            },
        )?;
        let k = lower.cutoffs.k_star;
        let upper = sgd_risk_bound(
            mu,
            &gt.coords,
            &SgdBoundParams {
                side: Side::Upper,
                k1: k,
                k2: k,
                n,
                gamma,
                sigma: cfg.sigma,
                enforce_stepsize: false,
            },
        )?;
        bounds.push(BoundRow::new(n, gamma, &upper, d_sgd));
        bounds.push(BoundRow::new(n, gamma, &lower, d_sgd));

        let rp = RidgeBoundParams {
            n,
            lambda,
            sigma: cfg.sigma,
            side: Side::Lower,
            k: 0,
            b: cfg.ridge_b,
        };
        let upper_k = crate::bounds::ridge_cutoff(mu, n, lambda, cfg.ridge_b)?.0;
        let r_upper = ridge_risk_bound(mu, &gt.coords, &RidgeBoundParams { side: Side::Upper, k: upper_k, ..rp })?;
        bounds.push(BoundRow::new(n, lambda, &r_upper, d_ridge));
        if lambda > 0.0 {
            let r_lower = ridge_risk_bound(mu, &gt.coords, &rp)?;
            bounds.push(BoundRow::new(n, lambda, &r_lower, d_ridge));
        }
    }
    Ok(BoundsOutcome { rows, summary, bounds })
}

pub fn run_bounds_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(BoundsOutcome, RunArtifacts)> {
    let outcome = compute_bounds_sweep(cfg, opts.jobs)?;
    let mut out = OutputDir::create(&opts.out_dir)?;
    out.write_csv("results.csv", &outcome.rows)?;
    out.write_csv("summary.csv", &outcome.summary)?;
    out.write_csv("bounds.csv", &outcome.bounds)?;
    if cfg.plots {
        let mut series = Vec::new();
        for alg in ["sgd", "ridge"] {
            let measured = outcome
                .bounds
                .iter()
                .filter(|b| b.algorithm == alg && b.side == "upper")
                .map(|b| (b.n as f64, b.median_delta))
                .collect();
            series.push(Series::new(format!("{alg} measured"), measured));
            for side in ["upper", "lower"] {
                let pts = outcome
                    .bounds
                    .iter()
                    .filter(|b| b.algorithm == alg && b.side == side)
                    .map(|b| (b.n as f64, b.total))
                    .collect();
                series.push(Series::new(format!("{alg} {side}"), pts));
            }
        }
        series.retain(|s| !s.points.is_empty());
        let positive = series.iter().all(|s| s.points.iter().all(|p| p.1 > 0.0));
        let axes = AxesConfig {
            title: "Excess risk and bound profiles vs N".into(),
            x_label: "N".into(),
            y_label: "risk".into(),
            x_log: true,
            y_log: positive,
            ..Default::default()
        };
        out.write_text("bounds.svg", &render_svg(&series, &axes)?)?;
    }
    let artifacts = out.finish(cfg)?;
    Ok((outcome, artifacts))
}
