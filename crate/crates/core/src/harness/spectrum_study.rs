//! Operator and covariance spectra of preferential-attachment vs regular
//! graphs at matched size and mean degree.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{build_operator, generate_ba, generate_regular, Graph};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::output::{run_parallel, OutputDir, RunArtifacts, RunOptions};
use crate::harness::plot::{render_svg, AxesConfig, Series};
use crate::harness::trial_seed;
use crate::rng::{derive_seed, streams};
use crate::spectral::{coefficient_of_variation, eigh_symmetric, fit_decay_rate};
use crate::synthesis::{aggregate, sample_features};

#[derive(Debug, Clone)]
pub struct GraphSpectra {
    pub operator: Vec<f64>,
    pub covariance: Vec<f64>,
    pub beta_operator: f64,
    pub beta_covariance: f64,
    pub cv_operator: f64,
}

#[derive(Debug, Clone)]
pub struct SpectrumTrial {
    pub trial: usize,
    pub seed: u64,
    pub ba: GraphSpectra,
    pub regular: GraphSpectra,
    pub elapsed: Duration,
}

impl SpectrumTrial {
    pub fn beta_ratio(&self) -> f64 {
        self.ba.beta_operator / self.regular.beta_operator
    }
}

#[derive(Debug, Clone)]
pub struct SpectrumOutcome {
    pub trials: Vec<SpectrumTrial>,
}

fn analyze(cfg: &ExperimentConfig, g: &Graph, feature_seed: u64) -> Result<GraphSpectra> {
    let op = build_operator(g, cfg.operator, 1)?;
    let dec = eigh_symmetric(&op.matrix)?;
    let x = sample_features(cfg.n, cfg.d, feature_seed)?;
    let ds = aggregate(&op, &x, 1, cfg.sigma)?;
    let operator = dec.eigenvalues().to_vec();
    let covariance = ds.spectral().eigenvalues().to_vec();
    let head = cfg.spectrum_head.min(operator.len());
    Ok(GraphSpectra {
        beta_operator: fit_decay_rate(&operator, head)?,
        beta_covariance: fit_decay_rate(&covariance, cfg.spectrum_head.min(covariance.len()))?,
        cv_operator: coefficient_of_variation(&operator[..head]),
        operator,
        covariance,
    })
}

pub fn compute_spectrum_study(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<SpectrumOutcome> {
    check_kind(cfg)?;
    let trials = run_parallel(jobs, cfg.trials, |trial| {
        let start = Instant::now();
        let seed = trial_seed(cfg.seed, trial);
        let feature_seed = derive_seed(seed, streams::FEATURES, 0);
        let (ba, regular) = rayon::join(
            || {
                let g = generate_ba(cfg.n, cfg.ba_m, derive_seed(seed, streams::GRAPH, 0))?;
                analyze(cfg, &g, feature_seed)
            },
            || {
                let g = generate_regular(cfg.n, cfg.regular_degree, derive_seed(seed, streams::GRAPH, 1))?;
                analyze(cfg, &g, feature_seed)
            },
        );
        Ok(SpectrumTrial {
            trial,
            seed,
            ba: ba?,
            regular: regular?,
            elapsed: start.elapsed(),
        })
    })?;
    Ok(SpectrumOutcome { trials })
}

fn check_kind(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.experiment != ExperimentKind::SpectrumStudy {
        return Err(Error::config("experiment", "expected spectrum_study"));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumRow<'a> {
    trial: usize,
    graph: &'a str,
    source: &'a str,
    index: usize,
    eigenvalue: f64,
}

#[derive(Serialize)]
struct DecayRow {
    trial: usize,
    seed: u64,
    beta_ba: f64,
    beta_regular: f64,
    ratio: f64,
    cv_ba: f64,
    cv_regular: f64,
    beta_cov_ba: f64,
    beta_cov_regular: f64,
}

pub fn run_spectrum_study(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(SpectrumOutcome, RunArtifacts)> {
    let outcome = compute_spectrum_study(cfg, opts.jobs)?;
    let mut out = OutputDir::create(&opts.out_dir)?;
    let mut rows = Vec::new();
    for t in &outcome.trials {
        for (graph, s) in [("ba", &t.ba), ("regular", &t.regular)] {
            for (source, values) in [("operator", &s.operator), ("covariance", &s.covariance)] {
                rows.extend(values.iter().enumerate().map(|(i, &eigenvalue)| SpectrumRow {
                    trial: t.trial,
                    graph,
                    source,
                    index: i + 1,
                    eigenvalue,
                }));
            }
        }
    }
    out.write_csv("spectra.csv", &rows)?;
    let decay: Vec<DecayRow> = outcome
        .trials
        .iter()
        .map(|t| DecayRow {
            trial: t.trial,
            seed: t.seed,
            beta_ba: t.ba.beta_operator,
            beta_regular: t.regular.beta_operator,
            ratio: t.beta_ratio(),
            cv_ba: t.ba.cv_operator,
            cv_regular: t.regular.cv_operator,
            beta_cov_ba: t.ba.beta_covariance,
            beta_cov_regular: t.regular.beta_covariance,
        })
        .collect();
    out.write_csv("decay_rates.csv", &decay)?;
    if cfg.plots {
        let t = &outcome.trials[0];
        let head = |v: &[f64]| -> Vec<(f64, f64)> {
            v.iter()
                .take(cfg.spectrum_head)
                .enumerate()
                .filter(|(_, m)| **m > 0.0)
                .map(|(i, m)| ((i + 1) as f64, *m))
                .collect()
        };
        let axes = AxesConfig {
            title: "Operator eigenspectrum".into(),
            x_label: "index".into(),
            y_label: "eigenvalue".into(),
            x_log: true,
            y_log: true,
            ..Default::default()
        };
        let svg = render_svg(
            &[
                Series::new("BA", head(&t.ba.operator)),
                Series::new("regular", head(&t.regular.operator)),
            ],
            &axes,
        )?;
        out.write_text("spectrum.svg", &svg)?;
        let cov_axes = AxesConfig {
            title: "Aggregation covariance eigenspectrum".into(),
            ..axes
        };
        let svg = render_svg(
            &[
                Series::new("BA", head(&t.ba.covariance)),
                Series::new("regular", head(&t.regular.covariance)),
            ],
            &cov_axes,
        )?;
        out.write_text("covariance_spectrum.svg", &svg)?;
    }
    let artifacts = out.finish(cfg)?;
    Ok((outcome, artifacts))
}
