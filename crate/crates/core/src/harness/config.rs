//! Experiment configuration: per-experiment presets, partial overrides from
//! files and flags, and validation that names the offending key.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::OperatorKind;
use crate::learners::Sampling;
use crate::synthesis::{default_alignment_k, Alignment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SpectrumStudy,
    SgdVsRidge,
    Oversmoothing,
    BoundsSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 4] = [
        ExperimentKind::SpectrumStudy,
        ExperimentKind::SgdVsRidge,
        ExperimentKind::Oversmoothing,
        ExperimentKind::BoundsSweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SpectrumStudy => "spectrum_study",
            ExperimentKind::SgdVsRidge => "sgd_vs_ridge",
            ExperimentKind::Oversmoothing => "oversmoothing",
            ExperimentKind::BoundsSweep => "bounds_sweep",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataPath {
    Graph,
    Spectrum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlignMode {
    Head,
    Tail,
    Weighted,
}

impl FromStr for AlignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head" => Ok(AlignMode::Head),
            "tail" => Ok(AlignMode::Tail),
            "weighted" => Ok(AlignMode::Weighted),
            _ => Err(Error::config("align", format!("unknown alignment `{s}` (head, tail, weighted)"))),
        }
    }
}

/// Fully resolved configuration. Keys irrelevant to an experiment are kept
/// (so a manifest records everything) but ignored by its runner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub trials: usize,
    pub data_path: DataPath,
    /// Graph vertex count.
    pub n: usize,
    /// Feature dimension.
    pub d: usize,
    pub ba_m: usize,
    pub regular_degree: usize,
    pub operator: OperatorKind,
    pub spectrum_head: usize,
    pub betas: Vec<f64>,
    pub layers: Vec<usize>,
    pub sigma: f64,
    /// Training sample count `N`.
    pub n_train: usize,
    pub n_grid: Vec<usize>,
    /// Rows of the evaluation population on the spectrum path.
    pub population: usize,
    pub validation_fraction: f64,
    /// Fixed SGD stepsize; skips tuning when set.
    pub gamma: Option<f64>,
    /// Absolute stepsize grid; `None` uses `gamma_grid_rel / tr(M̂)`.
    pub gamma_grid: Option<Vec<f64>>,
    pub gamma_grid_rel: Vec<f64>,
    /// Fixed ridge penalty; skips tuning when set.
    pub lambda: Option<f64>,
    pub lambda_grid: Vec<f64>,
    /// SGD iteration count; defaults to `n_train`.
    pub sgd_iterations: Option<usize>,
    pub sampling: Sampling,
    pub align: AlignMode,
    /// Head/tail width; defaults to `⌈d/10⌉`.
    pub align_k: Option<usize>,
    pub align_p: f64,
    /// Retrainings for the bias/variance split (0 disables it).
    pub repeats: usize,
    pub ridge_b: f64,
    pub plots: bool,
}

/// `count` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64))
        .collect()
}

impl ExperimentConfig {
    /// Defaults for `kind`.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            seed: 0,
            trials: 5,
            data_path: DataPath::Spectrum,
            n: 500,
            d: 64,
            ba_m: 3,
            regular_degree: 6,
            operator: OperatorKind::ShiftPsd,
            spectrum_head: 100,
            betas: vec![1.0],
            layers: vec![1],
            sigma: 1.0,
            n_train: 1024,
            n_grid: vec![128, 256, 512, 1024, 2048],
            population: 16384,
            validation_fraction: 0.2,
            gamma: None,
            gamma_grid: None,
            gamma_grid_rel: log_grid(1e-3, 1.0, 10),
            lambda: None,
            lambda_grid: log_grid(0.1, 1000.0, 13),
            sgd_iterations: None,
            sampling: Sampling::WithReplacement,
            align: AlignMode::Head,
            align_k: None,
            align_p: 1.0,
            repeats: 4,
            ridge_b: crate::bounds::DEFAULT_RIDGE_B,
            plots: true,
        };
        match kind {
            ExperimentKind::SpectrumStudy => ExperimentConfig {
                data_path: DataPath::Graph,
                ..base
            },
            ExperimentKind::SgdVsRidge => ExperimentConfig {
                d: 128,
                betas: vec![2.0, 0.25],
                ..base
            },
            ExperimentKind::Oversmoothing => ExperimentConfig {
                data_path: DataPath::Graph,
                n: 300,
                layers: vec![1, 2, 3],
                ..base
            },
            ExperimentKind::BoundsSweep => base,
        }
    }

    pub fn iterations(&self) -> usize {
        self.sgd_iterations.unwrap_or(self.n_train)
    }

    pub fn alignment(&self) -> Alignment {
        let k = self.align_k.unwrap_or_else(|| default_alignment_k(self.d));
        match self.align {
            AlignMode::Head => Alignment::Head { k },
            AlignMode::Tail => Alignment::Tail { k },
            AlignMode::Weighted => Alignment::Weighted { p: self.align_p },
        }
    }

    /// Validation rows drawn alongside `n_train` training rows so that they
    /// make up `validation_fraction` of the total.
    pub fn validation_rows(&self, n_train: usize) -> usize {
        let f = self.validation_fraction;
        ((n_train as f64 * f / (1.0 - f)).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.trials == 0 {
            return err("trials", "must be >= 1".into());
        }
        if self.d == 0 {
            return err("d", "must be >= 1".into());
        }
        if self.ba_m == 0 || self.ba_m >= self.n {
            return err("ba_m", format!("must satisfy 1 <= ba_m < n (n={})", self.n));
        }
        if self.regular_degree >= self.n || (self.n * self.regular_degree) % 2 == 1 {
            return err(
                "regular_degree",
                format!("needs degree < n and n*degree even (n={})", self.n),
            );
        }
        if self.spectrum_head < 2 {
            return err("spectrum_head", "must be >= 2".into());
        }
        if self.experiment == ExperimentKind::SpectrumStudy && self.spectrum_head > self.n {
            return err("spectrum_head", format!("exceeds the vertex count n={}", self.n));
        }
        if self.betas.is_empty() || self.betas.iter().any(|b| !(*b >= 0.0) || !b.is_finite()) {
            return err("betas", "must be a non-empty list of finite values >= 0".into());
        }
        if self.layers.is_empty() || self.layers.iter().any(|l| !(1..=8).contains(l)) {
            return err("layers", "must be a non-empty subset of 1..=8".into());
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return err("sigma", "must be finite and >= 0".into());
        }
        if self.n_train < 2 {
            return err("n_train", "must be >= 2".into());
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 2 || n % 2 == 1) {
            return err("n_grid", "must be a non-empty list of even values >= 2".into());
        }
        if self.population == 0 {
            return err("population", "must be >= 1".into());
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction <= 0.5) {
            return err("validation_fraction", "must lie in (0, 0.5]".into());
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0) || !g.is_finite() {
                return err("gamma", format!("must be finite and > 0, got {g}"));
            }
        }
        if let Some(grid) = &self.gamma_grid {
            if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
                return err("gamma_grid", "must be a non-empty list of positive values".into());
            }
        }
        if self.gamma_grid_rel.is_empty() || self.gamma_grid_rel.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return err("gamma_grid_rel", "must be a non-empty list of positive values".into());
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) || !l.is_finite() {
                return err("lambda", format!("must be finite and >= 0, got {l}"));
            }
        }
        if self.lambda_grid.is_empty() || self.lambda_grid.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return err("lambda_grid", "must be a non-empty list of values >= 0".into());
        }
        let it = self.iterations();
        if it < 2 || it % 2 == 1 {
            let key = if self.sgd_iterations.is_some() { "sgd_iterations" } else { "n_train" };
            return err(key, format!("SGD needs an even iteration count >= 2, got {it}"));
        }
        if self.sampling == Sampling::OnePass && it > self.n_train {
            return err("sampling", "one_pass needs sgd_iterations <= n_train".into());
        }
        if let Some(k) = self.align_k {
            if k == 0 || k > self.d {
                return err("align_k", format!("must lie in 1..={}", self.d));
            }
        }
        if !self.align_p.is_finite() {
            return err("align_p", "must be finite".into());
        }
        if self.repeats == 1 {
            return err("repeats", "must be 0 (disabled) or >= 2".into());
        }
        if !(self.ridge_b > 1.0) || !self.ridge_b.is_finite() {
            return err("ridge_b", "must be > 1".into());
        }
        if self.experiment == ExperimentKind::Oversmoothing && self.data_path != DataPath::Graph {
            return err("data_path", "oversmoothing runs on the graph path".into());
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Every key optional; used for config files and flag overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<ExperimentKind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub data_path: Option<DataPath>,
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub ba_m: Option<usize>,
    pub regular_degree: Option<usize>,
    pub operator: Option<OperatorKind>,
    pub spectrum_head: Option<usize>,
    pub betas: Option<Vec<f64>>,
    pub layers: Option<Vec<usize>>,
    pub sigma: Option<f64>,
    pub n_train: Option<usize>,
    pub n_grid: Option<Vec<usize>>,
    pub population: Option<usize>,
    pub validation_fraction: Option<f64>,
    pub gamma: Option<f64>,
    pub gamma_grid: Option<Vec<f64>>,
    pub gamma_grid_rel: Option<Vec<f64>>,
    pub lambda: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub sgd_iterations: Option<usize>,
    pub sampling: Option<Sampling>,
    pub align: Option<AlignMode>,
    pub align_k: Option<usize>,
    pub align_p: Option<f64>,
    pub repeats: Option<usize>,
    pub ridge_b: Option<f64>,
    pub plots: Option<bool>,
}

macro_rules! overlay {
    ($cfg:ident, $p:ident; $($field:ident),*; $($opt:ident),*) => {
        $(if let Some(v) = $p.$field.clone() { $cfg.$field = v; })*
        $(if $p.$opt.is_some() { $cfg.$opt = $p.$opt.clone(); })*
    };
}

impl PartialConfig {
    /// Parse a config file body. A run manifest (an object with a `config`
    /// key) is accepted as well.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::config("<file>", format!("malformed JSON: {e}")))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => map.remove("config").unwrap(),
            other => other,
        };
        serde_json::from_value(value).map_err(|e| Error::config("<file>", e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Apply `self` over `cfg`; set keys win.
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        overlay!(cfg, self;
            experiment, seed, trials, data_path, n, d, ba_m, regular_degree, operator, spectrum_head,
            betas, layers, sigma, n_train, n_grid, population, validation_fraction, gamma_grid_rel,
            lambda_grid, sampling, align, align_p, repeats, ridge_b, plots;
            gamma, gamma_grid, lambda, sgd_iterations, align_k);
    }
}

/// Preset for `kind`, then `file`, then `flags`; validated.
pub fn resolve_config(
    kind: ExperimentKind,
    file: Option<&PartialConfig>,
    flags: &PartialConfig,
) -> Result<ExperimentConfig> {
    for p in file.into_iter().chain(std::iter::once(flags)) {
        if let Some(k) = p.experiment {
            if k != kind {
                return Err(Error::config(
                    "experiment",
                    format!("config is for `{k}` but `{kind}` was requested"),
                ));
            }
        }
    }
    let mut cfg = ExperimentConfig::preset(kind);
    if let Some(f) = file {
        f.apply(&mut cfg);
    }
    flags.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for kind in ExperimentKind::ALL {
            ExperimentConfig::preset(kind).validate().unwrap();
        }
    }

    #[test]
    fn default_grids() {
        let cfg = ExperimentConfig::preset(ExperimentKind::SgdVsRidge);
        assert_eq!(cfg.lambda_grid.len(), 13);
        assert!((cfg.lambda_grid[0] - 0.1).abs() < 1e-15);
        assert!((cfg.lambda_grid[12] - 1000.0).abs() < 1e-9);
        assert!((cfg.lambda_grid[3] - 1.0).abs() < 1e-12);
        assert_eq!(cfg.gamma_grid_rel.len(), 10);
        assert_eq!(cfg.validation_rows(1024), 256);
    }

    #[test]
    fn merge_order_and_errors() {
        let file = PartialConfig::from_json(r#"{"trials": 3, "sigma": 0.5}"#).unwrap();
        let flags = PartialConfig {
            trials: Some(2),
            ..Default::default()
        };
        let cfg = resolve_config(ExperimentKind::SgdVsRidge, Some(&file), &flags).unwrap();
        assert_eq!((cfg.trials, cfg.sigma), (2, 0.5));

        let bad = PartialConfig {
            gamma: Some(-1.0),
            ..Default::default()
        };
        match resolve_config(ExperimentKind::SgdVsRidge, None, &bad) {
            Err(Error::Config { key, .. }) => assert_eq!(key, "gamma"),
            other => panic!("{other:?}"),
        }
        assert!(PartialConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(PartialConfig::from_json("{not json").is_err());
        let wrong = PartialConfig::from_json(r#"{"experiment": "oversmoothing"}"#).unwrap();
        assert!(resolve_config(ExperimentKind::SgdVsRidge, Some(&wrong), &PartialConfig::default()).is_err());
    }

    #[test]
    fn manifest_is_accepted_as_config() {
        let cfg = ExperimentConfig::preset(ExperimentKind::BoundsSweep);
        let manifest = format!(r#"{{"tool":"srl","config":{}}}"#, serde_json::to_string(&cfg).unwrap());
        let p = PartialConfig::from_json(&manifest).unwrap();
        let back = resolve_config(ExperimentKind::BoundsSweep, Some(&p), &PartialConfig::default()).unwrap();
        assert_eq!(back, cfg);
    }
}
