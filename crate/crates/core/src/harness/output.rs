//! Result rows, run manifests and file writing.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;

/// One row of `results.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub trial: usize,
    pub algorithm: String,
    pub hyperparameter: f64,
    pub delta: f64,
    pub bias_hat: f64,
    pub var_hat: f64,
    #[serde(rename = "L")]
    pub layers: Option<usize>,
    pub beta: Option<f64>,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
}

/// Median group of `results.csv` rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub group: String,
    pub value: f64,
    pub algorithm: String,
    pub median_delta: f64,
    pub trials: usize,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Medians of `delta` grouped by `(key(row), algorithm)`, in first-seen order.
pub fn summarize(rows: &[ResultRow], group: &str, key: impl Fn(&ResultRow) -> f64) -> Vec<SummaryRow> {
    let mut groups: Vec<(f64, String, Vec<f64>)> = Vec::new();
    for r in rows {
        let k = key(r);
        match groups.iter_mut().find(|(gk, ga, _)| *gk == k && *ga == r.algorithm) {
            Some(g) => g.2.push(r.delta),
            None => groups.push((k, r.algorithm.clone(), vec![r.delta])),
        }
    }
    groups
        .into_iter()
        .map(|(value, algorithm, deltas)| SummaryRow {
            group: group.to_string(),
            value,
            algorithm,
            median_delta: median(&deltas),
            trials: deltas.len(),
        })
        .collect()
}

pub fn median_of(summary: &[SummaryRow], value: f64, algorithm: &str) -> Option<f64> {
    summary
        .iter()
        .find(|s| s.value == value && s.algorithm == algorithm)
        .map(|s| s.median_delta)
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads for trials; `None` uses the global rayon pool.
    pub jobs: Option<usize>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            jobs: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest_path: PathBuf,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    experiment: &'a str,
    seed: u64,
    config: serde_json::Value,
    outputs: &'a [String],
}

/// Collects output files for one run and writes the manifest last.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }

    pub fn finish(self, cfg: &ExperimentConfig) -> Result<RunArtifacts> {
        self.finish_as(cfg.experiment.as_str(), cfg.seed, serde_json::to_value(cfg)?)
    }

    /// Writes `manifest.json` recording `config` under the run name `name`.
    pub fn finish_as(self, name: &str, seed: u64, config: serde_json::Value) -> Result<RunArtifacts> {
        let outputs: Vec<String> = self
            .files
            .iter()
            .map(|p| {
                p.strip_prefix(&self.root)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .replace('\\', "/")
            })
            .collect();
        let manifest = Manifest {
            tool: "srl",
            version: env!("CARGO_PKG_VERSION"),
            experiment: name,
            seed,
            config,
            outputs: &outputs,
        };
        let path = self.path("manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest)?;
        body.push('\n');
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(RunArtifacts {
            manifest_path: path,
            files: self.files,
        })
    }
}

/// Runs `f` for `0..count` in parallel and returns results in index order.
pub(crate) fn run_parallel<T, F>(jobs: Option<usize>, count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let work = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build a pool of {j} threads: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_values() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn parallel_preserves_order() {
        let v = run_parallel(Some(3), 20, |i| Ok(i * i)).unwrap();
        assert_eq!(v, (0..20).map(|i| i * i).collect::<Vec<_>>());
        assert!(run_parallel(None, 3, |i| if i == 1 { Err(Error::invalid("x")) } else { Ok(i) }).is_err());
    }

    #[test]
    fn result_header() {
        let row = ResultRow {
            experiment: "sgd_vs_ridge".into(),
            trial: 0,
            algorithm: "sgd".into(),
            hyperparameter: 0.5,
            delta: 0.1,
            bias_hat: 0.0,
            var_hat: 0.0,
            layers: None,
            beta: Some(2.0),
            n: 8,
            seed: 1,
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(&row).unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "experiment,trial,algorithm,hyperparameter,delta,bias_hat,var_hat,L,beta,N,seed"
        );
        assert_eq!(text.lines().nth(1).unwrap(), "sgd_vs_ridge,0,sgd,0.5,0.1,0.0,0.0,,2.0,8,1");
    }
}
