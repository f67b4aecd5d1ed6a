//! Aggregated datasets: graph-propagated Gaussian features or direct sampling
//! from a prescribed covariance spectrum, ground-truth construction and ReLU
//! responses.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphOperator;
use crate::matrix::{dot, Matrix};
use crate::rng::{derive_seed, streams, SplitMix64};
use crate::spectral::{eigh_symmetric, SpectralDecomposition};

/// `n × d` matrix of i.i.d. standard normal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub matrix: Matrix,
    pub seed: u64,
}

pub fn sample_features(n: usize, d: usize, seed: u64) -> Result<FeatureMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::invalid("feature matrix needs n >= 1 and d >= 1"));
    }
    let mut rng = SplitMix64::new(derive_seed(seed, streams::FEATURES, 0));
    let data = (0..n * d).map(|_| rng.normal()).collect();
    Ok(FeatureMatrix {
        matrix: Matrix::from_vec(n, d, data)?,
        seed,
    })
}

/// Sample rows `m_i` together with their empirical covariance and its
/// eigendecomposition.
#[derive(Debug, Clone)]
pub struct AggregationDataset {
    samples: Matrix,
    covariance: Matrix,
    spectral: SpectralDecomposition,
    pub noise_sigma: f64,
    pub layers: usize,
    /// When set, row `i + n/2` equals `-row i` for `i < n/2`.
    pub symmetrized: bool,
}

impl AggregationDataset {
    pub fn from_samples(samples: Matrix, noise_sigma: f64, layers: usize, symmetrized: bool) -> Result<Self> {
        if samples.rows() == 0 || samples.cols() == 0 {
            return Err(Error::invalid("dataset needs at least one row and one column"));
        }
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::invalid(format!("noise sigma {noise_sigma} must be finite and >= 0")));
        }
        if !samples.is_finite() {
            return Err(Error::Numerical("dataset contains non-finite entries".into()));
        }
        let covariance = empirical_covariance(&samples);
        let spectral = eigh_symmetric(&covariance)?;
        Ok(Self {
            samples,
            covariance,
            spectral,
            noise_sigma,
            layers,
            symmetrized,
        })
    }

    pub fn samples(&self) -> &Matrix {
        &self.samples
    }

    /// `M̂ = DᵀD / n`.
    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    pub fn n(&self) -> usize {
        self.samples.rows()
    }

    pub fn d(&self) -> usize {
        self.samples.cols()
    }

    pub fn write_csv<W: Write>(&self, y: &[f64], out: W) -> Result<()> {
        if y.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "response length",
                expected: self.n(),
                actual: y.len(),
            });
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.d()).map(|j| format!("x{j}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (i, yi) in y.iter().enumerate() {
            let mut rec: Vec<String> = self.samples.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(yi.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn sidecar(&self, seed: u64, mode: &str) -> DatasetSidecar {
        DatasetSidecar {
            n: self.n(),
            d: self.d(),
            layers: self.layers,
            sigma: self.noise_sigma,
            seed,
            mode: mode.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub layers: usize,
    pub sigma: f64,
    pub seed: u64,
    pub mode: String,
}

pub fn empirical_covariance(samples: &Matrix) -> Matrix {
    samples.gram().scaled(1.0 / samples.rows() as f64)
}

/// `D = G^L X` by `layers` successive multiplications.
pub fn aggregate(op: &GraphOperator, x: &FeatureMatrix, layers: usize, sigma: f64) -> Result<AggregationDataset> {
    if layers == 0 {
        return Err(Error::invalid("layer count must be >= 1"));
    }
    if op.dim() != x.matrix.rows() {
        return Err(Error::DimensionMismatch {
            what: "operator size vs feature rows",
            expected: op.dim(),
            actual: x.matrix.rows(),
        });
    }
    let d = propagate(&op.matrix, &x.matrix, layers)?;
    AggregationDataset::from_samples(d, sigma, layers, false)
}

pub(crate) fn propagate(g: &Matrix, x: &Matrix, layers: usize) -> Result<Matrix> {
    let mut d = g.matmul(x)?;
    for _ in 1..layers {
        d = g.matmul(&d)?;
    }
    Ok(d)
}

/// Rows `m = V diag(√μ) z`, `z ~ N(0, I)`. With `symmetrize`, `-m` is
/// appended for every drawn row so the dataset has `2n` rows.
pub fn sample_from_spectrum(
    spec: &SpectralDecomposition,
    n: usize,
    sigma: f64,
    seed: u64,
    symmetrize: bool,
) -> Result<AggregationDataset> {
    let rows = draw_spectrum_rows(spec, n, seed)?;
    let samples = if symmetrize { mirror_rows(&rows) } else { rows };
    AggregationDataset::from_samples(samples, sigma, 1, symmetrize)
}

/// The raw `n × d` draw behind [`sample_from_spectrum`].
pub fn draw_spectrum_rows(spec: &SpectralDecomposition, n: usize, seed: u64) -> Result<Matrix> {
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    if let Some(mu) = spec.eigenvalues().iter().find(|&&m| !(m >= 0.0)) {
        return Err(Error::invalid(format!("spectrum value {mu} is negative")));
    }
    let d = spec.dim();
    let scale: Vec<f64> = spec.eigenvalues().iter().map(|m| m.sqrt()).collect();
    let v = spec.eigenvectors();
    let mut rng = SplitMix64::new(derive_seed(seed, streams::SPECTRUM, 0));
    let mut out = Matrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        for (zk, s) in z.iter_mut().zip(&scale) {
            *zk = rng.normal() * s;
        }
        let row = out.row_mut(i);
        for (r, out_r) in row.iter_mut().enumerate() {
            *out_r = dot(v.row(r), &z);
        }
    }
    Ok(out)
}

/// Stack `rows` on top of `-rows`.
pub fn mirror_rows(rows: &Matrix) -> Matrix {
    let (n, d) = (rows.rows(), rows.cols());
    let mut data = Vec::with_capacity(2 * n * d);
    data.extend_from_slice(rows.as_slice());
    data.extend(rows.as_slice().iter().map(|v| -v));
    Matrix::from_vec(2 * n, d, data).expect("shape is consistent")
}

/// How the ground truth sits relative to the eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Alignment {
    /// Equal weight on the top `k` eigenvectors.
    Head { k: usize },
    /// Equal weight on the bottom `k` eigenvectors.
    Tail { k: usize },
    /// Coordinates proportional to `μ_i^p`.
    Weighted { p: f64 },
}

impl Alignment {
    pub fn name(&self) -> &'static str {
        match self {
            Alignment::Head { .. } => "head",
            Alignment::Tail { .. } => "tail",
            Alignment::Weighted { .. } => "weighted",
        }
    }

    pub fn label(&self) -> String {
        match self {
            Alignment::Head { k } => format!("head({k})"),
            Alignment::Tail { k } => format!("tail({k})"),
            Alignment::Weighted { p } => format!("weighted({p})"),
        }
    }
}

/// Default head/tail width `⌈d/10⌉`.
pub fn default_alignment_k(d: usize) -> usize {
    d.div_ceil(10).max(1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub theta_star: Vec<f64>,
    pub mode: Alignment,
    /// `Vᵀθ*` in the basis the truth was built from.
    pub coords: Vec<f64>,
}

impl GroundTruth {
    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }
}

pub fn make_ground_truth(spec: &SpectralDecomposition, mode: Alignment) -> Result<GroundTruth> {
    let d = spec.dim();
    let mut coords = vec![0.0; d];
    match mode {
        Alignment::Head { k } | Alignment::Tail { k } => {
            if k == 0 || k > d {
                return Err(Error::invalid(format!("alignment width k={k} outside 1..={d}")));
            }
            let w = 1.0 / (k as f64).sqrt();
            let range = if matches!(mode, Alignment::Head { .. }) {
                0..k
            } else {
                d - k..d
            };
            coords[range].iter_mut().for_each(|c| *c = w);
        }
        Alignment::Weighted { p } => {
            if !p.is_finite() {
                return Err(Error::invalid("weighted alignment exponent must be finite"));
            }
            for (c, mu) in coords.iter_mut().zip(spec.eigenvalues()) {
                *c = if *mu > 0.0 { mu.powf(p) } else { 0.0 };
            }
            let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::invalid("weighted alignment has no positive eigenvalue to weight"));
            }
            coords.iter_mut().for_each(|c| *c /= norm);
        }
    }
    let theta_star = spec.from_coords(&coords)?;
    Ok(GroundTruth {
        theta_star,
        mode,
        coords,
    })
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `y_i = ReLU(m_iᵀθ*) + ε_i`, `ε_i ~ N(0, σ²)`.
pub fn generate_responses(ds: &AggregationDataset, gt: &GroundTruth, seed: u64) -> Result<Vec<f64>> {
    responses_for(ds.samples(), gt, ds.noise_sigma, seed)
}

/// Responses for arbitrary rows with noise level `sigma`.
pub fn responses_for(x: &Matrix, gt: &GroundTruth, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if gt.dim() != x.cols() {
        return Err(Error::DimensionMismatch {
            what: "ground truth length",
            expected: x.cols(),
            actual: gt.dim(),
        });
    }
    let mut rng = SplitMix64::new(derive_seed(seed, streams::NOISE, 0));
    Ok((0..x.rows())
        .map(|i| {
            let clean = relu(dot(x.row(i), &gt.theta_star));
            if sigma > 0.0 {
                clean + sigma * rng.normal()
            } else {
                clean
            }
        })
        .collect())
}
