//! Closed-form bias/variance bound profiles for tail-averaged SGD and ridge
//! regression, evaluated on a spectrum `μ` and ground-truth coordinates `c`.
//! Absolute constants hidden by `≲`/`≳` are dropped.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Upper,
    Lower,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffIndices {
    pub k_star: usize,
    pub k_dagger: Option<usize>,
    pub k1: usize,
    pub k2: usize,
    pub lambda_hat: Option<f64>,
    pub b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundProfile {
    pub algorithm: Algorithm,
    pub side: Side,
    pub bias: f64,
    pub variance: f64,
    pub total: f64,
    pub cutoffs: CutoffIndices,
}

impl BoundProfile {
    fn new(algorithm: Algorithm, side: Side, bias: f64, variance: f64, cutoffs: CutoffIndices) -> Result<Self> {
        if !(bias >= 0.0 && variance >= 0.0 && bias.is_finite() && variance.is_finite()) {
            return Err(Error::Numerical(format!(
                "bound terms not finite and non-negative: bias={bias}, variance={variance}"
            )));
        }
        Ok(Self {
            algorithm,
            side,
            bias,
            variance,
            total: bias + variance,
            cutoffs,
        })
    }

    pub const CSV_HEADER: [&'static str; 8] = [
        "algorithm",
        "side",
        "bias",
        "variance",
        "total",
        "k_star",
        "k_dagger",
        "lambda_hat",
    ];

    pub fn csv_record(&self) -> [String; 8] {
        [
            self.algorithm.as_str().to_string(),
            self.side.as_str().to_string(),
            self.bias.to_string(),
            self.variance.to_string(),
            self.total.to_string(),
            self.cutoffs.k_star.to_string(),
            self.cutoffs.k_dagger.map(|k| k.to_string()).unwrap_or_default(),
            self.cutoffs.lambda_hat.map(|l| l.to_string()).unwrap_or_default(),
        ]
    }

    pub fn write_csv_row<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        w.write_record(self.csv_record())?;
        Ok(())
    }
}

fn check_spectrum(mu: &[f64]) -> Result<()> {
    if mu.is_empty() {
        return Err(Error::invalid("spectrum is empty"));
    }
    for (i, m) in mu.iter().enumerate() {
        if !(*m >= 0.0) || !m.is_finite() {
            return Err(Error::invalid(format!("spectrum value {} = {m} must be finite and >= 0", i + 1)));
        }
        if i > 0 && *m > mu[i - 1] {
            return Err(Error::invalid("spectrum must be sorted non-increasing"));
        }
    }
    Ok(())
}

fn check_coords(mu: &[f64], coords: &[f64]) -> Result<()> {
    if coords.len() != mu.len() {
        return Err(Error::DimensionMismatch {
            what: "ground truth coordinates vs spectrum",
            expected: mu.len(),
            actual: coords.len(),
        });
    }
    if coords.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("ground truth coordinates must be finite"));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{name}={v} must be finite and > 0")));
    }
    Ok(())
}

/// `(k*, k†)`: the number of eigenvalues with `μ_i ≥ 1/(Nγ)` and
/// `μ_i ≥ 2/(3Nγ)` respectively.
pub fn sgd_cutoffs(mu: &[f64], n: usize, gamma: f64) -> Result<(usize, usize)> {
    check_spectrum(mu)?;
    if n == 0 {
        return Err(Error::invalid("sample count N must be >= 1"));
    }
    check_positive("gamma", gamma)?;
    let ng = n as f64 * gamma;
    let k_star = mu.iter().take_while(|&&m| m >= 1.0 / ng).count();
    let k_dagger = mu.iter().take_while(|&&m| m >= 2.0 / (3.0 * ng)).count();
    Ok((k_star, k_dagger))
}

/// `Σ_{i≥k} μ_i c_i²`.
fn tail_energy(mu: &[f64], coords: &[f64], k: usize) -> f64 {
    mu[k..].iter().zip(&coords[k..]).map(|(m, c)| m * c * c).sum()
}

fn tail_sq(mu: &[f64], k: usize) -> f64 {
    mu[k..].iter().map(|m| m * m).sum()
}

/// Head terms `e^{−2Nγμ_i} c_i² / (γ²N² μ_i)` for `i < k`.
pub fn sgd_head_terms(mu: &[f64], coords: &[f64], n: usize, gamma: f64, k: usize) -> Result<Vec<f64>> {
    let ng = n as f64 * gamma;
    (0..k)
        .map(|i| {
            let c2 = coords[i] * coords[i];
            if c2 == 0.0 {
                return Ok(0.0);
            }
            if !(mu[i] > 0.0) {
                return Err(Error::invalid(format!("head eigenvalue {} is zero", i + 1)));
            }
            Ok((-2.0 * ng * mu[i]).exp() * c2 / (mu[i] * ng * ng))
        })
        .collect()
}

/// Head terms `λ̂² c_i² / (N² μ_i)` for `i < k`.
pub fn ridge_head_terms(mu: &[f64], coords: &[f64], n: usize, lambda_hat: f64, k: usize) -> Result<Vec<f64>> {
    let scale = (lambda_hat / n as f64).powi(2);
    (0..k)
        .map(|i| {
            let c2 = coords[i] * coords[i];
            if c2 == 0.0 {
                return Ok(0.0);
            }
            if !(mu[i] > 0.0) {
                return Err(Error::invalid(format!("head eigenvalue {} is zero", i + 1)));
            }
            Ok(scale * c2 / mu[i])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdBoundParams {
    pub n: usize,
    pub gamma: f64,
    pub sigma: f64,
    pub side: Side,
    /// Head/tail split of the upper bias; ignored on the lower side.
    pub k1: usize,
    /// Head/tail split of the upper variance; ignored on the lower side.
    pub k2: usize,
    /// Reject stepsizes above 1/tr(M) (upper side) or 1/μ₁ (lower side).
    pub enforce_stepsize: bool,
}

/// Upper side:
/// bias `(1/(γ²N²)) Σ_{i<k1} e^{−2Nγμ_i} c_i²/μ_i + Σ_{i≥k1} μ_i c_i²`,
/// variance `((σ² + ‖θ*‖²_M)/N) (k2 + N²γ² Σ_{i≥k2} μ_i²)`.
///
/// Lower side: the same bias at `k1 = k*`, variance
/// `(σ²/N)(k* + N²γ² Σ_{i≥k*} μ_i²) + ‖θ*‖²_M (γ/μ_1) Σ_{i≥k†} μ_i²`.
pub fn sgd_risk_bound(mu: &[f64], coords: &[f64], p: &SgdBoundParams) -> Result<BoundProfile> {
    check_spectrum(mu)?;
    check_coords(mu, coords)?;
    if !(p.sigma >= 0.0) || !p.sigma.is_finite() {
        return Err(Error::invalid(format!("sigma={} must be finite and >= 0", p.sigma)));
    }
    let (k_star, k_dagger) = sgd_cutoffs(mu, p.n, p.gamma)?;
    let d = mu.len();
    if p.enforce_stepsize {
        let limit = match p.side {
            Side::Upper => 1.0 / mu.iter().sum::<f64>(),
            Side::Lower => 1.0 / mu[0],
        };
        if p.gamma > limit {
            return Err(Error::invalid(format!(
                "stepsize gamma={} violates the {} bound condition gamma <= {limit}",
                p.gamma,
                p.side.as_str()
            )));
        }
    }
    let (k1, k2) = match p.side {
        Side::Upper => {
            if p.k1 > d || p.k2 > d {
                return Err(Error::invalid(format!("k1={} / k2={} must lie in 0..={d}", p.k1, p.k2)));
            }
            (p.k1, p.k2)
        }
        Side::Lower => (k_star, k_star),
    };
    let nf = p.n as f64;
    let ng2 = (nf * p.gamma).powi(2);
    let energy = tail_energy(mu, coords, 0);
    let bias = sgd_head_terms(mu, coords, p.n, p.gamma, k1)?.iter().sum::<f64>() + tail_energy(mu, coords, k1);
    let sigma2 = p.sigma * p.sigma;
    let variance = match p.side {
        Side::Upper => (sigma2 + energy) / nf * (k2 as f64 + ng2 * tail_sq(mu, k2)),
        Side::Lower => {
            let first = sigma2 / nf * (k_star as f64 + ng2 * tail_sq(mu, k_star));
            let extra = if mu[0] > 0.0 {
                energy * (p.gamma / mu[0]) * tail_sq(mu, k_dagger)
            } else {
                0.0
            };
            first + extra
        }
    };
    BoundProfile::new(
        Algorithm::Sgd,
        p.side,
        bias,
        variance,
        CutoffIndices {
            k_star,
            k_dagger: Some(k_dagger),
            k1,
            k2,
            lambda_hat: None,
            b: None,
        },
    )
}

pub const DEFAULT_RIDGE_B: f64 = 2.0;

/// Smallest `k` with `b μ_{k+1} ≤ (λ + Σ_{i>k} μ_i)/N` (taking
/// `μ_{d+1} = 0`), and `λ̂ = λ + Σ_{i>k*} μ_i`.
pub fn ridge_cutoff(mu: &[f64], n: usize, lambda: f64, b: f64) -> Result<(usize, f64)> {
    check_spectrum(mu)?;
    if n == 0 {
        return Err(Error::invalid("sample count N must be >= 1"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda={lambda} must be finite and >= 0")));
    }
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::invalid(format!("ridge cutoff constant b={b} must be > 1")));
    }
    let nf = n as f64;
    // suffix[k] = Σ_{i≥k} μ_i (0-based).
    let mut suffix = vec![0.0; mu.len() + 1];
    for k in (0..mu.len()).rev() {
        suffix[k] = suffix[k + 1] + mu[k];
    }
    for k in 0..=mu.len() {
        let next = mu.get(k).copied().unwrap_or(0.0);
        if b * next <= (lambda + suffix[k]) / nf {
            return Ok((k, lambda + suffix[k]));
        }
    }
    unreachable!("k = d always satisfies the cutoff condition")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeBoundParams {
    pub n: usize,
    pub lambda: f64,
    pub sigma: f64,
    pub side: Side,
    /// Head/tail split for the upper side; the lower side uses `k*`.
    pub k: usize,
    pub b: f64,
}

/// bias `(λ̂²/N²) Σ_{i<k} c_i²/μ_i + Σ_{i≥k} μ_i c_i²`,
/// variance `σ² (k/N + (N/λ̂²) Σ_{i≥k} μ_i²)`, with `λ̂` from [`ridge_cutoff`].
pub fn ridge_risk_bound(mu: &[f64], coords: &[f64], p: &RidgeBoundParams) -> Result<BoundProfile> {
    check_spectrum(mu)?;
    check_coords(mu, coords)?;
    if !(p.sigma >= 0.0) || !p.sigma.is_finite() {
        return Err(Error::invalid(format!("sigma={} must be finite and >= 0", p.sigma)));
    }
    if p.side == Side::Lower && !(p.lambda > 0.0) {
        return Err(Error::invalid("the ridge lower bound needs lambda > 0"));
    }
    let (k_star, lambda_hat) = ridge_cutoff(mu, p.n, p.lambda, p.b)?;
    let k = match p.side {
        Side::Upper => {
            if p.k > mu.len() {
                return Err(Error::invalid(format!("k={} must lie in 0..={}", p.k, mu.len())));
            }
            p.k
        }
        Side::Lower => k_star,
    };
    let nf = p.n as f64;
    let bias = ridge_head_terms(mu, coords, p.n, lambda_hat, k)?.iter().sum::<f64>() + tail_energy(mu, coords, k);
    let tail = tail_sq(mu, k);
    let tail_term = if tail == 0.0 { 0.0 } else { nf / (lambda_hat * lambda_hat) * tail };
    let variance = p.sigma * p.sigma * (k as f64 / nf + tail_term);
    BoundProfile::new(
        Algorithm::Ridge,
        p.side,
        bias,
        variance,
        CutoffIndices {
            k_star,
            k_dagger: None,
            k1: k,
            k2: k,
            lambda_hat: Some(lambda_hat),
            b: Some(p.b),
        },
    )
}
