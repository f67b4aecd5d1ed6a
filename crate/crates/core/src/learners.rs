//! Tail-averaged constant-stepsize SGD on the ReLU readout, and ridge
//! regression (OLS at `λ = 0`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{cholesky, cholesky_solve, dot, norm2, Matrix};
use crate::rng::{derive_seed, streams, SplitMix64};
use crate::synthesis::relu;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Uniform row draws with replacement; `N` may exceed `n`.
    #[default]
    WithReplacement,
    /// A single pass over a random permutation; requires `N <= n`.
    OnePass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub gamma: f64,
    pub iterations: usize,
    #[serde(default)]
    pub sampling: Sampling,
    pub seed: u64,
    /// Reject `γ > 1/tr(M̂)`.
    #[serde(default)]
    pub enforce_stepsize: bool,
}

impl SgdConfig {
    pub fn new(gamma: f64, iterations: usize, seed: u64) -> Self {
        Self {
            gamma,
            iterations,
            sampling: Sampling::WithReplacement,
            seed,
            enforce_stepsize: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Sgd,
    Ridge,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Sgd => "sgd",
            Algorithm::Ridge => "ridge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorConfig {
    Sgd(SgdConfig),
    Ridge(RidgeConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimator {
    pub algorithm: Algorithm,
    pub config: EstimatorConfig,
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub iterate_count: usize,
}

impl Estimator {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `γ` for SGD, `λ` for ridge.
    pub fn hyperparameter(&self) -> f64 {
        match self.config {
            EstimatorConfig::Sgd(c) => c.gamma,
            EstimatorConfig::Ridge(c) => c.lambda,
        }
    }
}

/// `tr(M̂) = ‖D‖²_F / n`.
pub fn covariance_trace(x: &Matrix) -> f64 {
    x.as_slice().iter().map(|v| v * v).sum::<f64>() / x.rows() as f64
}

fn check_responses(x: &Matrix, y: &[f64]) -> Result<()> {
    if y.len() != x.rows() {
        return Err(Error::DimensionMismatch {
            what: "response length vs sample rows",
            expected: x.rows(),
            actual: y.len(),
        });
    }
    if x.rows() == 0 {
        return Err(Error::invalid("training set is empty"));
    }
    Ok(())
}

/// Runs `θ_{t+1} = θ_t − γ (ReLU(m_tᵀθ_t) − y_t) m_t` from `θ_0 = 0` and
/// returns `(2/N) Σ_{t=N/2}^{N−1} θ_t`.
pub fn sgd_tail_averaged(x: &Matrix, y: &[f64], cfg: &SgdConfig) -> Result<Estimator> {
    check_responses(x, y)?;
    let n_iter = cfg.iterations;
    if n_iter < 2 || n_iter % 2 != 0 {
        return Err(Error::invalid(format!("iterations N={n_iter} must be even and >= 2")));
    }
    if !(cfg.gamma >= 0.0) || !cfg.gamma.is_finite() {
        return Err(Error::invalid(format!("stepsize gamma={} must be finite and >= 0", cfg.gamma)));
    }
    if cfg.enforce_stepsize {
        let limit = 1.0 / covariance_trace(x);
        if cfg.gamma > limit {
            return Err(Error::invalid(format!(
                "stepsize gamma={} exceeds 1/tr(M)={limit}",
                cfg.gamma
            )));
        }
    }
    let n = x.rows();
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, streams::SAMPLING, 0));
    let order = match cfg.sampling {
        Sampling::OnePass => {
            if n_iter > n {
                return Err(Error::invalid(format!(
                    "one-pass sampling needs N={n_iter} <= n={n}"
                )));
            }
            Some(rng.permutation(n))
        }
        Sampling::WithReplacement => None,
    };

    let d = x.cols();
    let mut theta = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let half = n_iter / 2;
    for t in 0..n_iter {
        if t >= half {
            avg.iter_mut().zip(&theta).for_each(|(a, th)| *a += th);
        }
        if t + 1 == n_iter {
            break;
        }
        let i = match &order {
            Some(p) => p[t],
            None => rng.below(n),
        };
        let m = x.row(i);
        let step = cfg.gamma * (relu(dot(m, &theta)) - y[i]);
        if step != 0.0 {
            theta.iter_mut().zip(m).for_each(|(th, mj)| *th -= step * mj);
        }
    }
    let w = 2.0 / n_iter as f64;
    avg.iter_mut().for_each(|a| *a *= w);
    if avg.iter().any(|v| !v.is_finite()) || theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("SGD diverged at gamma={}", cfg.gamma)));
    }
    Ok(Estimator {
        algorithm: Algorithm::Sgd,
        config: EstimatorConfig::Sgd(*cfg),
        theta: avg,
        iterate_count: n_iter,
    })
}

pub const RIDGE_MAX_CONDITION: f64 = 1e12;
pub const RIDGE_RESIDUAL_TOL: f64 = 1e-8;

/// Solves `(DᵀD + λI) θ = Dᵀy` by Cholesky.
pub fn ridge_fit(x: &Matrix, y: &[f64], cfg: &RidgeConfig) -> Result<Estimator> {
    check_responses(x, y)?;
    let lambda = cfg.lambda;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("ridge lambda={lambda} must be finite and >= 0")));
    }
    let mut a = x.gram();
    for i in 0..a.rows() {
        a[(i, i)] += lambda;
    }
    let b = x.tr_matvec(y)?;
    let l = cholesky(&a).ok_or_else(|| {
        Error::SingularSystem(format!("DᵀD + {lambda}·I is not positive definite"))
    })?;
    if lambda == 0.0 {
        let diag: Vec<f64> = (0..l.rows()).map(|i| l[(i, i)]).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let cond = (max / min).powi(2);
        if !(cond <= RIDGE_MAX_CONDITION) {
            return Err(Error::SingularSystem(format!(
                "DᵀD is rank-deficient (condition estimate {cond:e})"
            )));
        }
    }
    let theta = cholesky_solve(&l, &b);
    let resid = norm2(&crate::matrix::sub(&a.matvec(&theta)?, &b));
    if !(resid <= RIDGE_RESIDUAL_TOL * norm2(&b)) && resid != 0.0 {
        return Err(Error::Numerical(format!(
            "ridge residual {resid:e} exceeds tolerance"
        )));
    }
    Ok(Estimator {
        algorithm: Algorithm::Ridge,
        config: EstimatorConfig::Ridge(*cfg),
        theta,
        iterate_count: 0,
    })
}

pub fn ols_fit(x: &Matrix, y: &[f64]) -> Result<Estimator> {
    ridge_fit(x, y, &RidgeConfig { lambda: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_stepsize_stays_at_origin() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]);
        let est = sgd_tail_averaged(&x, &[1.0, 2.0], &SgdConfig::new(0.0, 10, 1)).unwrap();
        assert_eq!(est.theta, vec![0.0, 0.0]);
    }

    #[test]
    fn one_step_hand_example() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let est = sgd_tail_averaged(&x, &[1.0], &SgdConfig::new(0.5, 2, 0)).unwrap();
        assert_eq!(est.theta, vec![0.5, 0.0]);
    }

    #[test]
    fn sgd_rejects_bad_configs() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0]]);
        assert!(sgd_tail_averaged(&x, &[1.0], &SgdConfig::new(0.5, 3, 0)).is_err());
        assert!(sgd_tail_averaged(&x, &[1.0], &SgdConfig::new(-0.5, 2, 0)).is_err());
        let mut cfg = SgdConfig::new(0.5, 2, 0);
        cfg.sampling = Sampling::OnePass;
        assert!(sgd_tail_averaged(&x, &[1.0], &cfg).is_err());
        let mut cfg = SgdConfig::new(2.0, 2, 0);
        cfg.enforce_stepsize = true;
        assert!(sgd_tail_averaged(&x, &[1.0], &cfg).is_err());
    }

    #[test]
    fn sgd_one_pass_visits_rows() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0], vec![1.0]]);
        let mut cfg = SgdConfig::new(0.5, 4, 3);
        cfg.sampling = Sampling::OnePass;
        let est = sgd_tail_averaged(&x, &[1.0; 4], &cfg).unwrap();
        // θ: 0, 0.5, 0.75, 0.875; tail average of the last two.
        assert_eq!(est.theta, vec![0.8125]);
    }

    #[test]
    fn ridge_identity_design() {
        let est = ridge_fit(&Matrix::identity(2), &[2.0, 4.0], &RidgeConfig { lambda: 1.0 }).unwrap();
        assert!((est.theta[0] - 1.0).abs() < 1e-15 && (est.theta[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn ridge_huge_lambda_vanishes() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]]);
        let y = [1.0, -2.0, 3.0];
        let est = ridge_fit(&x, &y, &RidgeConfig { lambda: 1e9 }).unwrap();
        assert!(norm2(&est.theta) <= norm2(&x.tr_matvec(&y).unwrap()) / 1e9);
    }

    #[test]
    fn ols_interpolates_square_system() {
        let x = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let y = [1.0, -1.0];
        let est = ols_fit(&x, &y).unwrap();
        let fit = x.matvec(&est.theta).unwrap();
        assert!((fit[0] - y[0]).abs() < 1e-8 && (fit[1] - y[1]).abs() < 1e-8);
        assert_eq!(est, ridge_fit(&x, &y, &RidgeConfig { lambda: 0.0 }).unwrap());
    }

    #[test]
    fn ols_duplicate_columns_singular() {
        let x = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![-1.0, -1.0]]);
        assert!(matches!(ols_fit(&x, &[1.0, 2.0, 3.0]), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn estimator_json_round_trip() {
        let est = ridge_fit(&Matrix::identity(2), &[2.0, 4.0], &RidgeConfig { lambda: 1.0 }).unwrap();
        let json = est.to_json().unwrap();
        assert!(json.starts_with(r#"{"algorithm":"ridge","config":{"lambda":1.0},"theta":["#));
        assert_eq!(Estimator::from_json(&json).unwrap(), est);
        let sgd = sgd_tail_averaged(&Matrix::identity(2), &[1.0, 1.0], &SgdConfig::new(0.1, 4, 2)).unwrap();
        let back = Estimator::from_json(&sgd.to_json().unwrap()).unwrap();
        assert_eq!(back.config, sgd.config);
    }
}
