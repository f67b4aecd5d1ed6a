//! Browser bindings: each exported function takes plain numbers and returns
//! a JSON string holding the computed values and a ready-to-insert SVG chart.

use serde::Serialize;
use srl_core::bounds::{ridge_cutoff, ridge_risk_bound, sgd_risk_bound, RidgeBoundParams, SgdBoundParams, Side};
use srl_core::graph::{build_operator, generate_ba, generate_regular, OperatorKind};
use srl_core::harness::{compute_training, render_svg, AlignMode, AxesConfig, ExperimentConfig, ExperimentKind, Series};
use srl_core::learners::Algorithm;
use srl_core::spectral::{eigh_symmetric, fit_decay_rate, synthetic_spectrum};
use srl_core::synthesis::{make_ground_truth, Alignment};
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn log_axes(title: &str, x: &str, y: &str) -> AxesConfig {
    AxesConfig {
        title: title.into(),
        x_label: x.into(),
        y_label: y.into(),
        x_log: true,
        y_log: true,
        ..AxesConfig::default()
    }
}

#[derive(Serialize)]
struct SpectrumDemo {
    beta_ba: f64,
    beta_regular: f64,
    svg: String,
}

/// Operator spectra of a preferential-attachment graph and a regular graph
/// with the same vertex count.
pub fn spectrum_json(n: usize, m: usize, degree: usize, seed: u64) -> Out {
    if n > 400 {
        return Err("n is capped at 400 in the browser".into());
    }
    let mut series = Vec::new();
    let mut betas = Vec::new();
    for (label, graph) in [
        ("preferential attachment", generate_ba(n, m, seed).map_err(err)?),
        ("regular", generate_regular(n, degree, seed).map_err(err)?),
    ] {
        let op = build_operator(&graph, OperatorKind::ShiftPsd, 1).map_err(err)?;
        let mu: Vec<f64> = eigh_symmetric(&op.matrix).map_err(err)?.eigenvalues().to_vec();
        let positive: Vec<f64> = mu.into_iter().take_while(|&v| v > 1e-12).collect();
        betas.push(fit_decay_rate(&positive, positive.len().min(100)).map_err(err)?);
        let pts = positive.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
        series.push(Series::new(label, pts));
    }
    let svg = render_svg(&series, &log_axes("Operator spectrum", "index", "eigenvalue")).map_err(err)?;
    serde_json::to_string(&SpectrumDemo {
        beta_ba: betas[0],
        beta_regular: betas[1],
        svg,
    })
    .map_err(err)
}

#[derive(Serialize)]
struct BoundPoint {
    n: usize,
    sgd: f64,
    ridge: f64,
}

#[derive(Serialize)]
struct BoundDemo {
    points: Vec<BoundPoint>,
    svg: String,
}

fn alignment(mode: &str, d: usize) -> Result<Alignment, String> {
    let k = d.div_ceil(10);
    match mode {
        "head" => Ok(Alignment::Head { k }),
        "tail" => Ok(Alignment::Tail { k }),
        other => Err(format!("unknown alignment '{other}'")),
    }
}

/// Upper-bound totals of SGD (stepsize `gamma`) and ridge (penalty
/// `lambda`) on the spectrum `μ_i = i^{-β}` over a doubling grid of `N`.
pub fn bounds_json(d: usize, beta: f64, sigma: f64, gamma: f64, lambda: f64, align: &str) -> Out {
    let spec = synthetic_spectrum(d, beta).map_err(err)?;
    let gt = make_ground_truth(&spec.to_decomposition(), alignment(align, d)?).map_err(err)?;
    let mu = &spec.values;
    let mut points = Vec::new();
    for e in 4..=14 {
        let n = 1usize << e;
        let lower = SgdBoundParams {
            n,
            gamma,
            sigma,
            side: Side::Lower,
            k1: 0,
            k2: 0,
            enforce_stepsize: false,
        };
        let k = sgd_risk_bound(mu, &gt.coords, &lower).map_err(err)?.cutoffs.k_star;
        let sgd = sgd_risk_bound(mu, &gt.coords, &SgdBoundParams { side: Side::Upper, k1: k, k2: k, ..lower })
            .map_err(err)?
            .total;
        let k = ridge_cutoff(mu, n, lambda, 2.0).map_err(err)?.0;
        let ridge = ridge_risk_bound(
            mu,
            &gt.coords,
            &RidgeBoundParams {
                n,
                lambda,
                sigma,
                side: Side::Upper,
                k,
                b: 2.0,
            },
        )
        .map_err(err)?
        .total;
        points.push(BoundPoint { n, sgd, ridge });
    }
    let series = vec![
        Series::new("SGD upper", points.iter().map(|p| (p.n as f64, p.sgd)).collect()),
        Series::new("ridge upper", points.iter().map(|p| (p.n as f64, p.ridge)).collect()),
    ];
    let svg = render_svg(&series, &log_axes("Risk bounds", "N", "bound")).map_err(err)?;
    serde_json::to_string(&BoundDemo { points, svg }).map_err(err)
}

#[derive(Serialize)]
struct Fit {
    algorithm: &'static str,
    hyperparameter: f64,
    delta: f64,
}

#[derive(Serialize)]
struct CompareDemo {
    fits: Vec<Fit>,
    svg: String,
}

/// Tunes and trains both learners once on data drawn from `μ_i = i^{-β}`.
pub fn compare_json(d: usize, beta: f64, n_train: usize, align: &str, seed: u64) -> Out {
    if d > 256 || n_train > 8192 {
        return Err("d is capped at 256 and N at 8192 in the browser".into());
    }
    let mut cfg = ExperimentConfig::preset(ExperimentKind::SgdVsRidge);
    cfg.d = d;
    cfg.betas = vec![beta];
    cfg.n_train = n_train;
    cfg.seed = seed;
    cfg.population = 4096;
    cfg.repeats = 0;
    cfg.align = match align {
        "tail" => AlignMode::Tail,
        _ => AlignMode::Head,
    };
    cfg.validate().map_err(err)?;
    let mut fits = Vec::new();
    for alg in [Algorithm::Sgd, Algorithm::Ridge] {
        let (out, _) = compute_training(&cfg, alg).map_err(err)?;
        fits.push(Fit {
            algorithm: alg.as_str(),
            hyperparameter: out.estimator.hyperparameter(),
            delta: out.report.delta,
        });
    }
    let spec = synthetic_spectrum(d, beta).map_err(err)?;
    let pts = spec.values.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)).collect();
    let svg = render_svg(&[Series::new(format!("beta = {beta}"), pts)], &log_axes("Data spectrum", "index", "eigenvalue"))
        .map_err(err)?;
    serde_json::to_string(&CompareDemo { fits, svg }).map_err(err)
}

#[wasm_bindgen]
pub fn spectrum_demo(n: usize, m: usize, degree: usize, seed: u64) -> Result<String, JsValue> {
    spectrum_json(n, m, degree, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bound_curves(d: usize, beta: f64, sigma: f64, gamma: f64, lambda: f64, align: &str) -> Result<String, JsValue> {
    bounds_json(d, beta, sigma, gamma, lambda, align).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sgd_vs_ridge_demo(d: usize, beta: f64, n_train: usize, align: &str, seed: u64) -> Result<String, JsValue> {
    compare_json(d, beta, n_train, align, seed).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn spectrum_demo_returns_both_fits() {
        let v: Value = serde_json::from_str(&spectrum_json(120, 3, 6, 1).unwrap()).unwrap();
        assert!(v["beta_ba"].as_f64().unwrap().is_finite());
        assert!(v["beta_regular"].as_f64().unwrap().is_finite());
        assert_eq!(v["svg"].as_str().unwrap().matches("<polyline").count(), 2);
        assert!(spectrum_json(1000, 3, 6, 1).is_err());
    }

    #[test]
    fn bound_curves_are_finite() {
        let v: Value = serde_json::from_str(&bounds_json(64, 1.0, 1.0, 0.05, 1.0, "head").unwrap()).unwrap();
        let pts = v["points"].as_array().unwrap();
        assert_eq!(pts.len(), 11);
        for p in pts {
            assert!(p["sgd"].as_f64().unwrap().is_finite());
            assert!(p["ridge"].as_f64().unwrap().is_finite());
        }
        assert!(bounds_json(64, 1.0, 1.0, 0.05, 1.0, "sideways").is_err());
    }

    #[test]
    fn comparison_reports_both_learners() {
        let v: Value = serde_json::from_str(&compare_json(16, 2.0, 128, "head", 3).unwrap()).unwrap();
        let fits = v["fits"].as_array().unwrap();
        assert_eq!(fits.len(), 2);
        assert_eq!(fits[0]["algorithm"], "sgd");
        assert!(fits.iter().all(|f| f["delta"].as_f64().unwrap() >= 0.0));
    }
}
