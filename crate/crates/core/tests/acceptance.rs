//! Acceptance criteria, one test each. Every test prints a single
//! `[PASS]`/`[FAIL]` line before asserting.

use std::time::Instant;

use srl_core::bounds::{ridge_risk_bound, sgd_risk_bound, RidgeBoundParams, SgdBoundParams, Side};
use srl_core::harness::{
    compute_comparison, compute_oversmoothing, compute_spectrum_study, resolve_config, run_experiment,
    AlignMode, ExperimentConfig, ExperimentKind, PartialConfig, RunOptions,
};
use srl_core::learners::{covariance_trace, ridge_fit, sgd_tail_averaged, RidgeConfig, SgdConfig};
use srl_core::matrix::Matrix;
use srl_core::risk::{excess_risk, quadratic_proxy};
use srl_core::rng::SplitMix64;
use srl_core::spectral::{ratio_amplification_check, stacked_ratios, SpectralDecomposition};
use srl_core::synthesis::{make_ground_truth, responses_for, sample_from_spectrum, Alignment};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] criterion {id}: {name}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn preset(kind: ExperimentKind) -> ExperimentConfig {
    ExperimentConfig::preset(kind)
}

// Oracle: naive ReLU excess risk and quadratic form, written out longhand.
fn oracle_delta(rows: &Matrix, theta: &[f64], star: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..rows.rows() {
        let (mut a, mut b) = (0.0, 0.0);
        for j in 0..rows.cols() {
            a += rows[(i, j)] * theta[j];
            b += rows[(i, j)] * star[j];
        }
        let diff = a.max(0.0) - b.max(0.0);
        s += diff * diff;
    }
    s / (2.0 * rows.rows() as f64)
}

// Oracle: Gaussian elimination with partial pivoting on the normal equations.
fn oracle_ridge(x: &Matrix, y: &[f64], lambda: f64) -> Vec<f64> {
    let d = x.cols();
    let mut a = vec![vec![0.0; d + 1]; d];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = (0..x.rows()).map(|r| x[(r, i)] * x[(r, j)]).sum::<f64>();
        }
        a[i][i] += lambda;
        a[i][d] = (0..x.rows()).map(|r| x[(r, i)] * y[r]).sum::<f64>();
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs())).unwrap();
        a.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=d {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

#[test]
fn criterion_1_spectrum_dichotomy() {
    let mut ratios = Vec::new();
    let mut slowest = 0.0f64;
    for seed in 0..5u64 {
        let flags = PartialConfig {
            seed: Some(seed),
            trials: Some(1),
            ..Default::default()
        };
        let cfg = resolve_config(ExperimentKind::SpectrumStudy, None, &flags).unwrap();
        let start = Instant::now();
        let out = compute_spectrum_study(&cfg, None).unwrap();
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let t = &out.trials[0];
        ratios.push((t.ba.beta_operator, t.regular.beta_operator));
    }
    let hits = ratios.iter().filter(|(b, r)| *b >= 2.0 * r).count();
    let pass = hits >= 4 && slowest < 60.0;
    let detail = ratios
        .iter()
        .map(|(b, r)| format!("{b:.4}/{r:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        1,
        "spectrum dichotomy",
        pass,
        format!("beta_BA/beta_reg per seed [{detail}], {hits}/5 with ratio >= 2, slowest seed {slowest:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_sgd_ridge_crossover() {
    let start = Instant::now();
    let cfg = preset(ExperimentKind::SgdVsRidge);
    let out = compute_comparison(&cfg, None).unwrap();
    let med = |beta: f64, alg: &str| {
        out.summary
            .iter()
            .find(|s| s.value == beta && s.algorithm == alg)
            .unwrap()
            .median_delta
    };
    let (s2, r2) = (med(2.0, "sgd"), med(2.0, "ridge"));
    let (s025, r025) = (med(0.25, "sgd"), med(0.25, "ridge"));
    let secs = start.elapsed().as_secs_f64();
    let pass = s2 <= r2 && r025 <= s025 && secs < 300.0;
    report(
        2,
        "SGD/ridge crossover",
        pass,
        format!("beta=2: sgd {s2:.5} vs ridge {r2:.5}; beta=0.25: ridge {r025:.5} vs sgd {s025:.5}; {secs:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_relu_sandwich() {
    let mut rng = SplitMix64::new(3);
    let d = 50;
    let mu: Vec<f64> = (1..=d).map(|i| 1.0 / i as f64).collect();
    let spec = SpectralDecomposition::diagonal(&mu).unwrap();
    let ds = sample_from_spectrum(&spec, 1000, 1.0, 11, true).unwrap();
    assert_eq!(ds.n(), 2000);
    let gt = make_ground_truth(&spec, Alignment::Head { k: 5 }).unwrap();
    let (mut worst_low, mut worst_up) = (f64::INFINITY, f64::INFINITY);
    let mut oracle_err = 0.0f64;
    for _ in 0..200 {
        let scale = 0.1 + 3.0 * rng.next_f64();
        let theta: Vec<f64> = (0..d).map(|_| scale * rng.normal()).collect();
        let delta = excess_risk(&theta, &gt, &ds).unwrap();
        let proxy = quadratic_proxy(&theta, &gt, &ds).unwrap();
        oracle_err = oracle_err.max((delta - oracle_delta(ds.samples(), &theta, &gt.theta_star)).abs());
        worst_low = worst_low.min(delta - proxy / 8.0);
        worst_up = worst_up.min(proxy / 2.0 - delta);
    }
    let pass = worst_low >= -1e-12 && worst_up >= -1e-12 && oracle_err <= 1e-12;
    report(
        3,
        "ReLU sandwich",
        pass,
        format!("min(delta - proxy/8) = {worst_low:.3e}, min(proxy/2 - delta) = {worst_up:.3e}, oracle gap {oracle_err:.1e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_layer_stacking() {
    let mut rng = SplitMix64::new(4);
    let mut checked = 0usize;
    let mut failures = 0usize;
    for s in 0..50 {
        let d = 2 + rng.below(9);
        let mut mu: Vec<f64> = (0..d).map(|_| 0.01 + rng.next_f64()).collect();
        if s % 5 == 0 {
            mu[1] = mu[0];
        }
        let dec = SpectralDecomposition::diagonal(&mu).unwrap();
        let sorted = dec.eigenvalues();
        for i in 0..d {
            for j in 0..d {
                for l in 1..=5 {
                    checked += 1;
                    let (a, b) = stacked_ratios(&dec, i, j, l).unwrap();
                    let expect_a = (sorted[i] / sorted[j]).powi(l as i32);
                    let expect_b = (sorted[i] / sorted[j]).powi(l as i32 + 1);
                    let close = (a - expect_a).abs() <= 1e-12 * expect_a && (b - expect_b).abs() <= 1e-12 * expect_b;
                    let amp = ratio_amplification_check(&dec, i, j, l).unwrap();
                    if !close || amp != (sorted[i] > sorted[j]) {
                        failures += 1;
                    }
                }
            }
        }
    }
    let pass = failures == 0;
    report(4, "layer stacking", pass, format!("{checked} (pair, L) checks, {failures} failures"));
    assert!(pass);
}

#[test]
fn criterion_5_oversmoothing_direction() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for align in [AlignMode::Tail, AlignMode::Head] {
        let flags = PartialConfig {
            align: Some(align),
            ..Default::default()
        };
        let cfg = resolve_config(ExperimentKind::Oversmoothing, None, &flags).unwrap();
        let out = compute_oversmoothing(&cfg, None).unwrap();
        let m = out.medians(&[1, 2, 3], "sgd");
        let ok = match align {
            AlignMode::Tail => m[0] < m[1] && m[1] < m[2],
            _ => m[0] > m[1] && m[1] > m[2],
        };
        pass &= ok && out.ratio_checks.iter().all(|c| c.holds());
        lines.push(format!("{align:?}: {:.4} {:.4} {:.4}", m[0], m[1], m[2]));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 180.0;
    report(
        5,
        "over-smoothing direction",
        pass,
        format!("median SGD delta at L=1,2,3 [{}]; {secs:.1}s", lines.join("; ")),
    );
    assert!(pass);
}

#[test]
fn criterion_6_ridge_oracle() {
    let mut rng = SplitMix64::new(6);
    let mut worst = 0.0f64;
    for inst in 0..20 {
        let d = 1 + rng.below(16);
        let n = d + rng.below(64 - d + 1);
        let lambda = [0.0, 0.1, 1.0, 10.0][inst % 4];
        let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap();
        let y: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let got = ridge_fit(&x, &y, &RidgeConfig { lambda }).unwrap().theta;
        let want = oracle_ridge(&x, &y, lambda);
        let num: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = want.iter().map(|b| b * b).sum::<f64>().sqrt().max(1e-300);
        worst = worst.max(num / den);
    }
    let pass = worst <= 1e-8;
    report(6, "ridge oracle", pass, format!("max relative error {worst:.2e} over 20 instances"));
    assert!(pass);
}

#[test]
fn criterion_7_sgd_hand_step_and_convergence() {
    let hand = sgd_tail_averaged(&Matrix::from_rows(&[vec![1.0, 0.0]]), &[1.0], &SgdConfig::new(0.5, 2, 0))
        .unwrap()
        .theta;
    let d = 16;
    let spec = SpectralDecomposition::diagonal(&vec![1.0; d]).unwrap();
    let ds = sample_from_spectrum(&spec, 4096, 0.0, 7, false).unwrap();
    let gt = make_ground_truth(&spec, Alignment::Head { k: 2 }).unwrap();
    let y = responses_for(ds.samples(), &gt, 0.0, 1).unwrap();
    let gamma = 1.0 / (2.0 * covariance_trace(ds.samples()));
    let est = sgd_tail_averaged(ds.samples(), &y, &SgdConfig::new(gamma, 50 * d, 2)).unwrap();
    let d_hat = excess_risk(&est.theta, &gt, &ds).unwrap();
    let d_zero = excess_risk(&vec![0.0; d], &gt, &ds).unwrap();
    let pass = hand == vec![0.5, 0.0] && d_hat <= 1e-2 * d_zero;
    report(
        7,
        "SGD hand step and convergence",
        pass,
        format!("hand step {hand:?}; delta {d_hat:.3e} vs 1e-2 * delta(0) = {:.3e}", 1e-2 * d_zero),
    );
    assert!(pass);
}

#[test]
fn criterion_8_bound_contracts() {
    let sgd = sgd_risk_bound(
        &[1.0],
        &[1.0],
        &SgdBoundParams {
            n: 4,
            gamma: 0.5,
            sigma: 1.0,
            side: Side::Upper,
            k1: 1,
            k2: 1,
            enforce_stepsize: true,
        },
    )
    .unwrap();
    let ridge = ridge_risk_bound(
        &[1.0],
        &[1.0],
        &RidgeBoundParams {
            n: 2,
            lambda: 2.0,
            sigma: 1.0,
            side: Side::Upper,
            k: 1,
            b: 2.0,
        },
    )
    .unwrap();
    let hand_ok = (sgd.bias - 0.25 * (-4f64).exp()).abs() <= 1e-12
        && (sgd.variance - 0.5).abs() <= 1e-12
        && (ridge.bias - 1.0).abs() <= 1e-12
        && (ridge.variance - 0.5).abs() <= 1e-12;

    let mut rng = SplitMix64::new(8);
    let random_problem = |rng: &mut SplitMix64| {
        let d = 1 + rng.below(40);
        let beta = 3.0 * rng.next_f64();
        let mu: Vec<f64> = (1..=d).map(|i| (i as f64).powf(-beta)).collect();
        let c: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let n = 1 + rng.below(5000);
        let sigma = 2.0 * rng.next_f64();
        (mu, c, n, sigma)
    };
    // Upper vs lower at matched cutoffs. SGD pairs are drawn with Nγμ_1 >= 1.
    let mut order_fail = 0;
    for _ in 0..50 {
        let (mu, c, n, sigma) = random_problem(&mut rng);
        let tr: f64 = mu.iter().sum();
        let gamma = (1.0 / tr) * (0.05 + 0.95 * rng.next_f64());
        if n as f64 * gamma * mu[0] >= 1.0 {
            let base = SgdBoundParams { n, gamma, sigma, side: Side::Lower, k1: 0, k2: 0, enforce_stepsize: true };
            let lo = sgd_risk_bound(&mu, &c, &base).unwrap();
            let k = lo.cutoffs.k_star;
            let up = sgd_risk_bound(&mu, &c, &SgdBoundParams { side: Side::Upper, k1: k, k2: k, ..base }).unwrap();
            if up.total < lo.total * (1.0 - 1e-12) {
                order_fail += 1;
            }
        }
        let lambda = 10f64.powf(-1.0 + 4.0 * rng.next_f64());
        let rp = RidgeBoundParams { n, lambda, sigma, side: Side::Lower, k: 0, b: 2.0 };
        let lo = ridge_risk_bound(&mu, &c, &rp).unwrap();
        let up = ridge_risk_bound(&mu, &c, &RidgeBoundParams { side: Side::Upper, k: lo.cutoffs.k_star, ..rp }).unwrap();
        if up.bias < lo.bias || up.variance < lo.variance {
            order_fail += 1;
        }
    }
    // Finite, non-negative outputs.
    let mut bad = 0;
    for _ in 0..500 {
        let (mu, c, n, sigma) = random_problem(&mut rng);
        let d = mu.len();
        let tr: f64 = mu.iter().sum();
        let gamma = (1.0 / tr) * rng.next_f64().max(1e-6);
        let (k1, k2, k) = (rng.below(d + 1), rng.below(d + 1), rng.below(d + 1));
        let lambda = 10f64.powf(-2.0 + 5.0 * rng.next_f64());
        let profiles = [
            sgd_risk_bound(&mu, &c, &SgdBoundParams { n, gamma, sigma, side: Side::Upper, k1, k2, enforce_stepsize: true }),
            sgd_risk_bound(&mu, &c, &SgdBoundParams { n, gamma, sigma, side: Side::Lower, k1, k2, enforce_stepsize: true }),
            ridge_risk_bound(&mu, &c, &RidgeBoundParams { n, lambda, sigma, side: Side::Upper, k, b: 2.0 }),
            ridge_risk_bound(&mu, &c, &RidgeBoundParams { n, lambda, sigma, side: Side::Lower, k, b: 2.0 }),
        ];
        for p in profiles {
            match p {
                Ok(p) if p.bias.is_finite() && p.variance.is_finite() && p.bias >= 0.0 && p.variance >= 0.0 => {}
                _ => bad += 1,
            }
        }
    }
    let pass = hand_ok && order_fail == 0 && bad == 0;
    report(
        8,
        "bound evaluator contracts",
        pass,
        format!(
            "hand profiles {}; upper<lower in {order_fail}/50 configs; {bad} invalid of 2000 fuzzed profiles",
            if hand_ok { "match" } else { "differ" }
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let small = |kind| {
        let mut c = preset(kind);
        c.trials = 3;
        c.seed = 99;
        match kind {
            ExperimentKind::SpectrumStudy => {
                c.n = 60;
                c.d = 8;
                c.spectrum_head = 30;
            }
            ExperimentKind::Oversmoothing => {
                c.n = 60;
                c.d = 8;
                c.n_train = 128;
            }
            ExperimentKind::SgdVsRidge => {
                c.d = 16;
                c.n_train = 128;
                c.population = 512;
            }
            ExperimentKind::BoundsSweep => {
                c.d = 16;
                c.n_grid = vec![32, 64];
                c.population = 512;
            }
        }
        c
    };
    let mut mismatches = Vec::new();
    for kind in ExperimentKind::ALL {
        let cfg = small(kind);
        let first_dir = tmp.path().join(format!("{kind}-a"));
        let first = run_experiment(&cfg, &RunOptions { out_dir: first_dir.clone(), jobs: Some(1) }).unwrap();
        let from_manifest = PartialConfig::from_file(&first.manifest_path).unwrap();
        let replay = resolve_config(kind, Some(&from_manifest), &PartialConfig::default()).unwrap();
        let second_dir = tmp.path().join(format!("{kind}-b"));
        run_experiment(&replay, &RunOptions { out_dir: second_dir.clone(), jobs: Some(4) }).unwrap();
        for f in &first.files {
            if f.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let name = f.strip_prefix(&first_dir).unwrap();
            let a = std::fs::read(f).unwrap();
            let b = std::fs::read(second_dir.join(name)).unwrap();
            if a != b {
                mismatches.push(format!("{kind}/{}", name.display()));
            }
        }
    }
    let pass = mismatches.is_empty();
    report(
        9,
        "determinism",
        pass,
        format!("serial run vs parallel manifest replay, 4 experiments; mismatched CSVs: {mismatches:?}"),
    );
    assert!(pass);
}
