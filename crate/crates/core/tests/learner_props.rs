use proptest::prelude::*;
use srl_core::learners::{covariance_trace, ols_fit, ridge_fit, sgd_tail_averaged, RidgeConfig, Sampling, SgdConfig};
use srl_core::matrix::{norm2, Matrix};
use srl_core::rng::SplitMix64;

fn instance(seed: u64, n: usize, d: usize) -> (Matrix, Vec<f64>) {
    let mut rng = SplitMix64::new(seed);
    let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.normal()).collect()).unwrap();
    let y = (0..n).map(|_| rng.normal()).collect();
    (x, y)
}

// Normal equations by Gauss-Jordan with partial pivoting.
fn solve_normal_equations(x: &Matrix, y: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let mut a = vec![vec![0.0; d + 1]; d];
    for i in 0..d {
        for j in 0..d {
            a[i][j] = (0..x.rows()).map(|r| x[(r, i)] * x[(r, j)]).sum();
        }
        a[i][d] = (0..x.rows()).map(|r| x[(r, i)] * y[r]).sum();
    }
    for c in 0..d {
        let p = (c..d).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=d {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..d).map(|i| a[i][d] / a[i][i]).collect()
}

#[test]
fn ridge_shrinks_with_lambda() {
    for seed in 0..20 {
        let (x, y) = instance(seed, 30, 6);
        let grid = [0.0, 0.01, 0.1, 1.0, 10.0, 100.0];
        let norms: Vec<f64> = grid
            .iter()
            .map(|&lambda| norm2(&ridge_fit(&x, &y, &RidgeConfig { lambda }).unwrap().theta))
            .collect();
        assert!(norms.windows(2).all(|w| w[0] >= w[1]), "{norms:?}");
    }
}

#[test]
fn ols_matches_elimination() {
    for seed in 0..10 {
        let (x, y) = instance(100 + seed, 25, 5);
        let got = ols_fit(&x, &y).unwrap().theta;
        let want = solve_normal_equations(&x, &y);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }
}

#[test]
fn sgd_iterates_stay_finite_under_trace_stepsize() {
    for seed in 0..50 {
        let (x, y) = instance(500 + seed, 40, 8);
        let mut cfg = SgdConfig::new(1.0 / covariance_trace(&x), 400, seed);
        cfg.enforce_stepsize = true;
        let est = sgd_tail_averaged(&x, &y, &cfg).unwrap();
        assert!(est.theta.iter().all(|v| v.is_finite()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sgd_is_bitwise_deterministic(seed in any::<u64>(), half in 1usize..200, one_pass in any::<bool>()) {
        let (x, y) = instance(seed, 400, 5);
        let mut cfg = SgdConfig::new(0.5 / covariance_trace(&x), 2 * half, seed ^ 1);
        if one_pass {
            cfg.sampling = Sampling::OnePass;
        }
        let a = sgd_tail_averaged(&x, &y, &cfg).unwrap();
        let b = sgd_tail_averaged(&x, &y, &cfg).unwrap();
        prop_assert_eq!(a.theta, b.theta);
    }

    #[test]
    fn ridge_residual_contract(seed in any::<u64>(), lambda in 0.0f64..50.0) {
        let (x, y) = instance(seed, 20, 4);
        let est = ridge_fit(&x, &y, &RidgeConfig { lambda }).unwrap();
        prop_assert!(est.theta.iter().all(|v| v.is_finite()));
    }
}
