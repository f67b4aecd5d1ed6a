use proptest::prelude::*;
use srl_core::matrix::Matrix;
use srl_core::rng::SplitMix64;
use srl_core::spectral::{
    eigh_symmetric, fit_decay_rate, orthonormality_error, stack_spectrum, synthetic_spectrum, SpectralDecomposition,
};

fn random_symmetric(rng: &mut SplitMix64, d: usize) -> Matrix {
    let mut a = Matrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = rng.normal();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

#[test]
fn reconstruction_on_random_symmetric_matrices() {
    let mut rng = SplitMix64::new(17);
    for _ in 0..100 {
        let d = 1 + rng.below(32);
        let a = random_symmetric(&mut rng, d);
        let dec = eigh_symmetric(&a).unwrap();
        let diff = dec.reconstruct().add(&a.scaled(-1.0)).unwrap();
        assert!(diff.frobenius_norm() <= 1e-8 * a.frobenius_norm().max(1e-300));
        assert!(orthonormality_error(&dec) <= 1e-9);
        assert!(dec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        for k in 0..d {
            let v = dec.vector(k);
            let big = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(big >= 0.0);
        }
    }
}

#[test]
fn psd_inputs_have_nonnegative_spectrum() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..30 {
        let d = 2 + rng.below(20);
        let b = Matrix::from_vec(d + 3, d, (0..(d + 3) * d).map(|_| rng.normal()).collect()).unwrap();
        let dec = eigh_symmetric(&b.gram()).unwrap();
        assert!(dec.eigenvalues().iter().all(|&m| m >= -1e-10));
    }
}

#[test]
fn fit_recovers_listed_exponents() {
    for beta in [0.0, 0.25, 1.0, 2.0, 3.0] {
        let s = synthetic_spectrum(100, beta).unwrap();
        assert!((fit_decay_rate(&s.values, 100).unwrap() - beta).abs() <= 1e-9);
    }
    let s = synthetic_spectrum(50, 1.5).unwrap();
    assert!((fit_decay_rate(&s.values, 50).unwrap() - 1.5).abs() <= 1e-9);
}

proptest! {
    #[test]
    fn decay_spectrum_invariants(d in 1usize..200, beta in 0.0f64..4.0) {
        let s = synthetic_spectrum(d, beta).unwrap();
        prop_assert_eq!(s.values[0], 1.0);
        prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn stacking_composes(mu in prop::collection::vec(0.0f64..1.0, 1..12), a in 1usize..4, b in 1usize..4) {
        let dec = SpectralDecomposition::diagonal(&mu).unwrap();
        let direct = stack_spectrum(&dec, a * b).unwrap();
        let nested = stack_spectrum(&stack_spectrum(&dec, a).unwrap(), b).unwrap();
        for (x, y) in direct.eigenvalues().iter().zip(nested.eigenvalues()) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
        prop_assert_eq!(direct.eigenvectors(), dec.eigenvectors());
    }
}

#[test]
fn stacking_adds_exponents() {
    let dec = SpectralDecomposition::diagonal(&[0.9, 0.6, 0.2]).unwrap();
    for a in 1..4 {
        for b in 1..4 {
            let direct = stack_spectrum(&dec, a + b).unwrap();
            let ea = stack_spectrum(&dec, a).unwrap();
            for (i, x) in direct.eigenvalues().iter().enumerate() {
                let y = ea.eigenvalues()[i] * dec.eigenvalues()[i].powi(b as i32);
                assert!((x - y).abs() <= 1e-12 * x);
            }
        }
    }
}
