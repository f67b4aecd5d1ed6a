//! Symmetric eigendecomposition, the `i^{-β}` decay model, decay-rate fitting
//! and the spectrum of stacked operators.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// Eigenvalues sorted non-increasing, eigenvectors stored as the columns of a
/// `d × d` orthonormal matrix (column `i` pairs with `eigenvalues[i]`).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: Matrix,
}

impl SpectralDecomposition {
    /// Assemble from parts. Sorts by eigenvalue (stable) and applies the sign
    /// convention; does not re-check orthonormality.
    pub fn from_parts(eigenvalues: Vec<f64>, eigenvectors: Matrix) -> Result<Self> {
        let d = eigenvalues.len();
        if eigenvectors.rows() != d || eigenvectors.cols() != d {
            return Err(Error::DimensionMismatch {
                what: "eigenvector matrix size",
                expected: d,
                actual: eigenvectors.rows(),
            });
        }
        Ok(sorted_decomposition(eigenvalues, eigenvectors))
    }

    /// Decomposition with the coordinate axes as eigenvectors.
    pub fn diagonal(values: &[f64]) -> Result<Self> {
        Self::from_parts(values.to_vec(), Matrix::identity(values.len()))
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Matrix {
        &self.eigenvectors
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i)
    }

    /// Coordinates `Vᵀθ` of `theta` in the eigenbasis.
    pub fn coords(&self, theta: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.tr_matvec(theta)
    }

    /// `V c`, the vector with eigenbasis coordinates `c`.
    pub fn from_coords(&self, coords: &[f64]) -> Result<Vec<f64>> {
        self.eigenvectors.matvec(coords)
    }

    /// `V diag(μ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let d = self.dim();
        let mut out = Matrix::zeros(d, d);
        for k in 0..d {
            let mu = self.eigenvalues[k];
            if mu == 0.0 {
                continue;
            }
            for i in 0..d {
                let vik = mu * self.eigenvectors[(i, k)];
                for j in 0..d {
                    out[(i, j)] += vik * self.eigenvectors[(j, k)];
                }
            }
        }
        out
    }

    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue"])?;
        for (i, mu) in self.eigenvalues.iter().enumerate() {
            w.write_record([(i + 1).to_string(), mu.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    /// JSON `{eigenvalues: [...], vectors: [[...], ...]}`; `vectors[i]` is the
    /// eigenvector paired with `eigenvalues[i]`.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Export<'a> {
            eigenvalues: &'a [f64],
            vectors: Vec<Vec<f64>>,
        }
        let vectors = (0..self.dim()).map(|i| self.vector(i)).collect();
        Ok(serde_json::to_string(&Export {
            eigenvalues: &self.eigenvalues,
            vectors,
        })?)
    }
}

fn sorted_decomposition(values: Vec<f64>, vectors: Matrix) -> SpectralDecomposition {
    let d = values.len();
    let mut order: Vec<usize> = (0..d).collect();
    // Stable: equal eigenvalues keep their original order.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut eigenvalues = Vec::with_capacity(d);
    let mut eigenvectors = Matrix::zeros(d, d);
    for (new, &old) in order.iter().enumerate() {
        eigenvalues.push(values[old]);
        let mut col = vectors.column(old);
        // Sign convention: the largest-magnitude entry is non-negative.
        let pivot = col
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
        if pivot.1 < 0.0 {
            col.iter_mut().for_each(|x| *x = -*x);
        }
        for (i, x) in col.into_iter().enumerate() {
            eigenvectors[(i, new)] = x;
        }
    }
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_REL_TOL: f64 = 1e-12;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Early sweeps skip rotations below a threshold of `0.2·Σ|a_pq| / d²`; later
/// sweeps rotate every non-negligible entry. Iterates until the off-diagonal
/// Frobenius norm drops below `1e-12·‖a‖_F` (at most 100 sweeps).
pub fn eigh_symmetric(a: &Matrix) -> Result<SpectralDecomposition> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            what: "eigh requires a square matrix",
            expected: a.rows(),
            actual: a.cols(),
        });
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::invalid("eigh of an empty matrix"));
    }
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOLERANCE * a.max_abs().max(1.0) {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }

    // Work on the upper triangle; the diagonal lives in `d`.
    let mut w = a.clone();
    let mut v = Matrix::identity(n);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let target = JACOBI_REL_TOL * a.frobenius_norm();

    let mut converged = false;
    for sweep in 1..=JACOBI_MAX_SWEEPS {
        let mut off_sq = 0.0;
        let mut off_abs = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                let x = w[(p, q)];
                off_sq += x * x;
                off_abs += x.abs();
            }
        }
        if (2.0 * off_sq).sqrt() <= target || off_abs == 0.0 {
            converged = true;
            break;
        }
        let thresh = if sweep < 4 {
            0.2 * off_abs / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = w[(p, q)];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    w[(p, q)] = 0.0;
                    continue;
                }
                if apq.abs() <= thresh || apq == 0.0 {
                    continue;
                }
                let h = d[q] - d[p];
                let t = if h.abs() + g == h.abs() {
                    apq / h
                } else {
                    let theta = 0.5 * h / apq;
                    let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                let h = t * apq;
                z[p] -= h;
                z[q] += h;
                d[p] -= h;
                d[q] += h;
                w[(p, q)] = 0.0;
                let rot = |m: &mut Matrix, i: usize, j: usize, k: usize, l: usize| {
                    let g = m[(i, j)];
                    let h = m[(k, l)];
                    m[(i, j)] = g - s * (h + g * tau);
                    m[(k, l)] = h + s * (g - h * tau);
                };
                for j in 0..p {
                    rot(&mut w, j, p, j, q);
                }
                for j in (p + 1)..q {
                    rot(&mut w, p, j, j, q);
                }
                for j in (q + 1)..n {
                    rot(&mut w, p, j, q, j);
                }
                for j in 0..n {
                    rot(&mut v, j, p, j, q);
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }
    Ok(sorted_decomposition(d, v))
}

/// The decay model `μ_i = i^{-β}`, `i = 1..=d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySpectrum {
    pub dim: usize,
    pub beta: f64,
    pub values: Vec<f64>,
}

impl DecaySpectrum {
    /// Decomposition with these eigenvalues on the coordinate axes.
    pub fn to_decomposition(&self) -> SpectralDecomposition {
        SpectralDecomposition {
            eigenvalues: self.values.clone(),
            eigenvectors: Matrix::identity(self.dim),
        }
    }
}

pub fn synthetic_spectrum(d: usize, beta: f64) -> Result<DecaySpectrum> {
    if d == 0 {
        return Err(Error::invalid("spectrum dimension must be >= 1"));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("decay exponent beta={beta} must be finite and >= 0")));
    }
    let values = (1..=d).map(|i| (i as f64).powf(-beta)).collect();
    Ok(DecaySpectrum {
        dim: d,
        beta,
        values,
    })
}

pub const DEFAULT_FIT_HEAD: usize = 100;

/// Negated least-squares slope of `ln μ_i` against `ln i` over the first
/// `head` values.
pub fn fit_decay_rate(values: &[f64], head: usize) -> Result<f64> {
    if head < 2 {
        return Err(Error::invalid("decay fit needs head >= 2"));
    }
    if head > values.len() {
        return Err(Error::invalid(format!(
            "decay fit head {head} exceeds spectrum length {}",
            values.len()
        )));
    }
    if let Some((i, v)) = values[..head].iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::invalid(format!(
            "eigenvalue {} = {v} is not positive inside the fit window",
            i + 1
        )));
    }
    let xs: Vec<f64> = (1..=head).map(|i| (i as f64).ln()).collect();
    let ys: Vec<f64> = values[..head].iter().map(|v| v.ln()).collect();
    let n = head as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(-sxy / sxx)
}

/// Spectrum of the `layers`-fold product of the operator: same eigenvectors,
/// eigenvalues raised to the `layers`-th power (re-sorted if negative
/// eigenvalues change the order).
pub fn stack_spectrum(dec: &SpectralDecomposition, layers: usize) -> Result<SpectralDecomposition> {
    if layers == 0 {
        return Err(Error::invalid("layer count must be >= 1"));
    }
    let values = dec
        .eigenvalues
        .iter()
        .map(|mu| mu.powi(layers as i32))
        .collect();
    Ok(sorted_decomposition(values, dec.eigenvectors.clone()))
}

/// Whether stacking one more layer strictly increases the ratio
/// `μ_i / μ_j` (indices are 0-based positions in `dec`).
pub fn ratio_amplification_check(
    dec: &SpectralDecomposition,
    i: usize,
    j: usize,
    layers: usize,
) -> Result<bool> {
    let (now, next) = stacked_ratios(dec, i, j, layers)?;
    Ok(next > now)
}

/// The eigenvalue ratios `μ_i(Ĝ(L)) / μ_j(Ĝ(L))` and the same for `L + 1`.
pub fn stacked_ratios(
    dec: &SpectralDecomposition,
    i: usize,
    j: usize,
    layers: usize,
) -> Result<(f64, f64)> {
    if layers == 0 {
        return Err(Error::invalid("layer count must be >= 1"));
    }
    let d = dec.dim();
    if i >= d || j >= d {
        return Err(Error::invalid(format!("eigen index out of range for dimension {d}")));
    }
    let (mi, mj) = (dec.eigenvalues[i], dec.eigenvalues[j]);
    if !(mi > 0.0 && mj > 0.0) {
        return Err(Error::invalid(format!(
            "ratio check needs positive eigenvalues, got {mi} and {mj}"
        )));
    }
    let l = layers as i32;
    Ok((mi.powi(l) / mj.powi(l), mi.powi(l + 1) / mj.powi(l + 1)))
}

/// Coefficient of variation of the first `head` values.
pub fn coefficient_of_variation(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Spearman rank correlation (average ranks for ties).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(x: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..x.len()).collect();
        idx.sort_by(|&p, &q| x[p].total_cmp(&x[q]));
        let mut r = vec![0.0; x.len()];
        let mut k = 0;
        while k < idx.len() {
            let mut e = k;
            while e + 1 < idx.len() && x[idx[e + 1]] == x[idx[k]] {
                e += 1;
            }
            let avg = (k + e) as f64 / 2.0 + 1.0;
            for &i in &idx[k..=e] {
                r[i] = avg;
            }
            k = e + 1;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return if va == vb { 1.0 } else { 0.0 };
    }
    cov / (va * vb).sqrt()
}

/// `‖V Vᵀ − I‖_F`.
pub fn orthonormality_error(dec: &SpectralDecomposition) -> f64 {
    let v = &dec.eigenvectors;
    let d = v.rows();
    let mut err = 0.0;
    for i in 0..d {
        for j in 0..d {
            let x = dot(v.row(i), v.row(j)) - if i == j { 1.0 } else { 0.0 };
            err += x * x;
        }
    }
    err.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_spectrum() {
        let dec = eigh_symmetric(&Matrix::identity(3)).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_input() {
        let dec = eigh_symmetric(&Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]])).unwrap();
        assert_eq!(dec.eigenvalues(), &[2.0, 1.0]);
        assert_eq!(dec.eigenvectors(), &Matrix::identity(2));
    }

    #[test]
    fn swap_matrix() {
        let dec = eigh_symmetric(&Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(dec.eigenvalues()[0], 1.0, 1e-14));
        assert!(close(dec.eigenvalues()[1], -1.0, 1e-14));
        let v1 = dec.vector(0);
        let v2 = dec.vector(1);
        assert!(close(v1[0], r, 1e-14) && close(v1[1], r, 1e-14));
        // (1, -1)/√2 up to the sign convention: first entry wins the tie.
        assert!(close(v2[0], r, 1e-14) && close(v2[1], -r, 1e-14));
    }

    #[test]
    fn rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]);
        assert!(matches!(eigh_symmetric(&a), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn one_by_one_and_zero() {
        let dec = eigh_symmetric(&Matrix::from_rows(&[vec![-3.5]])).unwrap();
        assert_eq!(dec.eigenvalues(), &[-3.5]);
        let dec = eigh_symmetric(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(dec.eigenvalues(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn synthetic_spectrum_values() {
        let s = synthetic_spectrum(4, 1.0).unwrap();
        assert_eq!(s.values, vec![1.0, 0.5, 1.0 / 3.0, 0.25]);
        assert_eq!(synthetic_spectrum(3, 0.0).unwrap().values, vec![1.0; 3]);
        let s = synthetic_spectrum(3, 2.0).unwrap();
        assert_eq!(s.values, vec![1.0, 0.25, 1.0 / 9.0]);
        assert!(synthetic_spectrum(3, -0.5).is_err());
    }

    #[test]
    fn fit_recovers_exponent() {
        for beta in [0.0, 0.25, 1.0, 1.5, 2.0, 3.0] {
            let s = synthetic_spectrum(50, beta).unwrap();
            let b = fit_decay_rate(&s.values, 50).unwrap();
            assert!(close(b, beta, 1e-9), "{beta} -> {b}");
        }
        assert!(close(fit_decay_rate(&[1.0; 10], 10).unwrap(), 0.0, 1e-12));
    }

    #[test]
    fn fit_rejects_nonpositive_and_short() {
        assert!(fit_decay_rate(&[1.0, 0.0, 0.5], 3).is_err());
        assert!(fit_decay_rate(&[1.0, 0.5], 1).is_err());
        assert!(fit_decay_rate(&[1.0, 0.5], 3).is_err());
    }

    #[test]
    fn stacking_examples() {
        let dec = SpectralDecomposition::diagonal(&[0.9, 0.3]).unwrap();
        let st = stack_spectrum(&dec, 2).unwrap();
        assert!(close(st.eigenvalues()[0], 0.81, 1e-15));
        assert!(close(st.eigenvalues()[1], 0.09, 1e-15));
        assert_eq!(stack_spectrum(&dec, 1).unwrap(), dec);
        assert!(stack_spectrum(&dec, 0).is_err());
    }

    #[test]
    fn ratio_checks() {
        let dec = SpectralDecomposition::diagonal(&[0.8, 0.2]).unwrap();
        assert!(ratio_amplification_check(&dec, 0, 1, 1).unwrap());
        let (a, b) = stacked_ratios(&dec, 0, 1, 1).unwrap();
        assert!(close(a, 4.0, 1e-12) && close(b, 16.0, 1e-12));

        let eq = SpectralDecomposition::diagonal(&[0.5, 0.5]).unwrap();
        for l in 1..6 {
            assert!(!ratio_amplification_check(&eq, 0, 1, l).unwrap());
        }

        let dec = SpectralDecomposition::diagonal(&[0.9, 0.5, 0.1]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for l in 1..=5 {
                    let got = ratio_amplification_check(&dec, i, j, l).unwrap();
                    assert_eq!(got, dec.eigenvalues()[i] > dec.eigenvalues()[j]);
                }
            }
        }

        let zero = SpectralDecomposition::diagonal(&[1.0, 0.0]).unwrap();
        assert!(ratio_amplification_check(&zero, 0, 1, 1).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!(close(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0, 1e-15));
        assert!(close(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0, 1e-15));
    }

    #[test]
    fn exports() {
        let dec = SpectralDecomposition::diagonal(&[2.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        dec.write_spectrum_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,eigenvalue\n1,2\n2,1\n");
        assert_eq!(
            dec.to_json().unwrap(),
            r#"{"eigenvalues":[2.0,1.0],"vectors":[[1.0,0.0],[0.0,1.0]]}"#
        );
    }
}
