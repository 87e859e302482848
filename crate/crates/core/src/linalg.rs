//! Dense linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QsdError, Result};

/// All eigenvalues of a general real matrix, sorted by real part then imaginary part.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 200 * n.max(10))
        .ok_or_else(|| QsdError::SolverDivergence("Schur iteration did not converge".into()))?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().map(|c| Complex64::new(c.re, c.im)).collect();
    sort_complex(&mut ev);
    Ok(ev)
}

pub fn sort_complex(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
pub fn symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Inverse iteration for an eigenvector of `a` at (approximately) `shift`.
pub fn inverse_iteration(a: &DMatrix<f64>, shift: f64, iters: usize) -> Result<DVector<f64>> {
    let n = a.nrows();
    let scale = a.amax().max(1.0);
    let mut x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    for attempt in 0..4 {
        let delta = if attempt == 0 { 0.0 } else { 1e-14 * 10f64.powi(attempt) * scale };
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] -= shift + delta;
        }
        let lu = shifted.lu();
        let mut ok = true;
        for _ in 0..iters {
            match lu.solve(&x) {
                Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => {
                    x = &y / y.norm();
                }
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(x);
        }
        x = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    }
    Err(QsdError::SolverDivergence("inverse iteration failed".into()))
}

/// Flips `v` so its entry of largest modulus is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let i = v.iamax();
    if v[i] < 0.0 {
        v.neg_mut();
    }
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn min_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn max_of(v: &[f64]) -> f64 {
    v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// `exp(m)` by scaling and squaring with a Padé approximant.
pub fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.exp()
}

/// Row vector times matrix.
pub fn vec_mat(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.ncols();
    (0..n).map(|j| v.iter().enumerate().map(|(i, vi)| vi * m[(i, j)]).sum()).collect()
}

/// Greedy matching of two multisets of complex numbers; returns the largest
/// distance between matched pairs.
pub fn multiset_defect(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for x in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, y)| (j, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .expect("same length");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn eigenvalues_of_rotation() {
        let ev = eigenvalues(&dmatrix![0.0, -1.0; 1.0, 0.0]).unwrap();
        assert!((ev[0] - Complex64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn expm_of_diagonal() {
        let e = expm(&dmatrix![1.0, 0.0; 0.0, -2.0]);
        assert!((e[(0, 0)] - 1f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)] - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn inverse_iteration_finds_eigenvector() {
        let a = dmatrix![2.0, 1.0; 1.0, 2.0];
        let v = inverse_iteration(&a, 3.0, 3).unwrap();
        assert!((v[0].abs() - v[1].abs()).abs() < 1e-12);
    }

    #[test]
    fn multiset_matching() {
        let a = [Complex64::new(1.0, 0.0), Complex64::new(2.0, 1.0)];
        let b = [Complex64::new(2.0, 1.0 + 1e-9), Complex64::new(1.0, 0.0)];
        assert!(multiset_defect(&a, &b) < 2e-9);
    }
}
