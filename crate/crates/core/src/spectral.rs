//! Perron–Frobenius and Dirichlet eigendata of absorbing chains.
//!
//! For a continuous chain the sub-Markovian generator `L - V` has a simple
//! real eigenvalue `-λ₁` of largest real part, with a positive right
//! eigenvector `φ` and a positive left eigenvector proportional to the
//! quasi-stationary distribution `ν`. Normalizations:
//!
//! * `η[φ²] = 1`, where `η` is the invariant law of `L`;
//! * `φ* = ν / η`, so that `η[φ*] = 1`.
//!
//! For a discrete chain the same roles are played by the Perron root `β` of
//! `Q`, its right eigenvector `φ` (normalized by `ν[φ] = 1`) and its left
//! eigenvector `ψ` (stored in `phi_star`, normalized to sum to one, so that it
//! coincides with `ν`). `λ₁` is then `1 - β`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::chain::{AbsorbingChain, ContinuousChain, DiscreteChain, ProbDist};
use crate::error::{QsdError, Result};
use crate::linalg;

/// Residual tolerance used to accept eigenvectors.
pub const DEFAULT_EIGEN_TOL: f64 = 1e-9;
/// Detailed balance tolerance.
pub const REVERSIBILITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    Continuous,
    Discrete,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub kind: TimeKind,
    /// `λ₁` (for discrete chains `1 - β`).
    pub lambda1: f64,
    /// Perron root of `Q`; `None` for continuous chains.
    pub beta: Option<f64>,
    pub phi: DVector<f64>,
    /// `φ*` for continuous chains, `ψ` (summing to one) for discrete ones.
    pub phi_star: DVector<f64>,
    /// Invariant law of `L`; not defined for discrete chains.
    pub eta: Option<ProbDist>,
    pub nu: ProbDist,
    /// `φ∨ / φ∧`.
    pub ratio: f64,
    /// Whether `η` is reversible for `L` (continuous chains only).
    pub reversible: bool,
}

impl PerronData {
    pub fn phi_min(&self) -> f64 {
        self.phi.min()
    }
    pub fn phi_max(&self) -> f64 {
        self.phi.max()
    }

    /// The invariant law of `L`; panics on discrete data.
    pub fn eta(&self) -> &ProbDist {
        self.eta.as_ref().expect("η is only defined for continuous chains")
    }

    /// `η[φ φ*]` (continuous chains).
    pub fn eta_phi_phistar(&self) -> f64 {
        let eta = self.eta();
        (0..self.phi.len()).map(|x| self.phi[x] * self.phi_star[x] * eta.weights()[x]).sum()
    }

    /// `(φ φ* η)∧`.
    pub fn min_phi_phistar_eta(&self) -> f64 {
        let eta = self.eta();
        (0..self.phi.len()).map(|x| self.phi[x] * self.phi_star[x] * eta.weights()[x]).fold(f64::INFINITY, f64::min)
    }

    /// `(φ² η)∧`.
    pub fn min_phi2_eta(&self) -> f64 {
        let eta = self.eta();
        (0..self.phi.len()).map(|x| self.phi[x] * self.phi[x] * eta.weights()[x]).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpectrum {
    /// Spectrum of `V - L` (or `I - Q`), sorted by real part.
    pub eigenvalues: Vec<Complex64>,
    pub reversible: bool,
    /// Second Dirichlet eigenvalue, reversible case only.
    pub lambda2: Option<f64>,
}

impl DirichletSpectrum {
    pub fn lambda1(&self) -> f64 {
        self.eigenvalues[0].re
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|c| c.re).collect()
    }
}

/// Invariant probability of the Markov generator `L`.
pub fn invariant_measure(chain: &ContinuousChain) -> Result<ProbDist> {
    if !chain.is_irreducible() {
        return Err(QsdError::NotIrreducible);
    }
    invariant_of_generator(chain.rates())
}

/// Solves `η G = 0`, `Σ η = 1` for an irreducible generator `G`.
pub fn invariant_of_generator(g: &DMatrix<f64>) -> Result<ProbDist> {
    let n = g.nrows();
    if n == 1 {
        return Ok(ProbDist::dirac(1, 0));
    }
    if let Some(eta) = detailed_balance_measure(g) {
        return Ok(eta);
    }
    // Gᵀ ηᵀ = 0 with the last equation replaced by the normalization.
    let mut a = g.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let eta = a.lu().solve(&b).ok_or(QsdError::NotIrreducible)?;
    if eta.iter().any(|&e| !(e > 0.0)) {
        return Err(QsdError::NotIrreducible);
    }
    ProbDist::from_unnormalized(eta.as_slice())
}

/// The reversing law built by detailed balance along a spanning tree, when one
/// exists.
///
/// Unlike the linear solve this keeps full relative accuracy in states whose
/// weight is many orders of magnitude below the largest one.
fn detailed_balance_measure(g: &DMatrix<f64>) -> Option<ProbDist> {
    let n = g.nrows();
    let mut w = vec![0.0; n];
    w[0] = 1.0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut seen = vec![false; n];
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for y in 0..n {
            if y != x && !seen[y] && g[(x, y)] > 0.0 {
                if !(g[(y, x)] > 0.0) {
                    return None;
                }
                w[y] = w[x] * g[(x, y)] / g[(y, x)];
                seen[y] = true;
                queue.push_back(y);
            }
        }
    }
    if seen.iter().any(|s| !s) || w.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    for x in 0..n {
        for y in (x + 1)..n {
            let (a, b) = (w[x] * g[(x, y)], w[y] * g[(y, x)]);
            if (a - b).abs() > 1e-12 * a.max(b) {
                return None;
            }
        }
    }
    ProbDist::from_unnormalized(&w).ok()
}

/// Detailed balance `η(x)L(x,y) = η(y)L(y,x)` within [`REVERSIBILITY_TOL`].
pub fn check_reversible(chain: &ContinuousChain, eta: &ProbDist) -> bool {
    reversibility_defect(chain.rates(), eta) <= REVERSIBILITY_TOL
}

pub fn reversibility_defect(g: &DMatrix<f64>, m: &ProbDist) -> f64 {
    let n = g.nrows();
    let w = m.weights();
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in (x + 1)..n {
            worst = worst.max((w[x] * g[(x, y)] - w[y] * g[(y, x)]).abs());
        }
    }
    worst
}

pub fn perron(chain: &AbsorbingChain) -> Result<PerronData> {
    perron_with_tol(chain, DEFAULT_EIGEN_TOL)
}

pub fn perron_with_tol(chain: &AbsorbingChain, tol: f64) -> Result<PerronData> {
    match chain {
        AbsorbingChain::Continuous(c) => perron_continuous(c, tol),
        AbsorbingChain::Discrete(d) => perron_discrete(d, tol),
    }
}

fn positive_or_fail(v: &mut DVector<f64>, what: &str) -> Result<()> {
    linalg::fix_sign(v);
    let scale = v.amax();
    if v.iter().any(|&x| !(x > 1e-14 * scale)) {
        return Err(QsdError::PerronFailure(format!("{what} has non-positive entries")));
    }
    Ok(())
}

pub fn perron_continuous(chain: &ContinuousChain, tol: f64) -> Result<PerronData> {
    let eta = invariant_measure(chain)?;
    let reversible = check_reversible(chain, &eta);
    let a = chain.sub_generator();
    let n = chain.n();

    let (lambda1, mut phi, mut left) = if reversible {
        let sq: Vec<f64> = eta.weights().iter().map(|e| e.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| sq[i] * a[(i, j)] / sq[j]);
        let (values, vectors) = linalg::symmetric_eigen(&s);
        let u = vectors.column(n - 1).into_owned();
        let phi = DVector::from_fn(n, |i, _| u[i] / sq[i]);
        let left = DVector::from_fn(n, |i, _| u[i] * sq[i]);
        (-values[n - 1], phi, left)
    } else {
        let ev = linalg::eigenvalues(&a)?;
        let top = ev[n - 1];
        let shift = top.re;
        let mut phi = linalg::inverse_iteration(&a, shift, 3)?;
        let mut left = linalg::inverse_iteration(&a.transpose(), shift, 3)?;
        linalg::fix_sign(&mut phi);
        linalg::fix_sign(&mut left);
        // Rayleigh quotient with the left vector, then one more sweep.
        let rq = left.dot(&(&a * &phi)) / left.dot(&phi);
        phi = linalg::inverse_iteration(&a, rq, 2)?;
        left = linalg::inverse_iteration(&a.transpose(), rq, 2)?;
        linalg::fix_sign(&mut phi);
        linalg::fix_sign(&mut left);
        let rq = left.dot(&(&a * &phi)) / left.dot(&phi);
        (-rq, phi, left)
    };

    positive_or_fail(&mut phi, "right eigenvector φ")?;
    positive_or_fail(&mut left, "left eigenvector ν")?;

    let nu = ProbDist::from_unnormalized(left.as_slice())?;
    let phi_star = DVector::from_fn(n, |i, _| nu.weights()[i] / eta.weights()[i]);
    let norm2: f64 = (0..n).map(|i| phi[i] * phi[i] * eta.weights()[i]).sum();
    phi /= norm2.sqrt();

    let scale = a.amax().max(1.0);
    let resid = linalg::max_abs((&a * &phi + &phi * lambda1).iter().copied());
    if resid > tol * phi.amax() * scale {
        return Err(QsdError::PerronMismatch(resid));
    }
    let nu_row = DVector::from_column_slice(nu.weights());
    let lresid = linalg::max_abs((a.transpose() * &nu_row + &nu_row * lambda1).iter().copied());
    if lresid > tol * scale {
        return Err(QsdError::PerronMismatch(lresid));
    }

    let ratio = phi.max() / phi.min();
    Ok(PerronData {
        kind: TimeKind::Continuous,
        lambda1,
        beta: None,
        phi,
        phi_star,
        eta: Some(eta),
        nu,
        ratio,
        reversible,
    })
}

/// Right and left Perron vectors of a nonnegative matrix at root `beta`.
fn perron_vectors(q: &DMatrix<f64>, beta: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let mut phi = linalg::inverse_iteration(q, beta, 3)?;
    let mut psi = linalg::inverse_iteration(&q.transpose(), beta, 3)?;
    linalg::fix_sign(&mut phi);
    linalg::fix_sign(&mut psi);
    Ok((phi, psi))
}

fn perron_root(q: &DMatrix<f64>) -> Result<f64> {
    let ev = linalg::eigenvalues(q)?;
    Ok(ev[ev.len() - 1].re)
}

pub fn perron_discrete(chain: &DiscreteChain, tol: f64) -> Result<PerronData> {
    let q = chain.sub();
    let n = chain.n();
    let beta0 = perron_root(q)?;
    if !(beta0 > 0.0) {
        return Err(QsdError::PerronFailure(format!("Perron root {beta0} is not positive")));
    }

    let (beta, mut phi, mut psi) = if chain.is_irreducible() {
        let (phi, psi) = perron_vectors(q, beta0)?;
        (beta0, phi, psi)
    } else {
        // Regularize towards the uniform kernel and extrapolate ε → 0.
        let regularized = |eps: f64| -> Result<(f64, DVector<f64>, DVector<f64>)> {
            let qe = q * (1.0 - eps) + DMatrix::from_element(n, n, eps / n as f64);
            let b = perron_root(&qe)?;
            let (mut phi, mut psi) = perron_vectors(&qe, b)?;
            phi /= phi.sum();
            psi /= psi.sum();
            Ok((b, phi, psi))
        };
        let (e1, e2) = (1e-6, 1e-8);
        let (b1, phi1, psi1) = regularized(e1)?;
        let (b2, phi2, psi2) = regularized(e2)?;
        let w = e2 / (e1 - e2);
        let beta = b2 + (b2 - b1) * w;
        let phi = &phi2 + (&phi2 - &phi1) * w;
        let psi = &psi2 + (&psi2 - &psi1) * w;
        // Polish on the original matrix, starting from the extrapolated vectors.
        let polish = |m: &DMatrix<f64>, start: DVector<f64>| -> DVector<f64> {
            let mut shifted = m.clone();
            for i in 0..n {
                shifted[(i, i)] -= beta0;
            }
            match shifted.lu().solve(&start) {
                Some(y) if y.iter().all(|v| v.is_finite()) && y.norm() > 0.0 => y,
                _ => start,
            }
        };
        let phi_p = polish(q, phi.clone());
        let psi_p = polish(&q.transpose(), psi.clone());
        let resid = |m: &DMatrix<f64>, v: &DVector<f64>, b: f64| {
            let v = v / v.amax();
            linalg::max_abs((m * &v - &v * b).iter().copied())
        };
        let phi = if resid(q, &phi_p, beta0) < resid(q, &phi, beta) { phi_p } else { phi };
        let psi = if resid(&q.transpose(), &psi_p, beta0) < resid(&q.transpose(), &psi, beta) { psi_p } else { psi };
        let _ = beta;
        (beta0, phi, psi)
    };

    linalg::fix_sign(&mut phi);
    linalg::fix_sign(&mut psi);
    positive_or_fail(&mut phi, "right eigenvector φ")?;
    // ψ may vanish on transient parts of a reducible Q.
    let pscale = psi.amax();
    for v in psi.iter_mut() {
        if v.abs() <= 1e-9 * pscale {
            *v = 0.0;
        } else if *v < 0.0 {
            return Err(QsdError::PerronFailure("left eigenvector ψ has negative entries".into()));
        }
    }

    psi /= psi.sum();
    let nu = ProbDist::from_unnormalized(psi.as_slice())?;
    let nphi: f64 = nu.expect(phi.as_slice());
    phi /= nphi;

    let r1 = linalg::max_abs((q * &phi - &phi * beta).iter().copied()) / phi.amax();
    let r2 = linalg::max_abs((q.transpose() * &psi - &psi * beta).iter().copied()) / psi.amax();
    if r1 > tol || r2 > tol {
        return Err(QsdError::PerronMismatch(r1.max(r2)));
    }

    let ratio = phi.max() / phi.min();
    Ok(PerronData {
        kind: TimeKind::Discrete,
        lambda1: 1.0 - beta,
        beta: Some(beta),
        phi,
        phi_star: psi,
        eta: None,
        nu,
        ratio,
        reversible: false,
    })
}

/// Full Dirichlet spectrum: eigenvalues of `V - L`, or of `I - Q`.
pub fn dirichlet_spectrum(chain: &AbsorbingChain) -> Result<DirichletSpectrum> {
    match chain {
        AbsorbingChain::Continuous(c) => {
            let neg = -c.sub_generator();
            let eta = if c.is_irreducible() { invariant_measure(c).ok() } else { None };
            match eta.filter(|e| check_reversible(c, e)) {
                Some(eta) => {
                    let n = c.n();
                    let sq: Vec<f64> = eta.weights().iter().map(|e| e.sqrt()).collect();
                    let s = DMatrix::from_fn(n, n, |i, j| sq[i] * neg[(i, j)] / sq[j]);
                    let (values, _) = linalg::symmetric_eigen(&s);
                    let lambda2 = values.get(1).copied();
                    Ok(DirichletSpectrum {
                        eigenvalues: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
                        reversible: true,
                        lambda2,
                    })
                }
                None => Ok(DirichletSpectrum { eigenvalues: linalg::eigenvalues(&neg)?, reversible: false, lambda2: None }),
            }
        }
        AbsorbingChain::Discrete(d) => {
            let n = d.n();
            let m = DMatrix::identity(n, n) - d.sub();
            let reversible = d.is_irreducible() && {
                let emb = d.embedded_continuous();
                invariant_measure(&emb).map(|e| check_reversible(&emb, &e)).unwrap_or(false)
            };
            if reversible {
                let emb = d.embedded_continuous();
                let eta = invariant_measure(&emb)?;
                let sq: Vec<f64> = eta.weights().iter().map(|e| e.sqrt()).collect();
                let s = DMatrix::from_fn(n, n, |i, j| sq[i] * m[(i, j)] / sq[j]);
                let (values, _) = linalg::symmetric_eigen(&s);
                let lambda2 = values.get(1).copied();
                Ok(DirichletSpectrum {
                    eigenvalues: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
                    reversible: true,
                    lambda2,
                })
            } else {
                Ok(DirichletSpectrum { eigenvalues: linalg::eigenvalues(&m)?, reversible: false, lambda2: None })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::StateSpace;
    use nalgebra::dmatrix;
    use std::f64::consts::PI;

    fn two_point() -> AbsorbingChain {
        ContinuousChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![-1.0, 1.0; 1.0, -1.0],
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap()
        .into()
    }

    /// Edge rates 1 except L(N, N-1) = 2, killing 1 at state 1.
    fn bd_uniform(n: usize) -> ContinuousChain {
        let mut l = DMatrix::zeros(n, n);
        for x in 0..n - 1 {
            l[(x, x + 1)] = 1.0;
            l[(x + 1, x)] = 1.0;
        }
        l[(n - 1, n - 2)] = 2.0;
        let mut v = DVector::zeros(n);
        v[0] = 1.0;
        ContinuousChain::new(StateSpace::numbered(1, n), l, v).unwrap()
    }

    #[test]
    fn two_point_perron() {
        let p = perron(&two_point()).unwrap();
        assert!((p.lambda1 - 1.0).abs() < 1e-12);
        assert!((p.phi[0] - 1.0).abs() < 1e-12 && (p.phi[1] - 1.0).abs() < 1e-12);
        assert!((p.nu.weights()[0] - 0.5).abs() < 1e-12);
        assert!((p.eta().weights()[1] - 0.5).abs() < 1e-12);
        assert!(p.reversible);
    }

    #[test]
    fn bd_uniform_closed_forms() {
        for n in [2usize, 3, 5, 8] {
            let c = bd_uniform(n);
            // reversible law: uniform with half weight on the reflecting end
            let eta = invariant_measure(&c).unwrap();
            let z = n as f64 - 0.5;
            for (i, &e) in eta.weights().iter().enumerate() {
                let expected = if i == n - 1 { 0.5 / z } else { 1.0 / z };
                assert!((e - expected).abs() < 1e-12);
            }
            let p = perron_continuous(&c, DEFAULT_EIGEN_TOL).unwrap();
            let expected = 2.0 * (1.0 - (PI / (2.0 * n as f64)).cos());
            assert!((p.lambda1 - expected).abs() < 1e-12, "n={n}");
            // φ ∝ sin(πx/2N)
            for x in 1..=n {
                let s = (PI * x as f64 / (2.0 * n as f64)).sin();
                let ratio = p.phi[x - 1] / s;
                let r0 = p.phi[n - 1];
                assert!((ratio - r0).abs() < 1e-10);
            }
            // normalizations
            let e2: f64 = (0..n).map(|i| p.phi[i] * p.phi[i] * eta.weights()[i]).sum();
            assert!((e2 - 1.0).abs() < 1e-9);
            assert!((eta.expect(p.phi_star.as_slice()) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn n2_spectrum() {
        let s = dirichlet_spectrum(&bd_uniform(2).into()).unwrap();
        assert!(s.reversible);
        let r2 = 2f64.sqrt();
        assert!((s.eigenvalues[0].re - (2.0 - r2)).abs() < 1e-12);
        assert!((s.eigenvalues[1].re - (2.0 + r2)).abs() < 1e-12);
        assert_eq!(s.lambda2, Some(s.eigenvalues[1].re));
    }

    #[test]
    fn left_eigen_relation_holds_nonreversible() {
        // Directed 3-cycle with killing at 0.
        let l = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 1.0, 0.0, 0.0];
        let mut v = DVector::zeros(3);
        v[0] = 1.0;
        let c = ContinuousChain::new(StateSpace::numbered(0, 3), l, v).unwrap();
        let p = perron_continuous(&c, DEFAULT_EIGEN_TOL).unwrap();
        assert!(!p.reversible);
        let a = c.sub_generator();
        let nu = DVector::from_column_slice(p.nu.weights());
        let res = a.transpose() * &nu + &nu * p.lambda1;
        assert!(res.amax() < 1e-9);
        // real root of X^3 + X^2 - 1 by bisection
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) + mid.powi(2) - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((p.lambda1 - (1.0 - lo)).abs() < 1e-12);
    }

    #[test]
    fn non_absorbing_degenerates() {
        let c = ContinuousChain::new(
            StateSpace::numbered(1, 3),
            dmatrix![0.0, 2.0, 1.0; 1.0, 0.0, 1.0; 3.0, 1.0, 0.0],
            DVector::zeros(3),
        )
        .unwrap();
        let p = perron_continuous(&c, DEFAULT_EIGEN_TOL).unwrap();
        assert!(p.lambda1.abs() < 1e-12);
        assert!((p.ratio - 1.0).abs() < 1e-10);
        for i in 0..3 {
            assert!((p.nu.weights()[i] - p.eta().weights()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn reducible_continuous_rejected() {
        let c = ContinuousChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![0.0, 1.0; 0.0, 0.0],
            DVector::from_vec(vec![0.0, 1.0]),
        )
        .unwrap();
        assert_eq!(perron(&c.into()).unwrap_err(), QsdError::NotIrreducible);
    }

    #[test]
    fn discrete_matches_embedded_continuous() {
        let d = DiscreteChain::new(
            StateSpace::numbered(1, 3),
            dmatrix![0.2, 0.3, 0.1; 0.0, 0.5, 0.4; 0.6, 0.1, 0.3],
            DVector::from_vec(vec![0.4, 0.1, 0.0]),
        )
        .unwrap();
        let pd = perron(&d.clone().into()).unwrap();
        let pc = perron(&d.embedded_continuous().into()).unwrap();
        assert!((pd.lambda1 - pc.lambda1).abs() < 1e-9);
        assert!((1.0 - pd.beta.unwrap() - pd.lambda1).abs() < 1e-15);
    }

    #[test]
    fn intro_walk_two_states() {
        let d = DiscreteChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![0.0, 0.5; 0.5, 0.5],
            DVector::from_vec(vec![0.5, 0.0]),
        )
        .unwrap();
        let p = perron(&d.into()).unwrap();
        assert!((p.beta.unwrap() - (PI / 5.0).cos()).abs() < 1e-12);
    }

    #[test]
    fn reversibility_checks() {
        let c = bd_uniform(4);
        let eta = invariant_measure(&c).unwrap();
        assert!(check_reversible(&c, &eta));
        let l = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 1.0, 0.0, 0.0];
        let cyc = ContinuousChain::new(StateSpace::numbered(0, 3), l, DVector::zeros(3)).unwrap();
        let eta = invariant_measure(&cyc).unwrap();
        assert!(!check_reversible(&cyc, &eta));
    }
}
