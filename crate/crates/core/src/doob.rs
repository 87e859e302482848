//! Doob transform of an absorbing chain into an ergodic one.
//!
//! Conjugating `L - V + λ₁ I` by the diagonal matrix `Φ` of the Perron
//! eigenfunction gives a Markov generator
//!
//! ```text
//! L̃ = Φ⁻¹ (L - V + λ₁ I) Φ,      L̃(x, y) = L(x, y) φ(y) / φ(x)  (x ≠ y)
//! ```
//!
//! with invariant law `η̃ ∝ φ φ* η`. In discrete time the analogue is the
//! stochastic kernel `K(x, y) = Q(x, y) φ(y) / (β φ(x))` with stationary
//! law `π ∝ φ ψ`.
//!
//! The printed discrete formula has `φ(x)/φ(y)`; that orientation is not
//! row-stochastic, and the worked rock-breaking table only comes out with
//! `φ(y)/φ(x)`, which is what is implemented.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::chain::{AbsorbingChain, ContinuousChain, DiscreteChain, ProbDist};
use crate::error::{QsdError, Result};
use crate::linalg;
use crate::spectral::{self, PerronData, TimeKind};

#[derive(Debug, Clone, PartialEq)]
pub struct DoobChain {
    pub kind: TimeKind,
    /// `L̃` (continuous) or `K` (discrete).
    pub generator: DMatrix<f64>,
    /// `η̃` (continuous) or `π` (discrete).
    pub invariant: ProbDist,
    /// Additive symmetrization `L̃⋄` of `L̃` in `L²(η̃)` (continuous only).
    pub symmetrized: Option<DMatrix<f64>>,
}

/// `η̃(x) ∝ φ(x) φ*(x) η(x)`.
pub fn doob_invariant(p: &PerronData) -> Result<ProbDist> {
    let n = p.phi.len();
    let w: Vec<f64> = match p.kind {
        TimeKind::Continuous => (0..n).map(|x| p.phi[x] * p.phi_star[x] * p.eta().weights()[x]).collect(),
        TimeKind::Discrete => (0..n).map(|x| p.phi[x] * p.phi_star[x]).collect(),
    };
    ProbDist::from_unnormalized(&w)
}

/// `(G + G*)/2` with `G*(x,y) = m(y) G(y,x) / m(x)`, the adjoint in `L²(m)`.
pub fn symmetrize(g: &DMatrix<f64>, m: &ProbDist) -> DMatrix<f64> {
    let w = m.weights();
    let n = g.nrows();
    DMatrix::from_fn(n, n, |x, y| 0.5 * (g[(x, y)] + w[y] * g[(y, x)] / w[x]))
}

pub fn doob(chain: &AbsorbingChain, p: &PerronData) -> Result<DoobChain> {
    match chain {
        AbsorbingChain::Continuous(c) => doob_continuous(c, p),
        AbsorbingChain::Discrete(d) => doob_discrete(d, p),
    }
}

pub fn doob_continuous(chain: &ContinuousChain, p: &PerronData) -> Result<DoobChain> {
    let n = chain.n();
    let l = chain.rates();
    let phi = &p.phi;
    let mut gen = DMatrix::from_fn(n, n, |x, y| if x == y { 0.0 } else { l[(x, y)] * phi[y] / phi[x] });
    for x in 0..n {
        let s = gen.row(x).sum();
        gen[(x, x)] = -s;
    }

    // Φ⁻¹ (L - V + λ₁ I) Φ must agree entrywise.
    let a = chain.sub_generator();
    let scale = a.amax().max(1.0) * p.ratio;
    let mut defect: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let mut v = a[(x, y)] * phi[y] / phi[x];
            if x == y {
                v += p.lambda1;
            }
            defect = defect.max((v - gen[(x, y)]).abs());
        }
    }
    if defect > 1e-10 * scale {
        return Err(QsdError::PerronMismatch(defect));
    }

    let invariant = doob_invariant(p)?;
    let stat = linalg::vec_mat(invariant.weights(), &gen);
    let sdef = linalg::max_abs(stat);
    if sdef > 1e-10 * scale {
        return Err(QsdError::PerronMismatch(sdef));
    }
    let symmetrized = Some(symmetrize(&gen, &invariant));
    Ok(DoobChain { kind: TimeKind::Continuous, generator: gen, invariant, symmetrized })
}

/// `K(x, y) = Q(x, y) φ(y) / (β φ(x))`.
pub fn doob_kernel(q: &DMatrix<f64>, beta: f64, phi: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = q.nrows();
    let k = DMatrix::from_fn(n, n, |x, y| q[(x, y)] * phi[y] / (beta * phi[x]));
    for x in 0..n {
        let s = k.row(x).sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(QsdError::NonStochastic { row: x, sum: s });
        }
    }
    Ok(k)
}

pub fn doob_discrete(chain: &DiscreteChain, p: &PerronData) -> Result<DoobChain> {
    let beta = p.beta.ok_or_else(|| QsdError::InvalidParameter("continuous Perron data for a discrete chain".into()))?;
    let k = doob_kernel(chain.sub(), beta, &p.phi)?;
    let invariant = doob_invariant(p)?;
    let stat = linalg::vec_mat(invariant.weights(), &k);
    let sdef = linalg::max_abs(stat.iter().zip(invariant.weights()).map(|(a, b)| a - b));
    if sdef > 1e-9 {
        return Err(QsdError::PerronMismatch(sdef));
    }
    Ok(DoobChain { kind: TimeKind::Discrete, generator: k, invariant, symmetrized: None })
}

/// Largest mismatch between `spec(-L̃)` and `spec(V - L) - λ₁`
/// (discrete: `spec(I - K)` and `(spec(I - Q) - λ₁)/β`) as multisets.
pub fn spectrum_shift_defect(chain: &AbsorbingChain, p: &PerronData, d: &DoobChain) -> Result<f64> {
    let dir = spectral::dirichlet_spectrum(chain)?;
    let n = chain.n();
    let expected: Vec<Complex64> = match p.kind {
        TimeKind::Continuous => dir.eigenvalues.iter().map(|z| z - p.lambda1).collect(),
        TimeKind::Discrete => {
            let beta = p.beta.expect("discrete");
            dir.eigenvalues.iter().map(|z| (z - p.lambda1) / beta).collect()
        }
    };
    let m = match p.kind {
        TimeKind::Continuous => -&d.generator,
        TimeKind::Discrete => DMatrix::identity(n, n) - &d.generator,
    };
    let actual = if spectral::reversibility_defect(&m, &d.invariant) <= 1e-10 {
        let sq: Vec<f64> = d.invariant.weights().iter().map(|e| e.sqrt()).collect();
        let s = DMatrix::from_fn(n, n, |i, j| sq[i] * m[(i, j)] / sq[j]);
        linalg::symmetric_eigen(&s).0.into_iter().map(|v| Complex64::new(v, 0.0)).collect::<Vec<_>>()
    } else {
        linalg::eigenvalues(&m)?
    };
    Ok(linalg::multiset_defect(&expected, &actual))
}
