//! Spectral gaps, log-Sobolev brackets and canonical-path bounds.
//!
//! Dirichlet forms carry the usual one-half:
//! `ℰ(g) = ½ Σ_{x,y} (g(y) - g(x))² m(x) G(x, y)`. With that convention the
//! log-Sobolev constant is `α = inf ℰ(g) / Ent_m(g²)`, which equals 1 for the
//! symmetric two-point chain with unit rates and never exceeds half the gap.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::VecDeque;

use crate::chain::{AbsorbingChain, ContinuousChain, DiscreteChain, ProbDist};
use crate::doob::{symmetrize, DoobChain};
use crate::error::{QsdError, Result};
use crate::linalg;
use crate::spectral::{self, PerronData, TimeKind};

/// Detailed-balance tolerance for symmetric generators, relative to the largest rate.
pub const SYMMETRY_TOL: f64 = 1e-10;

fn check_symmetric(g: &DMatrix<f64>, m: &ProbDist) -> Result<()> {
    let defect = spectral::reversibility_defect(g, m);
    if defect > SYMMETRY_TOL * g.amax().max(1.0) {
        return Err(QsdError::NotSymmetric(defect));
    }
    Ok(())
}

/// `D^{1/2} (-G) D^{-1/2}`, symmetric when `G` is reversible for `m`.
fn symmetric_form(g: &DMatrix<f64>, m: &ProbDist) -> DMatrix<f64> {
    let sq: Vec<f64> = m.weights().iter().map(|w| w.sqrt()).collect();
    let n = g.nrows();
    DMatrix::from_fn(n, n, |i, j| -sq[i] * g[(i, j)] / sq[j])
}

/// Smallest nonzero eigenvalue of `-G` together with its eigenfunction.
pub fn gap_eigenpair(sym: &DMatrix<f64>, m: &ProbDist) -> Result<(f64, DVector<f64>)> {
    check_symmetric(sym, m)?;
    let n = sym.nrows();
    if n < 2 {
        return Err(QsdError::InvalidParameter("a spectral gap needs at least two states".into()));
    }
    let (values, vectors) = linalg::symmetric_eigen(&symmetric_form(sym, m));
    let sq: Vec<f64> = m.weights().iter().map(|w| w.sqrt()).collect();
    let g = DVector::from_fn(n, |i, _| vectors[(i, 1)] / sq[i]);
    Ok((values[1], g))
}

pub fn spectral_gap(sym: &DMatrix<f64>, m: &ProbDist) -> Result<f64> {
    gap_eigenpair(sym, m).map(|(gap, _)| gap)
}

/// `ℰ(g) = ½ Σ (g(y) - g(x))² m(x) G(x, y)` for a generator.
pub fn energy(g: &DMatrix<f64>, m: &ProbDist, f: &[f64]) -> f64 {
    let n = g.nrows();
    let w = m.weights();
    let mut e = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                e += (f[y] - f[x]).powi(2) * w[x] * g[(x, y)];
            }
        }
    }
    0.5 * e
}

pub fn variance(m: &ProbDist, f: &[f64]) -> f64 {
    let mean = m.expect(f);
    m.weights().iter().zip(f).map(|(w, v)| w * (v - mean).powi(2)).sum()
}

/// `(1 + u) ln(1 + u) - u`, accurate for small `u`.
pub(crate) fn entropy_kernel(u: f64) -> f64 {
    if u <= -1.0 {
        // 0 ln 0 = 0
        return 1.0;
    }
    if u.abs() < 1e-3 {
        u * u * (0.5 - u / 6.0 + u * u / 12.0 - u * u * u / 20.0)
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// `Ent_m(g²) = Σ m g² ln(g² / m[g²])`.
///
/// Written as `m[g²] Σ m h(g²/m[g²] - 1)` with `h(u) = (1+u)ln(1+u) - u ≥ 0`,
/// which stays accurate as `g` approaches a constant.
pub fn entropy_sq(m: &ProbDist, g: &[f64]) -> f64 {
    let g2: Vec<f64> = g.iter().map(|v| v * v).collect();
    let mass = m.expect(&g2);
    if mass <= 0.0 {
        return 0.0;
    }
    mass * m.weights().iter().zip(&g2).map(|(w, &v)| w * entropy_kernel(v / mass - 1.0)).sum::<f64>()
}

/// Lower bound on the log-Sobolev constant from the gap and the smallest weight.
///
/// `(1 - 2m∧) / ln(1/m∧ - 1) · gap`, with the factor set to its limit 1/2 when
/// `m∧ = 1/2`.
pub fn lsi_lower_bound(gap: f64, min_weight: f64) -> f64 {
    let factor = if (min_weight - 0.5).abs() < 1e-12 {
        0.5
    } else {
        (1.0 - 2.0 * min_weight) / (1.0 / min_weight - 1.0).ln()
    };
    factor * gap
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LsiMode {
    /// Lower bound and trial-function upper bound only.
    Bracket,
    /// Also minimize the entropy ratio from random starts.
    Optimize { restarts: usize, seed: u64 },
}

impl Default for LsiMode {
    fn default() -> Self {
        LsiMode::Optimize { restarts: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsiBracket {
    pub lower: f64,
    /// Best ratio found; equals `upper` in bracket mode.
    pub estimate: f64,
    pub upper: f64,
    /// False when no restart met the stopping tolerance.
    pub converged: bool,
}

fn lsi_ratio(sym: &DMatrix<f64>, m: &ProbDist, g: &[f64]) -> f64 {
    let ent = entropy_sq(m, g);
    if ent <= 1e-300 {
        return f64::INFINITY;
    }
    energy(sym, m, g) / ent
}

/// Ratio and its gradient.
fn lsi_ratio_grad(sym: &DMatrix<f64>, m: &ProbDist, g: &DVector<f64>) -> (f64, DVector<f64>) {
    let n = g.len();
    let w = m.weights();
    let e = energy(sym, m, g.as_slice());
    let ent = entropy_sq(m, g.as_slice());
    if !(ent > 1e-300) {
        return (f64::INFINITY, DVector::zeros(n));
    }
    let mass: f64 = (0..n).map(|x| w[x] * g[x] * g[x]).sum();
    // ∂ℰ/∂g_x = 2 Σ_y w_x G(x,y) (g_x - g_y) for reversible G
    let de = DVector::from_fn(n, |x, _| 2.0 * (0..n).filter(|&y| y != x).map(|y| w[x] * sym[(x, y)] * (g[x] - g[y])).sum::<f64>());
    let dent = DVector::from_fn(n, |x, _| if g[x] > 0.0 { 2.0 * w[x] * g[x] * (g[x] * g[x] / mass).ln() } else { 0.0 });
    let grad = (de * ent - dent * e) / (ent * ent);
    (e / ent, grad)
}

fn normalize(m: &ProbDist, g: &mut DVector<f64>) {
    let w = m.weights();
    let mass: f64 = (0..g.len()).map(|x| w[x] * g[x] * g[x]).sum();
    *g /= mass.sqrt();
}

/// Projected gradient descent with Armijo backtracking on the positive orthant.
fn descend(sym: &DMatrix<f64>, m: &ProbDist, mut g: DVector<f64>, tol: f64) -> (f64, bool) {
    const FLOOR: f64 = 1e-12;
    normalize(m, &mut g);
    let (mut val, mut grad) = lsi_ratio_grad(sym, m, &g);
    if !val.is_finite() {
        return (val, false);
    }
    let mut step = 1.0;
    for _ in 0..3000 {
        let mut accepted = None;
        let mut t = step;
        for _ in 0..60 {
            let mut cand = &g - &grad * t;
            cand.iter_mut().for_each(|v| *v = v.max(FLOOR));
            normalize(m, &mut cand);
            let (cv, cg) = lsi_ratio_grad(sym, m, &cand);
            let moved = (&cand - &g).norm_squared();
            if cv.is_finite() && cv <= val - 1e-4 * moved / t {
                accepted = Some((cand, cv, cg));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, cv, cg)) = accepted else {
            return (val, true);
        };
        let rel = (val - cv) / val.abs().max(f64::MIN_POSITIVE);
        g = cand;
        val = cv;
        grad = cg;
        step = (t * 2.0).min(1e6);
        if rel < tol {
            return (val, true);
        }
    }
    (val, false)
}

/// Bracket `[lower, upper]` on the log-Sobolev constant of a reversible pair,
/// with a point estimate from random restarts.
pub fn lsi_constant(sym: &DMatrix<f64>, m: &ProbDist, mode: LsiMode) -> Result<LsiBracket> {
    let (gap, f2) = gap_eigenpair(sym, m)?;
    let n = sym.nrows();
    let lower = lsi_lower_bound(gap, m.min());

    // trial functions: 1 + s·1_x, and a small perturbation along the gap eigenfunction
    let mut trials: Vec<Vec<f64>> = Vec::new();
    for x in 0..n {
        for s in [0.05, 0.25, 1.0, 3.0, 10.0, 50.0] {
            trials.push((0..n).map(|y| if y == x { 1.0 + s } else { 1.0 }).collect());
        }
    }
    let scale = f2.amax();
    for eps in [1e-4, 1e-2, 0.3] {
        trials.push((0..n).map(|y| 1.0 + eps * f2[y] / scale).collect());
    }
    let upper = trials.iter().map(|g| lsi_ratio(sym, m, g)).fold(f64::INFINITY, f64::min);

    let (estimate, converged) = match mode {
        LsiMode::Bracket => (upper, true),
        LsiMode::Optimize { restarts, seed } => {
            let runs: Vec<(f64, bool)> = (0..restarts)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(i as u64);
                    let spread = 0.1 + 3.0 * (i as f64 / restarts.max(1) as f64);
                    let g = DVector::from_fn(n, |_, _| (spread * (rng.random::<f64>() - 0.5)).exp());
                    descend(sym, m, g, 1e-8)
                })
                .collect();
            let best = runs.iter().filter(|r| r.0.is_finite()).fold((f64::INFINITY, false), |acc, r| if r.0 < acc.0 { *r } else { acc });
            if best.0 < upper {
                best
            } else {
                (upper, best.1)
            }
        }
    };
    Ok(LsiBracket { lower, estimate, upper: upper.max(estimate), converged })
}

/// `(φ∧ φ*∧)/(φ∨ φ*∨) · gap_base`, a lower bound on the Doob gap.
pub fn compare_gap(p: &PerronData, gap_base: f64) -> f64 {
    let ps = &p.phi_star;
    (p.phi.min() * ps.min()) / (p.phi.max() * ps.max()) * gap_base
}

/// Gap of the additive symmetrization of `L` in `L²(η)`.
pub fn base_gap(chain: &ContinuousChain, eta: &ProbDist) -> Result<f64> {
    spectral_gap(&symmetrize(chain.rates(), eta), eta)
}

/// Steps to the absorbing point: `paths[x]` runs from `x` and ends at `n`
/// (the index standing for the absorbing state).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathFamily {
    pub paths: Vec<Vec<usize>>,
}

impl PathFamily {
    /// Breadth-first shortest paths to absorption; ties go to the lowest index.
    pub fn shortest(chain: &DiscreteChain) -> Result<Self> {
        let n = chain.n();
        let q = chain.sub();
        let a = chain.absorb();
        let mut dist = vec![usize::MAX; n + 1];
        dist[n] = 0;
        let mut queue = VecDeque::new();
        for x in 0..n {
            if a[x] > 0.0 {
                dist[x] = 1;
                queue.push_back(x);
            }
        }
        while let Some(y) = queue.pop_front() {
            for x in 0..n {
                if x != y && q[(x, y)] > 0.0 && dist[x] == usize::MAX {
                    dist[x] = dist[y] + 1;
                    queue.push_back(x);
                }
            }
        }
        let mut paths = Vec::with_capacity(n);
        for x in 0..n {
            if dist[x] == usize::MAX {
                return Err(QsdError::NoPathToAbsorption(chain.states().labels()[x].clone()));
            }
            let mut path = vec![x];
            let mut cur = x;
            while cur != n {
                cur = if dist[cur] == 1 {
                    n
                } else {
                    (0..n).find(|&y| q[(cur, y)] > 0.0 && dist[y] + 1 == dist[cur]).expect("bfs predecessor")
                };
                path.push(cur);
            }
            paths.push(path);
        }
        Ok(PathFamily { paths })
    }

    fn validate(&self, chain: &DiscreteChain) -> Result<()> {
        let n = chain.n();
        if self.paths.len() != n {
            return Err(QsdError::DimensionMismatch(format!("{} paths for {n} states", self.paths.len())));
        }
        for (x, p) in self.paths.iter().enumerate() {
            if p.first() != Some(&x) || p.last() != Some(&n) {
                return Err(QsdError::InvalidParameter(format!("path {x} must start at {x} and end at the absorbing point")));
            }
            for w in p.windows(2) {
                let prob = if w[1] == n { chain.absorb()[w[0]] } else { chain.sub()[(w[0], w[1])] };
                if w[0] == n || !(prob > 0.0) {
                    return Err(QsdError::InvalidParameter(format!("path {x} uses an impossible step {} -> {}", w[0], w[1])));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathBound {
    pub a: f64,
    pub beta1_upper: f64,
    /// Edge attaining the maximum; the second index is `n` for absorption.
    pub worst_edge: (usize, usize),
}

/// Canonical-path constant `A` and the resulting bound `β₁ ≤ 1 - 1/A`.
pub fn path_bound(chain: &DiscreteChain, q: &ProbDist, paths: Option<&PathFamily>) -> Result<PathBound> {
    let n = chain.n();
    let k = chain.sub();
    let mut defect: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            defect = defect.max((q.weights()[x] * k[(x, y)] - q.weights()[y] * k[(y, x)]).abs());
        }
    }
    if defect > 1e-10 {
        return Err(QsdError::NotReversible(defect));
    }
    let owned;
    let paths = match paths {
        Some(p) => {
            p.validate(chain)?;
            p
        }
        None => {
            owned = PathFamily::shortest(chain)?;
            &owned
        }
    };
    let mut load = std::collections::BTreeMap::<(usize, usize), f64>::new();
    let qw = q.weights();
    for (z, p) in paths.paths.iter().enumerate() {
        let len = (p.len() - 1) as f64;
        for w in p.windows(2) {
            let ratio = if qw[z] == qw[w[0]] { 1.0 } else { qw[z] / qw[w[0]] };
            *load.entry((w[0], w[1])).or_insert(0.0) += len * ratio;
        }
    }
    let mut best = (0.0, (0, 0));
    for (&(x, y), &l) in &load {
        let kxy = if y == n { chain.absorb()[x] } else { k[(x, y)] };
        // load is accumulated relative to q(x) so uniform weights cancel exactly
        let v = 2.0 / kxy * l;
        if v > best.0 {
            best = (v, (x, y));
        }
    }
    Ok(PathBound { a: best.0, beta1_upper: 1.0 - 1.0 / best.0, worst_edge: best.1 })
}

/// `ℰ(f) = ½ Σ_{x,y ∈ S̄} (f(y) - f(x))² q(x) K(x, y)` with `f(∞) = 0`.
pub fn dirichlet_form(chain: &DiscreteChain, q: &ProbDist, f: &[f64]) -> f64 {
    let n = chain.n();
    let k = chain.sub();
    let a = chain.absorb();
    let w = q.weights();
    let mut e = 0.0;
    for x in 0..n {
        for y in 0..n {
            e += (f[y] - f[x]).powi(2) * w[x] * k[(x, y)];
        }
        e += f[x] * f[x] * w[x] * a[x];
    }
    0.5 * e
}

/// `⟨(I - K) f, f⟩_q`.
pub fn quadratic_form(chain: &DiscreteChain, q: &ProbDist, f: &[f64]) -> f64 {
    let n = chain.n();
    let k = chain.sub();
    (0..n)
        .map(|x| {
            let kf: f64 = (0..n).map(|y| k[(x, y)] * f[y]).sum();
            (f[x] - kf) * f[x] * q.weights()[x]
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalConstants {
    /// Gap of the symmetrized Doob chain.
    pub gap_tilde: Option<f64>,
    /// Gap of the symmetrization of `L` in `L²(η)`.
    pub gap_base: Option<f64>,
    /// Lower bound on `gap_tilde` obtained from `gap_base`.
    pub gap_comparison: Option<f64>,
    pub lsi: Option<LsiBracket>,
    /// Canonical-path bound (discrete chains with a reversing law).
    pub path: Option<PathBound>,
}

/// Everything this module can say about a chain; `lsi` is skipped when `None`.
pub fn functional_constants(chain: &AbsorbingChain, p: &PerronData, d: &DoobChain, lsi: Option<LsiMode>) -> Result<FunctionalConstants> {
    match (chain, p.kind) {
        (AbsorbingChain::Continuous(c), TimeKind::Continuous) => {
            let sym = d.symmetrized.as_ref().expect("continuous Doob chains carry their symmetrization");
            let gap_tilde = spectral_gap(sym, &d.invariant)?;
            let gap_base = base_gap(c, p.eta())?;
            let lsi = match lsi {
                Some(mode) => Some(lsi_constant(sym, &d.invariant, mode)?),
                None => None,
            };
            Ok(FunctionalConstants {
                gap_tilde: Some(gap_tilde),
                gap_base: Some(gap_base),
                gap_comparison: Some(compare_gap(p, gap_base)),
                lsi,
                path: None,
            })
        }
        (AbsorbingChain::Discrete(dc), _) => {
            let emb = dc.embedded_continuous();
            let path = match spectral::invariant_measure(&emb) {
                Ok(q) if spectral::check_reversible(&emb, &q) => Some(path_bound(dc, &q, None)?),
                _ => None,
            };
            let n = dc.n();
            let gap_tilde = if d.invariant.min() > 0.0 && n > 1 {
                let gen = &d.generator - DMatrix::identity(n, n);
                spectral_gap(&symmetrize(&gen, &d.invariant), &d.invariant).ok()
            } else {
                None
            };
            Ok(FunctionalConstants { gap_tilde, gap_base: None, gap_comparison: None, lsi: None, path })
        }
        _ => Err(QsdError::InvalidParameter("Perron data does not match the chain's time kind".into())),
    }
}
