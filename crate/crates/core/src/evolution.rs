//! Exact transient analysis: conditioned laws, survival, distances to the QSD.
//!
//! Laws are propagated with the semigroup shifted by `λ₁` (continuous) or
//! divided by `β` (discrete), so the normalized law stays accurate long after
//! the raw survival probability has become tiny.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{AbsorbingChain, ProbDist};
use crate::doob::DoobChain;
use crate::error::{QsdError, Result};
use crate::funineq;
use crate::linalg;
use crate::spectral::{self, PerronData, TimeKind};

/// Survival below this is reported as [`QsdError::TotalMassUnderflow`].
pub const SURVIVAL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone)]
enum Route {
    /// `A = D^{-1/2} U Λ Uᵀ D^{1/2}` with `Λ` already shifted by `λ₁`.
    Spectral { values: Vec<f64>, vectors: DMatrix<f64>, sqrt_w: Vec<f64> },
    /// `exp(t(A + λ₁ I))` by Padé scaling and squaring.
    Expm(DMatrix<f64>),
    /// Powers of `Q / β`.
    Powers(DMatrix<f64>),
}

/// Semigroup of the killed chain, shifted so that its top eigenvalue is 0.
#[derive(Debug, Clone)]
pub struct Propagator {
    route: Route,
    /// `λ₁` for continuous chains, `-ln β` for discrete ones.
    decay: f64,
    kind: TimeKind,
}

fn check_time(kind: TimeKind, t: f64) -> Result<()> {
    if !(t >= 0.0) {
        return Err(QsdError::NegativeTime(t));
    }
    if kind == TimeKind::Discrete && t.fract() != 0.0 {
        return Err(QsdError::FractionalTime(t));
    }
    Ok(())
}

fn int_power(m: &DMatrix<f64>, mut k: u64) -> DMatrix<f64> {
    let n = m.nrows();
    let mut acc = DMatrix::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        base = &base * &base;
        k >>= 1;
    }
    acc
}

impl Propagator {
    pub fn new(chain: &AbsorbingChain, p: &PerronData) -> Result<Self> {
        match chain {
            AbsorbingChain::Continuous(c) => {
                let n = c.n();
                let mut a = c.sub_generator();
                for i in 0..n {
                    a[(i, i)] += p.lambda1;
                }
                let route = match p.eta.as_ref().filter(|_| p.reversible) {
                    Some(eta) => {
                        let sqrt_w: Vec<f64> = eta.weights().iter().map(|w| w.sqrt()).collect();
                        let s = DMatrix::from_fn(n, n, |i, j| sqrt_w[i] * a[(i, j)] / sqrt_w[j]);
                        let (values, vectors) = linalg::symmetric_eigen(&s);
                        Route::Spectral { values, vectors, sqrt_w }
                    }
                    None => Route::Expm(a),
                };
                Ok(Propagator { route, decay: p.lambda1, kind: TimeKind::Continuous })
            }
            AbsorbingChain::Discrete(d) => {
                let beta = p.beta.ok_or_else(|| QsdError::InvalidParameter("discrete chain needs β".into()))?;
                Ok(Propagator { route: Route::Powers(d.sub() / beta), decay: -beta.ln(), kind: TimeKind::Discrete })
            }
        }
    }

    /// Same chain, always through the general matrix exponential (cross-checks).
    pub fn new_expm(chain: &AbsorbingChain, p: &PerronData) -> Result<Self> {
        let mut prop = Self::new(chain, p)?;
        if let (AbsorbingChain::Continuous(c), Route::Spectral { .. }) = (chain, &prop.route) {
            let mut a = c.sub_generator();
            for i in 0..c.n() {
                a[(i, i)] += p.lambda1;
            }
            prop.route = Route::Expm(a);
        }
        Ok(prop)
    }

    pub fn kind(&self) -> TimeKind {
        self.kind
    }

    pub fn route_name(&self) -> &'static str {
        match self.route {
            Route::Spectral { .. } => "symmetric-spectral",
            Route::Expm(_) => "pade-expm",
            Route::Powers(_) => "matrix-power",
        }
    }

    /// Shifted transition matrix `e^{λ₁t} P̄_t` restricted to the live states.
    pub fn shifted_matrix(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(self.kind, t)?;
        Ok(match &self.route {
            Route::Spectral { values, vectors, sqrt_w } => {
                let n = values.len();
                let e: Vec<f64> = values.iter().map(|v| (v * t).exp()).collect();
                let core = DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| vectors[(i, k)] * e[k] * vectors[(j, k)]).sum::<f64>());
                DMatrix::from_fn(n, n, |i, j| core[(i, j)] * sqrt_w[j] / sqrt_w[i])
            }
            Route::Expm(a) => linalg::expm(&(a * t)),
            Route::Powers(q) => int_power(q, t as u64),
        })
    }

    /// `(μ_t, ℙ_{μ₀}[τ > t])`.
    pub fn propagate(&self, mu0: &ProbDist, t: f64) -> Result<(ProbDist, f64)> {
        check_time(self.kind, t)?;
        if t == 0.0 {
            return Ok((mu0.clone(), 1.0));
        }
        let v: Vec<f64> = match &self.route {
            Route::Spectral { values, vectors, sqrt_w } => {
                let n = values.len();
                let y: Vec<f64> = (0..n).map(|i| mu0.weights()[i] / sqrt_w[i]).collect();
                let coef: Vec<f64> =
                    (0..n).map(|k| (values[k] * t).exp() * (0..n).map(|i| y[i] * vectors[(i, k)]).sum::<f64>()).collect();
                (0..n).map(|j| sqrt_w[j] * (0..n).map(|k| coef[k] * vectors[(j, k)]).sum::<f64>()).collect()
            }
            _ => linalg::vec_mat(mu0.weights(), &self.shifted_matrix(t)?),
        };
        self.finish(v, t)
    }

    fn finish(&self, v: Vec<f64>, t: f64) -> Result<(ProbDist, f64)> {
        // round-off can leave tiny negative entries
        let v: Vec<f64> = v.into_iter().map(|x| x.max(0.0)).collect();
        let mass: f64 = v.iter().sum();
        let log_survival = mass.ln() - self.decay * t;
        if !(log_survival > SURVIVAL_FLOOR.ln()) {
            return Err(QsdError::TotalMassUnderflow(t));
        }
        let law = ProbDist::from_unnormalized(&v)?;
        Ok((law, log_survival.exp().min(1.0)))
    }

    /// Conditioned laws from every Dirac start at once (row `x` = start at `x`).
    pub fn dirac_laws(&self, t: f64) -> Result<Vec<(ProbDist, f64)>> {
        let n = match &self.route {
            Route::Spectral { values, .. } => values.len(),
            Route::Expm(a) | Route::Powers(a) => a.nrows(),
        };
        if t == 0.0 {
            return Ok((0..n).map(|x| (ProbDist::dirac(n, x), 1.0)).collect());
        }
        let m = self.shifted_matrix(t)?;
        (0..n).map(|x| self.finish(m.row(x).iter().copied().collect(), t)).collect()
    }
}

pub fn conditioned_law(chain: &AbsorbingChain, p: &PerronData, mu0: &ProbDist, t: f64) -> Result<(ProbDist, f64)> {
    Propagator::new(chain, p)?.propagate(mu0, t)
}

/// `μ̃₀ ∝ φ μ₀`.
pub fn doob_initial(p: &PerronData, mu0: &ProbDist) -> Result<ProbDist> {
    let w: Vec<f64> = mu0.weights().iter().zip(p.phi.iter()).map(|(m, f)| m * f).collect();
    ProbDist::from_unnormalized(&w)
}

/// `μ̃₀ P̃_t` for the Doob chain.
pub fn doob_law(d: &DoobChain, mu_tilde0: &ProbDist, t: f64) -> Result<ProbDist> {
    check_time(d.kind, t)?;
    if t == 0.0 {
        return Ok(mu_tilde0.clone());
    }
    let m = match d.kind {
        TimeKind::Continuous => linalg::expm(&(&d.generator * t)),
        TimeKind::Discrete => int_power(&d.generator, t as u64),
    };
    let v: Vec<f64> = linalg::vec_mat(mu_tilde0.weights(), &m).into_iter().map(|x| x.max(0.0)).collect();
    ProbDist::from_unnormalized(&v)
}

/// `Σ |μ(x) - ν(x)|` (analyst convention, at most 2).
pub fn tv_distance(mu: &ProbDist, nu: &ProbDist) -> f64 {
    mu.weights().iter().zip(nu.weights()).map(|(a, b)| (a - b).abs()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distances {
    pub tv: f64,
    /// `Σ (μ/ref - 1)² ref`.
    pub chi2: f64,
    /// `Σ μ ln(μ/ref)`.
    pub kl: f64,
}

pub fn distances(mu: &ProbDist, reference: &ProbDist) -> Result<Distances> {
    let mut chi2 = 0.0;
    let mut kl = 0.0;
    for (x, (&m, &r)) in mu.weights().iter().zip(reference.weights()).enumerate() {
        if !(r > 0.0) {
            return Err(QsdError::ReferenceZero(x));
        }
        let f = m / r;
        chi2 += (f - 1.0).powi(2) * r;
        // Σ μ ln(μ/ref) rewritten with Σ (μ - ref) = 0, free of cancellation near μ = ref
        kl += r * funineq::entropy_kernel(f - 1.0);
    }
    Ok(Distances { tv: tv_distance(mu, reference), chi2, kl: kl.max(0.0) })
}

/// `max_x ‖μ_t^{δ_x} - ν‖` and the maximizing start.
///
/// From a general `μ₀`, `μ_t` is a convex combination of the Dirac-started
/// laws (weights ∝ `μ₀(x)` times survival from `x`), so by convexity of the
/// norm the Dirac sweep gives the supremum over all initial laws.
pub fn worst_case_tv(prop: &Propagator, nu: &ProbDist, t: f64) -> Result<(f64, usize)> {
    let laws = prop.dirac_laws(t)?;
    let mut best = (f64::NEG_INFINITY, 0);
    for (x, (law, _)) in laws.iter().enumerate() {
        let d = tv_distance(law, nu);
        if d > best.0 {
            best = (d, x);
        }
    }
    Ok(best)
}

pub fn survival_curve(prop: &Propagator, m0: &ProbDist, times: &[f64]) -> Result<Vec<f64>> {
    times.par_iter().map(|&t| prop.propagate(m0, t).map(|(_, s)| s)).collect()
}

/// Least-squares slope of `ln y` against `t`.
pub fn log_slope(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len() as f64;
    let ly: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mt = times.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = times.iter().zip(&ly).map(|(t, y)| (t - mt) * (y - my)).sum();
    let var: f64 = times.iter().map(|t| (t - mt).powi(2)).sum();
    cov / var
}

/// `count` points from `start` to `stop`, linear or geometric.
pub fn time_grid(start: f64, stop: f64, count: usize, log: bool) -> Result<Vec<f64>> {
    if count == 0 || !(stop >= start) || !(start >= 0.0) {
        return Err(QsdError::InvalidParameter(format!("bad grid {start}..{stop} with {count} points")));
    }
    if log && start <= 0.0 {
        return Err(QsdError::InvalidParameter("a log grid needs start > 0".into()));
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    let k = (count - 1) as f64;
    Ok((0..count)
        .map(|i| {
            let s = i as f64 / k;
            if log {
                start * (stop / start).powf(s)
            } else {
                start + (stop - start) * s
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionRow {
    pub t: f64,
    pub survival: f64,
    pub tv: f64,
    /// `I_t`, absent when `ν` vanishes somewhere.
    pub chi2: Option<f64>,
    /// `J_t`.
    pub kl: Option<f64>,
    /// `‖μ̃_t - η̃‖`.
    pub doob_tv: f64,
    /// `Ĩ_t`.
    pub doob_chi2: Option<f64>,
    /// `J̃_t`.
    pub doob_kl: Option<f64>,
    pub law: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionReport {
    pub states: Vec<String>,
    pub rows: Vec<EvolutionRow>,
}

impl EvolutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per time; law columns are named after the states.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        let mut out = String::from("t,survival,tv,chi2,kl,doob_tv,doob_chi2,doob_kl");
        for s in &self.states {
            out.push(',');
            out.push_str(&csv_field(&format!("mu[{s}]")));
        }
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{:e},{:e},{:e},{},{},{:e},{},{}",
                r.t,
                r.survival,
                r.tv,
                opt(r.chi2),
                opt(r.kl),
                r.doob_tv,
                opt(r.doob_chi2),
                opt(r.doob_kl)
            ));
            for w in &r.law {
                out.push_str(&format!(",{w:e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Quotes a CSV field when needed.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Exact conditioned evolution from `mu0` over `times`, with Doob-side distances.
pub fn evolve(chain: &AbsorbingChain, p: &PerronData, d: &DoobChain, mu0: &ProbDist, times: &[f64]) -> Result<EvolutionReport> {
    let prop = Propagator::new(chain, p)?;
    let mu_t0 = doob_initial(p, mu0)?;
    let rows: Result<Vec<EvolutionRow>> = times
        .par_iter()
        .map(|&t| {
            let (law, survival) = prop.propagate(mu0, t)?;
            let dl = doob_law(d, &mu_t0, t)?;
            let base = distances(&law, &p.nu).ok();
            let tilde = distances(&dl, &d.invariant).ok();
            Ok(EvolutionRow {
                t,
                survival,
                tv: tv_distance(&law, &p.nu),
                chi2: base.map(|b| b.chi2),
                kl: base.map(|b| b.kl),
                doob_tv: tv_distance(&dl, &d.invariant),
                doob_chi2: tilde.map(|b| b.chi2),
                doob_kl: tilde.map(|b| b.kl),
                law: law.weights().to_vec(),
            })
        })
        .collect();
    Ok(EvolutionReport { states: chain.states().labels().to_vec(), rows: rows? })
}

/// Dirichlet spectrum helper used by callers that need `λ₂` for a propagator's chain.
pub fn second_eigenvalue(chain: &AbsorbingChain) -> Result<Option<f64>> {
    Ok(spectral::dirichlet_spectrum(chain)?.lambda2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doob::doob;
    use crate::models;
    use crate::spectral::perron;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn setup(c: AbsorbingChain) -> (AbsorbingChain, PerronData, DoobChain) {
        let p = perron(&c).unwrap();
        let d = doob(&c, &p).unwrap();
        (c, p, d)
    }

    #[test]
    fn t_zero_is_identity() {
        let (c, p, _) = setup(models::bd_uniform(4).unwrap().into());
        let mu0 = ProbDist::dirac(4, 2);
        let (law, s) = conditioned_law(&c, &p, &mu0, 0.0).unwrap();
        assert_eq!(law, mu0);
        assert_eq!(s, 1.0);
    }

    #[test]
    fn qsd_is_fixed_and_survival_exponential() {
        for c in [models::bd_uniform(5).unwrap().into(), models::cycle_chain(5).unwrap().into()] {
            let (c, p, _) = setup(c);
            for t in [0.1, 1.0, 10.0] {
                let (law, s) = conditioned_law(&c, &p, &p.nu, t).unwrap();
                assert!(tv_distance(&law, &p.nu) < 1e-10);
                assert!((s - (-p.lambda1 * t).exp()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn n2_matches_spectral_expansion() {
        // eigenpairs (2 ∓ √2, sin(π x (2k+1)/4)) of V - L, symmetric in L²(η), η ∝ (1, 1/2)
        let (c, p, _) = setup(models::bd_uniform(2).unwrap().into());
        let t = 1.0;
        let eta = [2.0 / 3.0, 1.0 / 3.0];
        let mut v = [0.0; 2];
        for k in 0..2 {
            let lam = 2.0 + if k == 0 { -(2f64.sqrt()) } else { 2f64.sqrt() };
            let f: Vec<f64> = (1..=2).map(|x| (PI * x as f64 * (2 * k + 1) as f64 / 4.0).sin()).collect();
            let norm: f64 = (0..2).map(|x| f[x] * f[x] * eta[x]).sum();
            // δ₂ P_t(y) = Σ_k e^{-λ_k t} f_k(2) f_k(y) η(y) / ‖f_k‖²
            for y in 0..2 {
                v[y] += (-lam * t).exp() * f[1] * f[y] * eta[y] / norm;
            }
        }
        let mass = v[0] + v[1];
        let (law, s) = conditioned_law(&c, &p, &ProbDist::dirac(2, 1), t).unwrap();
        assert!((s - mass).abs() < 1e-10);
        assert!((law.weights()[0] - v[0] / mass).abs() < 1e-10);
    }

    #[test]
    fn spectral_route_agrees_with_expm() {
        for c in models::builtin_catalogue().into_iter().map(|(_, c)| c).filter(|c| !c.is_discrete()) {
            let p = perron(&c).unwrap();
            let a = Propagator::new(&c, &p).unwrap();
            let b = Propagator::new_expm(&c, &p).unwrap();
            for t in [0.3, 3.0, 30.0] {
                let ma = a.shifted_matrix(t).unwrap();
                let mb = b.shifted_matrix(t).unwrap();
                assert!((ma - &mb).amax() < 1e-10 * mb.amax().max(1.0), "{}", a.route_name());
            }
        }
    }

    #[test]
    fn doob_law_relation() {
        // μ_t[f] = μ̃₀[P̃_t(f/φ)] / μ̃₀[P̃_t(1/φ)]
        let (c, p, d) = setup(models::cycle_chain(5).unwrap().into());
        let mu0 = ProbDist::new(vec![0.1, 0.2, 0.3, 0.25, 0.15]).unwrap();
        let mt0 = doob_initial(&p, &mu0).unwrap();
        for t in [0.5, 2.0] {
            let (law, _) = conditioned_law(&c, &p, &mu0, t).unwrap();
            let dl = doob_law(&d, &mt0, t).unwrap();
            let denom: f64 = (0..5).map(|y| dl.weights()[y] / p.phi[y]).sum();
            for x in 0..5 {
                assert!((law.weights()[x] - dl.weights()[x] / p.phi[x] / denom).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn doob_law_converges() {
        let (_, p, d) = setup(models::bd_uniform(4).unwrap().into());
        let mt0 = doob_initial(&p, &ProbDist::dirac(4, 0)).unwrap();
        let dl = doob_law(&d, &mt0, 50.0 * 16.0).unwrap();
        assert!(tv_distance(&dl, &d.invariant) < 1e-8);
    }

    #[test]
    fn distance_examples() {
        let u = ProbDist::uniform(2);
        let dx = ProbDist::dirac(2, 0);
        let d = distances(&dx, &u).unwrap();
        assert!((d.tv - 1.0).abs() < 1e-15 && (d.chi2 - 1.0).abs() < 1e-15 && (d.kl - 2f64.ln()).abs() < 1e-15);
        let z = distances(&u, &u).unwrap();
        assert_eq!((z.tv, z.chi2, z.kl), (0.0, 0.0, 0.0));
        assert_eq!(distances(&u, &dx), Err(QsdError::ReferenceZero(1)));
    }

    #[test]
    fn time_errors() {
        let (c, p, _) = setup(models::intro_walk(3).unwrap().into());
        let mu = ProbDist::uniform(3);
        assert_eq!(conditioned_law(&c, &p, &mu, 1.5).unwrap_err(), QsdError::FractionalTime(1.5));
        assert_eq!(conditioned_law(&c, &p, &mu, -1.0).unwrap_err(), QsdError::NegativeTime(-1.0));
        let (law, s) = conditioned_law(&c, &p, &mu, 3.0).unwrap();
        // direct oracle μ Q³
        let d = c.as_discrete().unwrap();
        let q3 = d.sub() * d.sub() * d.sub();
        let v = linalg::vec_mat(mu.weights(), &q3);
        let mass: f64 = v.iter().sum();
        assert!((s - mass).abs() < 1e-14);
        assert!((law.weights()[2] - v[2] / mass).abs() < 1e-14);
    }

    #[test]
    fn underflow_is_reported() {
        let (c, p, _) = setup(models::two_point().into());
        assert_eq!(conditioned_law(&c, &p, &ProbDist::uniform(2), 800.0).unwrap_err(), QsdError::TotalMassUnderflow(800.0));
    }

    #[test]
    fn worst_case_at_zero_and_random_sweep() {
        let (c, p, _) = setup(models::cycle_chain(5).unwrap().into());
        let prop = Propagator::new(&c, &p).unwrap();
        let (w0, x0) = worst_case_tv(&prop, &p.nu, 0.0).unwrap();
        let numin = p.nu.min();
        assert!((w0 - (2.0 - 2.0 * numin)).abs() < 1e-12);
        assert_eq!(p.nu.weights()[x0], numin);

        let (w1, _) = worst_case_tv(&prop, &p.nu, 1.0).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let w: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            let mu = ProbDist::from_unnormalized(&w).unwrap();
            let (law, _) = prop.propagate(&mu, 1.0).unwrap();
            assert!(tv_distance(&law, &p.nu) <= w1 + 1e-12);
        }
    }

    #[test]
    fn survival_tail_slope() {
        let (c, p, _) = setup(models::bd_uniform(5).unwrap().into());
        let prop = Propagator::new(&c, &p).unwrap();
        let times = time_grid(100.0, 300.0, 21, false).unwrap();
        let s = survival_curve(&prop, &ProbDist::dirac(5, 4), &times).unwrap();
        assert!((log_slope(&times, &s) + p.lambda1).abs() < 1e-4);
        let s0 = survival_curve(&prop, &ProbDist::dirac(5, 4), &[0.0]).unwrap();
        assert_eq!(s0, vec![1.0]);
    }

    #[test]
    fn report_serializes() {
        let (c, p, d) = setup(models::bd_uniform(3).unwrap().into());
        let times = time_grid(0.0, 2.0, 3, false).unwrap();
        let r = evolve(&c, &p, &d, &ProbDist::dirac(3, 2), &times).unwrap();
        let csv = r.to_csv();
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("t,survival,tv,chi2"));
        assert!(r.to_json().contains("doob_chi2"));
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        // survival nonincreasing
        assert!(r.rows.windows(2).all(|w| w[1].survival <= w[0].survival));
    }

    proptest! {
        #[test]
        fn tv_dominated_by_chi2_and_kl(a in proptest::collection::vec(0.001f64..1.0, 5), b in proptest::collection::vec(0.001f64..1.0, 5)) {
            let mu = ProbDist::from_unnormalized(&a).unwrap();
            let nu = ProbDist::from_unnormalized(&b).unwrap();
            let d = distances(&mu, &nu).unwrap();
            prop_assert!(d.tv <= d.chi2.sqrt() + 1e-12);
            prop_assert!(d.tv <= (2.0 * d.kl).sqrt() + 1e-12);
            prop_assert!(d.tv <= 2.0);
        }
    }
}
