//! Trajectory simulation, used to check the exact computations stochastically.
//!
//! Trajectory `i` draws from a ChaCha stream keyed by `(seed, i)`, so results do
//! not depend on how the work is split across threads.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{AbsorbingChain, ProbDist};
use crate::error::{QsdError, Result};
use crate::evolution::Propagator;
use crate::spectral::PerronData;

/// Survivor count below which conditioned estimates are refused.
pub const MIN_SURVIVORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub seed: u64,
    pub n_traj: usize,
    /// Time horizon; a step count for discrete chains.
    pub horizon: f64,
}

impl SimConfig {
    pub fn new(seed: u64, n_traj: usize, horizon: f64) -> Result<Self> {
        if n_traj == 0 {
            return Err(QsdError::InvalidParameter("need at least one trajectory".into()));
        }
        if !(horizon > 0.0) {
            return Err(QsdError::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        Ok(SimConfig { seed, n_traj, horizon })
    }

    fn rng(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        rng
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsorptionSample {
    /// Absorption times, `+∞` when still alive at the horizon.
    pub tau: Vec<f64>,
    /// Last live state: the state at the horizon, or the one absorbed from.
    pub terminal: Vec<usize>,
    /// `exp(-∫ V(X_s) ds)` up to the absorption time or the horizon.
    pub weights: Vec<f64>,
}

impl AbsorptionSample {
    pub fn survivors(&self) -> usize {
        self.tau.iter().filter(|t| t.is_infinite()).count()
    }

    /// Fraction of trajectories with `τ > t`.
    pub fn survival(&self, t: f64) -> f64 {
        self.tau.iter().filter(|&&s| s > t).count() as f64 / self.tau.len() as f64
    }
}

struct Trajectory {
    tau: f64,
    state: usize,
    /// `∫ V ds` (continuous) or `-Σ ln(1 - a)` (discrete).
    cost: f64,
}

/// Per-state jump tables.
enum Dynamics {
    Continuous { out: Vec<f64>, kill: Vec<f64>, jumps: Vec<Option<WeightedIndex<f64>>> },
    Discrete { absorb: Vec<f64>, jumps: Vec<Option<WeightedIndex<f64>>> },
}

fn row_index(row: impl Iterator<Item = f64>) -> Option<WeightedIndex<f64>> {
    WeightedIndex::new(row.collect::<Vec<_>>()).ok()
}

impl Dynamics {
    fn new(chain: &AbsorbingChain) -> Self {
        match chain {
            AbsorbingChain::Continuous(c) => {
                let n = c.n();
                let l = c.rates();
                Dynamics::Continuous {
                    out: (0..n).map(|x| (0..n).filter(|&y| y != x).map(|y| l[(x, y)]).sum()).collect(),
                    kill: c.killing().iter().copied().collect(),
                    jumps: (0..n).map(|x| row_index((0..n).map(|y| if y == x { 0.0 } else { l[(x, y)] }))).collect(),
                }
            }
            AbsorbingChain::Discrete(d) => {
                let n = d.n();
                Dynamics::Discrete {
                    absorb: d.absorb().iter().copied().collect(),
                    jumps: (0..n).map(|x| row_index(d.sub().row(x).iter().copied())).collect(),
                }
            }
        }
    }

    /// One path from `x` up to `horizon`; with `killed = false` the killing is
    /// only accumulated in `cost`, never acted on.
    fn run(&self, mut x: usize, horizon: f64, killed: bool, rng: &mut ChaCha8Rng) -> Trajectory {
        match self {
            Dynamics::Continuous { out, kill, jumps } => {
                let mut time = 0.0;
                let mut cost = 0.0;
                loop {
                    let total = out[x] + if killed { kill[x] } else { 0.0 };
                    if total <= 0.0 {
                        cost += kill[x] * (horizon - time);
                        return Trajectory { tau: f64::INFINITY, state: x, cost };
                    }
                    let e: f64 = rng.sample(Exp1);
                    let hold = e / total;
                    if time + hold >= horizon {
                        cost += kill[x] * (horizon - time);
                        return Trajectory { tau: f64::INFINITY, state: x, cost };
                    }
                    time += hold;
                    cost += kill[x] * hold;
                    if killed && rng.random::<f64>() * total < kill[x] {
                        return Trajectory { tau: time, state: x, cost };
                    }
                    x = jumps[x].as_ref().expect("positive out-rate").sample(rng);
                }
            }
            Dynamics::Discrete { absorb, jumps } => {
                let steps = horizon as u64;
                let mut cost = 0.0;
                for step in 0..steps {
                    let a = absorb[x];
                    if killed && rng.random::<f64>() < a {
                        return Trajectory { tau: (step + 1) as f64, state: x, cost };
                    }
                    cost -= (1.0 - a).ln();
                    match &jumps[x] {
                        Some(j) => x = j.sample(rng),
                        // a(x) = 1: only reachable unkilled, with weight 0 from here on
                        None => return Trajectory { tau: f64::INFINITY, state: x, cost: f64::INFINITY },
                    }
                }
                Trajectory { tau: f64::INFINITY, state: x, cost }
            }
        }
    }
}

fn check_horizon(chain: &AbsorbingChain, horizon: f64) -> Result<()> {
    if chain.is_discrete() && horizon.fract() != 0.0 {
        return Err(QsdError::FractionalTime(horizon));
    }
    Ok(())
}

fn paths(chain: &AbsorbingChain, m0: &ProbDist, cfg: &SimConfig, killed: bool) -> Result<Vec<(usize, Trajectory)>> {
    if m0.len() != chain.n() {
        return Err(QsdError::DimensionMismatch(format!("initial law has {} states, chain has {}", m0.len(), chain.n())));
    }
    check_horizon(chain, cfg.horizon)?;
    let start = WeightedIndex::new(m0.weights()).map_err(|e| QsdError::InvalidParameter(format!("initial law: {e}")))?;
    let dynamics = Dynamics::new(chain);
    Ok((0..cfg.n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = cfg.rng(i);
            let x0 = start.sample(&mut rng);
            (x0, dynamics.run(x0, cfg.horizon, killed, &mut rng))
        })
        .collect())
}

/// Simulates the killed chain from `m0` until absorption or the horizon.
pub fn simulate(chain: &AbsorbingChain, m0: &ProbDist, cfg: &SimConfig) -> Result<AbsorptionSample> {
    let runs = paths(chain, m0, cfg, true)?;
    Ok(AbsorptionSample {
        tau: runs.iter().map(|(_, r)| r.tau).collect(),
        terminal: runs.iter().map(|(_, r)| r.state).collect(),
        weights: runs.iter().map(|(_, r)| (-r.cost).exp()).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionedEstimate {
    pub law: ProbDist,
    /// Binomial standard error per state.
    pub std_errors: Vec<f64>,
    pub survivors: usize,
}

/// Empirical law at time `t` of the trajectories still alive.
///
/// Refused when the exact survival predicts fewer than [`MIN_SURVIVORS`] survivors.
pub fn estimate_conditioned(chain: &AbsorbingChain, p: &PerronData, mu0: &ProbDist, t: f64, cfg: &SimConfig) -> Result<ConditionedEstimate> {
    let (_, survival) = Propagator::new(chain, p)?.propagate(mu0, t)?;
    let expected = survival * cfg.n_traj as f64;
    if expected < MIN_SURVIVORS as f64 {
        return Err(QsdError::TooFewSurvivors { expected, required: MIN_SURVIVORS });
    }
    let n = chain.n();
    let mut counts = vec![0usize; n];
    if t == 0.0 {
        let start = WeightedIndex::new(mu0.weights()).map_err(|e| QsdError::InvalidParameter(format!("initial law: {e}")))?;
        for i in 0..cfg.n_traj {
            counts[start.sample(&mut cfg.rng(i))] += 1;
        }
    } else {
        let at = SimConfig { horizon: t, ..*cfg };
        for (_, r) in paths(chain, mu0, &at, true)? {
            if r.tau.is_infinite() {
                counts[r.state] += 1;
            }
        }
    }
    let survivors: usize = counts.iter().sum();
    if survivors == 0 {
        return Err(QsdError::TooFewSurvivors { expected, required: MIN_SURVIVORS });
    }
    let m = survivors as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / m).collect();
    let std_errors = freq.iter().map(|q| (q * (1.0 - q) / m).sqrt()).collect();
    Ok(ConditionedEstimate { law: ProbDist::new(freq)?, std_errors, survivors })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeynmanKacEstimate {
    /// Estimate of `μ_t[f]`.
    pub value: f64,
    pub std_error: f64,
    /// Estimate of `ℙ_{μ₀}[τ > t]`, the mean weight.
    pub survival: f64,
    pub survival_std_error: f64,
}

/// `μ_t[f]` as a weighted average over paths of the unkilled chain.
///
/// Weights are `exp(-∫V ds)` for continuous chains and `Π(1 - a(X_k))` for
/// discrete ones, whose unkilled kernel is `Q(x,·)/(1 - a(x))`.
pub fn feynman_kac(chain: &AbsorbingChain, mu0: &ProbDist, t: f64, f: &[f64], cfg: &SimConfig) -> Result<FeynmanKacEstimate> {
    if f.len() != chain.n() {
        return Err(QsdError::DimensionMismatch(format!("test function has {} entries, chain has {} states", f.len(), chain.n())));
    }
    let pairs: Vec<(f64, f64)> = if t == 0.0 {
        let start = WeightedIndex::new(mu0.weights()).map_err(|e| QsdError::InvalidParameter(format!("initial law: {e}")))?;
        (0..cfg.n_traj).map(|i| (1.0, f[start.sample(&mut cfg.rng(i))])).collect()
    } else {
        let at = SimConfig { horizon: t, ..*cfg };
        paths(chain, mu0, &at, false)?.into_iter().map(|(_, r)| ((-r.cost).exp(), f[r.state])).collect()
    };
    let n = pairs.len() as f64;
    let mean_w = pairs.iter().map(|(w, _)| w).sum::<f64>() / n;
    if !(mean_w > 0.0) {
        return Err(QsdError::TooFewSurvivors { expected: 0.0, required: 1 });
    }
    let value = pairs.iter().map(|(w, v)| w * v).sum::<f64>() / n / mean_w;
    // delta method for a ratio of means
    let resid = pairs.iter().map(|(w, v)| (w * (v - value)).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let var_w = pairs.iter().map(|(w, _)| (w - mean_w).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(FeynmanKacEstimate {
        value,
        std_error: (resid / n).sqrt() / mean_w,
        survival: mean_w,
        survival_std_error: (var_w / n).sqrt(),
    })
}

/// Kolmogorov–Smirnov distance between the absorption times and `Exp(rate)`.
///
/// Censored times count toward the sample size; the comparison stops at the
/// largest observed time.
pub fn ks_statistic(tau: &[f64], rate: f64) -> f64 {
    let n = tau.len() as f64;
    let mut finite: Vec<f64> = tau.iter().copied().filter(|t| t.is_finite()).collect();
    finite.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &t) in finite.iter().enumerate() {
        let cdf = 1.0 - (-rate * t).exp();
        d = d.max((i as f64 + 1.0) / n - cdf).max(cdf - i as f64 / n);
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ContinuousChain, StateSpace};
    use crate::evolution;
    use crate::models;
    use crate::spectral::perron;
    use nalgebra::{DMatrix, DVector};

    fn cfg(n: usize, horizon: f64) -> SimConfig {
        SimConfig::new(0, n, horizon).unwrap()
    }

    #[test]
    fn no_killing_means_no_absorption() {
        let l = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        let chain: AbsorbingChain = ContinuousChain::new(StateSpace::numbered(0, 3), l, DVector::zeros(3)).unwrap().into();
        let s = simulate(&chain, &ProbDist::uniform(3), &cfg(500, 50.0)).unwrap();
        assert_eq!(s.survivors(), 500);
        assert!(s.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn same_seed_same_sample_and_prefix_stable() {
        let chain: AbsorbingChain = models::bd_uniform(5).unwrap().into();
        let m0 = ProbDist::dirac(5, 4);
        let a = simulate(&chain, &m0, &cfg(400, 30.0)).unwrap();
        let b = simulate(&chain, &m0, &cfg(400, 30.0)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&chain, &m0, &cfg(200, 30.0)).unwrap();
        assert_eq!(&a.tau[..200], &c.tau[..]);
        let other = simulate(&chain, &m0, &SimConfig::new(1, 400, 30.0).unwrap()).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sample_invariants() {
        let chain: AbsorbingChain = models::cycle_chain(5).unwrap().into();
        let s = simulate(&chain, &ProbDist::dirac(5, 0), &cfg(2000, 20.0)).unwrap();
        assert!(s.tau.iter().all(|&t| t > 0.0));
        assert!(s.weights.iter().all(|&w| w > 0.0 && w <= 1.0));
    }

    #[test]
    fn absorption_from_qsd_is_exponential() {
        let chain: AbsorbingChain = models::bd_uniform(5).unwrap().into();
        let p = perron(&chain).unwrap();
        let n = 20_000;
        let s = simulate(&chain, &p.nu, &cfg(n, 1e4)).unwrap();
        let d = ks_statistic(&s.tau, p.lambda1);
        assert!(d < ks_critical_1pct(n), "KS {d}");
        // and a wrong rate is rejected
        assert!(ks_statistic(&s.tau, 1.3 * p.lambda1) > ks_critical_1pct(n));
    }

    #[test]
    fn conditioned_estimate_matches_exact_law() {
        let chain: AbsorbingChain = models::bd_uniform(5).unwrap().into();
        let p = perron(&chain).unwrap();
        let mu0 = ProbDist::dirac(5, 4);
        let est = estimate_conditioned(&chain, &p, &mu0, 10.0, &cfg(20_000, 1.0)).unwrap();
        let (exact, _) = evolution::conditioned_law(&chain, &p, &mu0, 10.0).unwrap();
        for x in 0..5 {
            let z = (est.law.weights()[x] - exact.weights()[x]) / est.std_errors[x].max(1e-12);
            assert!(z.abs() < 4.0, "state {x}: z = {z}");
        }
    }

    #[test]
    fn conditioned_estimate_at_time_zero_is_initial_law() {
        let chain: AbsorbingChain = models::bd_uniform(3).unwrap().into();
        let p = perron(&chain).unwrap();
        let est = estimate_conditioned(&chain, &p, &ProbDist::dirac(3, 1), 0.0, &cfg(300, 1.0)).unwrap();
        assert_eq!(est.law.weights(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn too_few_survivors_is_reported() {
        let chain: AbsorbingChain = models::two_point().into();
        let p = perron(&chain).unwrap();
        let err = estimate_conditioned(&chain, &p, &ProbDist::uniform(2), 10.0, &cfg(1000, 1.0)).unwrap_err();
        assert!(matches!(err, QsdError::TooFewSurvivors { .. }));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn feynman_kac_matches_exact_law_and_survival() {
        let chain: AbsorbingChain = models::bd_uniform(5).unwrap().into();
        let p = perron(&chain).unwrap();
        let mu0 = ProbDist::dirac(5, 4);
        let (exact, survival) = evolution::conditioned_law(&chain, &p, &mu0, 5.0).unwrap();
        let mut f = vec![0.0; 5];
        f[0] = 1.0;
        let fk = feynman_kac(&chain, &mu0, 5.0, &f, &cfg(20_000, 1.0)).unwrap();
        assert!(((fk.value - exact.weights()[0]) / fk.std_error).abs() < 4.0, "{fk:?}");
        assert!(((fk.survival - survival) / fk.survival_std_error).abs() < 4.0, "{fk:?}");
    }

    #[test]
    fn feynman_kac_without_killing_is_plain_average() {
        let l = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let chain: AbsorbingChain = ContinuousChain::new(StateSpace::numbered(0, 2), l, DVector::zeros(2)).unwrap().into();
        let fk = feynman_kac(&chain, &ProbDist::dirac(2, 0), 1.0, &[1.0, 0.0], &cfg(4000, 1.0)).unwrap();
        assert_eq!(fk.survival, 1.0);
        let exact = 0.5 * (1.0 + (-2.0f64).exp());
        assert!(((fk.value - exact) / fk.std_error).abs() < 4.0);
    }

    #[test]
    fn discrete_chain_simulation() {
        let chain: AbsorbingChain = models::intro_walk(3).unwrap().into();
        let p = perron(&chain).unwrap();
        assert!(matches!(simulate(&chain, &p.nu, &cfg(10, 2.5)), Err(QsdError::FractionalTime(_))));
        let mu0 = ProbDist::dirac(3, 0);
        let est = estimate_conditioned(&chain, &p, &mu0, 4.0, &cfg(20_000, 1.0)).unwrap();
        let (exact, _) = evolution::conditioned_law(&chain, &p, &mu0, 4.0).unwrap();
        let mut f = vec![0.0; 3];
        f[1] = 1.0;
        let fk = feynman_kac(&chain, &mu0, 4.0, &f, &cfg(20_000, 1.0)).unwrap();
        assert!(((fk.value - exact.weights()[1]) / fk.std_error).abs() < 4.0);
        for x in 0..3 {
            let z = (est.law.weights()[x] - exact.weights()[x]) / est.std_errors[x].max(1e-12);
            assert!(z.abs() < 4.0);
        }
    }
}
