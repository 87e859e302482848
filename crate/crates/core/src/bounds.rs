//! Explicit `C·e^{-ρt}` certificates on `sup_{μ₀} ‖μ_t - ν‖` and the
//! comparison envelopes between the chain and its Doob transform.
//!
//! All distances use the analyst's total variation `Σ|m(x)|`, which is twice
//! the probabilist one; [`to_probabilist_tv`] converts.

use serde::Serialize;

use crate::chain::{AbsorbingChain, ProbDist};
use crate::doob::DoobChain;
use crate::error::{QsdError, Result};
use crate::evolution::{self, Propagator};
use crate::funineq::FunctionalConstants;
use crate::spectral::{PerronData, TimeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// Spectral gap of the symmetrized Doob generator.
    Thm2,
    /// Reversible case, `(φ²η)∧` prefactor.
    #[serde(rename = "thm3_a")]
    Thm3A,
    /// Reversible case, `η∧` prefactor.
    #[serde(rename = "thm3_b")]
    Thm3B,
    Lsi,
    LsiReversible,
    ProductTv,
    ProductLsi,
}

impl CurveKind {
    pub fn name(self) -> &'static str {
        match self {
            CurveKind::Thm2 => "thm2",
            CurveKind::Thm3A => "thm3_a",
            CurveKind::Thm3B => "thm3_b",
            CurveKind::Lsi => "lsi",
            CurveKind::LsiReversible => "lsi_reversible",
            CurveKind::ProductTv => "product_tv",
            CurveKind::ProductLsi => "product_lsi",
        }
    }
}

/// `t ↦ C e^{-ρt}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCurve {
    pub prefactor: f64,
    pub rate: f64,
    pub kind: CurveKind,
}

impl BoundCurve {
    pub fn new(prefactor: f64, rate: f64, kind: CurveKind) -> Result<Self> {
        if !(prefactor > 0.0 && prefactor.is_finite()) {
            return Err(QsdError::InvalidParameter(format!("{} prefactor must be positive, got {prefactor}", kind.name())));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(QsdError::InvalidParameter(format!("{} rate must be positive, got {rate}", kind.name())));
        }
        Ok(BoundCurve { prefactor, rate, kind })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.prefactor * (-self.rate * t).exp()
    }

    /// First time the curve reaches `eps`; 0 when `eps ≥ C` already.
    pub fn mixing_time(&self, eps: f64) -> f64 {
        ((self.prefactor / eps).ln() / self.rate).max(0.0)
    }
}

/// Analyst TV (`Σ|m|`) to probabilist TV (`sup_A |m(A)|`).
pub fn to_probabilist_tv(tv: f64) -> f64 {
    0.5 * tv
}

fn continuous_only(p: &PerronData, what: &str) -> Result<()> {
    if p.kind != TimeKind::Continuous {
        return Err(QsdError::InvalidParameter(format!("{what} applies to continuous-time chains")));
    }
    Ok(())
}

fn reversible_only(p: &PerronData) -> Result<()> {
    if !p.reversible {
        // the defect itself lives with the chain, not the Perron data
        return Err(QsdError::NotReversible(f64::NAN));
    }
    Ok(())
}

/// Prefactor `√(η[φφ*]/(φφ*η)∧) · φ∨/φ∧`, rate `λ̃`.
pub fn thm2_curve(p: &PerronData, gap_tilde: f64) -> Result<BoundCurve> {
    continuous_only(p, "the spectral-gap bound")?;
    let c = (p.eta_phi_phistar() / p.min_phi_phistar_eta()).sqrt() * p.ratio;
    BoundCurve::new(c, gap_tilde, CurveKind::Thm2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thm3Variant {
    A,
    B,
}

/// Reversible bounds at rate `λ₂ - λ₁`.
///
/// Variant A: `√(1/(φ²η)∧) · φ∨/φ∧`. Variant B: `√(1/η∧) · (φ∨/φ∧)²`, never smaller.
pub fn thm3_curve(p: &PerronData, lambda2: f64, variant: Thm3Variant) -> Result<BoundCurve> {
    continuous_only(p, "the reversible bound")?;
    reversible_only(p)?;
    let rate = lambda2 - p.lambda1;
    match variant {
        Thm3Variant::A => BoundCurve::new((1.0 / p.min_phi2_eta()).sqrt() * p.ratio, rate, CurveKind::Thm3A),
        Thm3Variant::B => BoundCurve::new((1.0 / p.eta().min()).sqrt() * p.ratio * p.ratio, rate, CurveKind::Thm3B),
    }
}

/// Entropy bound at rate `α̃/2`.
///
/// General: `√(2 (φ∨/φ∧) ln(η[φφ*]/(φφ*η)∧))`. Reversible: `√(2 (φ∨/φ∧) ln(1/(φ²η)∧))`.
pub fn lsi_curve(p: &PerronData, alpha: f64, reversible: bool) -> Result<BoundCurve> {
    continuous_only(p, "the log-Sobolev bound")?;
    if !(alpha > 0.0) {
        return Err(QsdError::InvalidParameter(format!("log-Sobolev constant must be positive, got {alpha}")));
    }
    if reversible {
        reversible_only(p)?;
        let c = (2.0 * p.ratio * (1.0 / p.min_phi2_eta()).ln()).sqrt();
        BoundCurve::new(c, alpha / 2.0, CurveKind::LsiReversible)
    } else {
        let c = (2.0 * p.ratio * (p.eta_phi_phistar() / p.min_phi_phistar_eta()).ln()).sqrt();
        BoundCurve::new(c, alpha / 2.0, CurveKind::Lsi)
    }
}

/// Bounds for the `d`-fold product of a reversible chain, from single-factor data.
///
/// `(√(1/η∧)(φ∨/φ∧)²)^d e^{-λ̃t}` and `√(2d (φ∨/φ∧)^d ln((φ∨/φ∧)/η∧)) e^{-α̃t/2}`.
/// These certify the plain tensor sum of `d` copies; the `1/d`-averaged
/// product of [`crate::models::product_chain`] runs `d` times slower.
pub fn product_curves(p: &PerronData, constants: &FunctionalConstants, d: u32) -> Result<(BoundCurve, BoundCurve)> {
    continuous_only(p, "product bounds")?;
    reversible_only(p)?;
    if d == 0 {
        return Err(QsdError::InvalidParameter("product dimension must be at least 1".into()));
    }
    let gap = constants.gap_tilde.ok_or_else(|| QsdError::InvalidParameter("spectral gap missing".into()))?;
    let alpha = constants.lsi.as_ref().map(|b| b.lower).ok_or_else(|| QsdError::InvalidParameter("log-Sobolev bracket missing".into()))?;
    let eta_min = p.eta().min();
    let tv = ((1.0 / eta_min).sqrt() * p.ratio * p.ratio).powi(d as i32);
    let df = d as f64;
    let lsi = (2.0 * df * (p.ratio / eta_min).ln() * p.ratio.powi(d as i32)).sqrt();
    Ok((BoundCurve::new(tv, gap, CurveKind::ProductTv)?, BoundCurve::new(lsi, alpha / 2.0, CurveKind::ProductLsi)?))
}

/// Every certificate available from the computed constants.
///
/// The log-Sobolev curves use the lower end of the bracket, so they stay valid
/// when the optimizer has not reached the true infimum.
pub fn applicable_curves(p: &PerronData, constants: &FunctionalConstants, lambda2: Option<f64>) -> Result<Vec<BoundCurve>> {
    let mut out = Vec::new();
    if p.kind != TimeKind::Continuous {
        return Ok(out);
    }
    if let Some(gap) = constants.gap_tilde.filter(|g| *g > 0.0) {
        out.push(thm2_curve(p, gap)?);
    }
    if p.reversible {
        if let Some(l2) = lambda2.filter(|l| *l > p.lambda1) {
            out.push(thm3_curve(p, l2, Thm3Variant::A)?);
            out.push(thm3_curve(p, l2, Thm3Variant::B)?);
        }
    }
    if let Some(alpha) = constants.lsi.as_ref().map(|b| b.lower).filter(|a| *a > 0.0) {
        // a one-point ratio gives ln 1 = 0 and no curve
        if let Ok(c) = lsi_curve(p, alpha, false) {
            out.push(c);
        }
        if p.reversible {
            if let Ok(c) = lsi_curve(p, alpha, true) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub lower: f64,
    pub actual: f64,
    pub upper: f64,
}

impl Envelope {
    /// `min(actual - lower, upper - actual)`; negative means a violation.
    pub fn slack(&self) -> f64 {
        (self.actual - self.lower).min(self.upper - self.actual)
    }
}

/// `(φ∧/2φ∨)‖μ̃₀P̃_t - η̃‖ ≤ ‖μ_t - ν‖ ≤ 2(φ∨/φ∧)‖μ̃₀P̃_t - η̃‖`.
pub fn thm1_envelope(chain: &AbsorbingChain, p: &PerronData, d: &DoobChain, mu0: &ProbDist, t: f64) -> Result<Envelope> {
    let prop = Propagator::new(chain, p)?;
    thm1_envelope_with(&prop, p, d, mu0, t)
}

/// [`thm1_envelope`] reusing a propagator across many calls.
pub fn thm1_envelope_with(prop: &Propagator, p: &PerronData, d: &DoobChain, mu0: &ProbDist, t: f64) -> Result<Envelope> {
    let (law, _) = prop.propagate(mu0, t)?;
    let doob = evolution::doob_law(d, &evolution::doob_initial(p, mu0)?, t)?;
    let tilde = evolution::tv_distance(&doob, &d.invariant);
    Ok(Envelope {
        lower: tilde / (2.0 * p.ratio),
        actual: evolution::tv_distance(&law, &p.nu),
        upper: 2.0 * p.ratio * tilde,
    })
}

/// Lower `ν`-median of `f`: the smallest value `m` with `ν(f ≤ m) ≥ 1/2`.
pub fn lower_median(f: &[f64], nu: &ProbDist) -> f64 {
    let mut idx: Vec<usize> = (0..f.len()).collect();
    idx.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
    let mut acc = 0.0;
    for &i in &idx {
        acc += nu.weights()[i];
        if acc >= 0.5 - 1e-15 {
            return f[i];
        }
    }
    f[idx[idx.len() - 1]]
}

/// `(∫|f - m|dν, ‖μ - ν‖, 2∫|f - m|dν)` with `f = dμ/dν` and `m` its lower median.
pub fn median_envelope(mu: &ProbDist, nu: &ProbDist) -> Result<(f64, f64, f64)> {
    let f: Vec<f64> = mu
        .weights()
        .iter()
        .zip(nu.weights())
        .enumerate()
        .map(|(x, (a, b))| if *b > 0.0 { Ok(a / b) } else { Err(QsdError::ReferenceZero(x)) })
        .collect::<Result<_>>()?;
    let m = lower_median(&f, nu);
    let integral: f64 = f.iter().zip(nu.weights()).map(|(v, w)| (v - m).abs() * w).sum();
    Ok((integral, evolution::tv_distance(mu, nu), 2.0 * integral))
}

/// Distance before and after reweighting both laws by a positive `ψ`.
///
/// Returns `((ψ∧/2ψ∨)‖μ̃ - ν̃‖, ‖μ - ν‖, 2(ψ∨/ψ∧)‖μ̃ - ν̃‖)`, which is ordered.
pub fn reweight_envelope(mu: &ProbDist, nu: &ProbDist, psi: &[f64]) -> Result<Envelope> {
    if psi.iter().any(|v| !(*v > 0.0)) {
        return Err(QsdError::InvalidParameter("reweighting function must be positive".into()));
    }
    let lo = psi.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = psi.iter().copied().fold(0.0, f64::max);
    let tilt = |m: &ProbDist| {
        let w: Vec<f64> = m.weights().iter().zip(psi).map(|(a, b)| a * b).collect();
        ProbDist::from_unnormalized(&w)
    };
    let tilde = evolution::tv_distance(&tilt(mu)?, &tilt(nu)?);
    Ok(Envelope { lower: lo / (2.0 * hi) * tilde, actual: evolution::tv_distance(mu, nu), upper: 2.0 * hi / lo * tilde })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{ContinuousChain, StateSpace};
    use crate::doob::doob;
    use crate::funineq::{functional_constants, LsiMode};
    use crate::models;
    use crate::spectral::{dirichlet_spectrum, perron};
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn analyzed(chain: AbsorbingChain, lsi: Option<LsiMode>) -> (AbsorbingChain, PerronData, DoobChain, FunctionalConstants) {
        let p = perron(&chain).unwrap();
        let d = doob(&chain, &p).unwrap();
        let k = functional_constants(&chain, &p, &d, lsi).unwrap();
        (chain, p, d, k)
    }

    fn uniform_walk(n: usize) -> ContinuousChain {
        let l = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        ContinuousChain::new(StateSpace::numbered(0, n), l, DVector::zeros(n)).unwrap()
    }

    #[test]
    fn two_point_thm2_and_lsi_constants() {
        let (_, p, _, k) = analyzed(models::two_point().into(), Some(LsiMode::Bracket));
        let c = thm2_curve(&p, k.gap_tilde.unwrap()).unwrap();
        assert_relative_eq!(c.prefactor, 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(c.rate, 2.0, epsilon = 1e-12);
        let l = lsi_curve(&p, 1.0, false).unwrap();
        assert_relative_eq!(l.prefactor, (2.0 * 2f64.ln()).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(l.rate, 0.5);
        let lr = lsi_curve(&p, 1.0, true).unwrap();
        assert_relative_eq!(lr.prefactor, l.prefactor, epsilon = 1e-12);
    }

    #[test]
    fn no_killing_reduces_to_plain_constants() {
        for n in [3, 5] {
            let (_, p, _, k) = analyzed(uniform_walk(n).into(), None);
            let c = thm2_curve(&p, k.gap_tilde.unwrap()).unwrap();
            assert_relative_eq!(c.prefactor, (n as f64).sqrt(), epsilon = 1e-10);
            // gap of the complete graph with unit rates
            assert_relative_eq!(c.rate, n as f64, epsilon = 1e-10);
            let l = lsi_curve(&p, 1.0, false).unwrap();
            assert_relative_eq!(l.prefactor, (2.0 * (n as f64).ln()).sqrt(), epsilon = 1e-10);
        }
    }

    #[test]
    fn variant_a_never_exceeds_variant_b() {
        for chain in [models::bd_uniform(6).unwrap(), models::bd_biased(8, 2.0).unwrap(), models::bd_biased(8, 0.5).unwrap()] {
            let chain: AbsorbingChain = chain.into();
            let p = perron(&chain).unwrap();
            let l2 = dirichlet_spectrum(&chain).unwrap().lambda2.unwrap();
            let a = thm3_curve(&p, l2, Thm3Variant::A).unwrap();
            let b = thm3_curve(&p, l2, Thm3Variant::B).unwrap();
            assert!(a.prefactor <= b.prefactor * (1.0 + 1e-12));
            assert_eq!(a.rate, b.rate);
        }
    }

    #[test]
    fn non_reversible_chain_has_no_thm3() {
        let chain: AbsorbingChain = models::cycle_chain(5).unwrap().into();
        let p = perron(&chain).unwrap();
        assert!(matches!(thm3_curve(&p, 1.0, Thm3Variant::A), Err(QsdError::NotReversible(_))));
    }

    #[test]
    fn bd_uniform_variant_a_matches_large_n_asymptotics() {
        let n = 60;
        let chain: AbsorbingChain = models::bd_uniform(n).unwrap().into();
        let p = perron(&chain).unwrap();
        let l2 = dirichlet_spectrum(&chain).unwrap().lambda2.unwrap();
        let c = thm3_curve(&p, l2, Thm3Variant::A).unwrap();
        let predicted = 2.0 * 2f64.sqrt() / std::f64::consts::PI.powi(2) * (n as f64).powf(2.5);
        assert!((c.prefactor / predicted - 1.0).abs() < 0.05, "{} vs {predicted}", c.prefactor);
        // 2(cos(π/2N) - cos(3π/2N)) ~ 2π²/N²
        let rate = 2.0 * std::f64::consts::PI.powi(2) / (n * n) as f64;
        assert!((c.rate / rate - 1.0).abs() < 0.01);
    }

    #[test]
    fn product_curves_for_two_point() {
        let (_, p, _, k) = analyzed(models::two_point().into(), Some(LsiMode::Bracket));
        for d in 1..=5u32 {
            let (tv, lsi) = product_curves(&p, &k, d).unwrap();
            for t in [0.0, 0.3, 2.0] {
                assert_relative_eq!(tv.eval(t), 2f64.powf(d as f64 / 2.0) * (-2.0 * t).exp(), epsilon = 1e-12);
                assert_relative_eq!(lsi.eval(t), (2.0 * d as f64 * 2f64.ln()).sqrt() * (-t / 2.0).exp(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn single_factor_product_is_variant_b() {
        let (chain, p, _, k) = analyzed(models::bd_uniform(5).unwrap().into(), Some(LsiMode::Bracket));
        let l2 = dirichlet_spectrum(&chain).unwrap().lambda2.unwrap();
        let (tv, _) = product_curves(&p, &k, 1).unwrap();
        let b = thm3_curve(&p, l2, Thm3Variant::B).unwrap();
        assert_relative_eq!(tv.prefactor, b.prefactor, max_relative = 1e-12);
        assert_relative_eq!(tv.rate, b.rate, max_relative = 1e-8);
    }

    #[test]
    fn mixing_time_inversions() {
        let c = BoundCurve::new(1.0, 3.0, CurveKind::Thm2).unwrap();
        assert_eq!(c.mixing_time(1.0), 0.0);
        assert_eq!(c.mixing_time(2.0), 0.0);
        let l = BoundCurve::new((2.0 * 2f64.ln()).sqrt(), 0.5, CurveKind::Lsi).unwrap();
        let expected = 2.0 * ((2.0 * 2f64.ln()).sqrt().ln() + 2f64.ln());
        assert_relative_eq!(l.mixing_time(0.5), expected, epsilon = 1e-12);
        assert_relative_eq!(l.eval(l.mixing_time(0.5)), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn curve_rejects_degenerate_parameters() {
        assert!(BoundCurve::new(0.0, 1.0, CurveKind::Thm2).is_err());
        assert!(BoundCurve::new(1.0, -1.0, CurveKind::Thm2).is_err());
    }

    #[test]
    fn thm1_envelope_holds_on_bd_uniform() {
        let chain: AbsorbingChain = models::bd_uniform(5).unwrap().into();
        let p = perron(&chain).unwrap();
        let d = doob(&chain, &p).unwrap();
        for t in [0.5, 2.0, 8.0] {
            let e = thm1_envelope(&chain, &p, &d, &ProbDist::dirac(5, 4), t).unwrap();
            assert!(e.lower <= e.actual && e.actual <= e.upper, "{e:?}");
        }
    }

    #[test]
    fn thm1_without_killing_is_a_factor_two_sandwich() {
        let chain: AbsorbingChain = uniform_walk(4).into();
        let p = perron(&chain).unwrap();
        let d = doob(&chain, &p).unwrap();
        let e = thm1_envelope(&chain, &p, &d, &ProbDist::dirac(4, 0), 0.2).unwrap();
        assert_relative_eq!(e.lower * 4.0, e.upper, max_relative = 1e-9);
        assert_relative_eq!(e.lower * 2.0, e.actual, max_relative = 1e-9);
    }

    #[test]
    fn median_envelope_examples() {
        let nu = ProbDist::uniform(4);
        assert_eq!(median_envelope(&nu, &nu).unwrap(), (0.0, 0.0, 0.0));
        let (i, tv, up) = median_envelope(&ProbDist::dirac(4, 2), &nu).unwrap();
        assert_relative_eq!(i, 1.0, epsilon = 1e-12);
        assert_relative_eq!(tv, 1.5, epsilon = 1e-12);
        assert_relative_eq!(up, 2.0, epsilon = 1e-12);
        assert!(matches!(median_envelope(&nu, &ProbDist::dirac(4, 0)), Err(QsdError::ReferenceZero(1))));
    }

    #[test]
    fn applicable_curves_on_two_point() {
        let (_, p, _, k) = analyzed(models::two_point().into(), Some(LsiMode::Bracket));
        let kinds: Vec<_> = applicable_curves(&p, &k, Some(3.0)).unwrap().iter().map(|c| c.kind).collect();
        assert_eq!(kinds, vec![CurveKind::Thm2, CurveKind::Thm3A, CurveKind::Thm3B, CurveKind::Lsi, CurveKind::LsiReversible]);
        assert_eq!(to_probabilist_tv(2.0), 1.0);
    }

    fn law(n: usize) -> impl Strategy<Value = ProbDist> {
        prop::collection::vec(0.01f64..1.0, n).prop_map(|w| ProbDist::from_unnormalized(&w).unwrap())
    }

    proptest! {
        #[test]
        fn median_sandwich(mu in law(6), nu in law(6)) {
            let (lo, tv, hi) = median_envelope(&mu, &nu).unwrap();
            prop_assert!(lo <= tv + 1e-12 && tv <= hi + 1e-12);
        }

        #[test]
        fn reweighting_sandwich(mu in law(5), nu in law(5), psi in prop::collection::vec(0.1f64..10.0, 5)) {
            let e = reweight_envelope(&mu, &nu, &psi).unwrap();
            prop_assert!(e.slack() >= -1e-12, "{:?}", e);
        }
    }
}
