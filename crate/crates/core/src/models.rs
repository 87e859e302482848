//! Built-in chains for the worked examples, with their closed-form data.
//!
//! Every constructor returns a validated chain; closed forms that the
//! generic solvers should reproduce are attached in `meta` or exposed as
//! separate functions so tests can compare the two routes.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::chain::{AbsorbingChain, ContinuousChain, DiscreteChain, ProbDist, StateSpace};
use crate::error::{QsdError, Result};
use crate::linalg;
use crate::spectral;

/// Largest state count accepted by [`product_chain`].
pub const PRODUCT_SIZE_GUARD: usize = 20_000;

fn invalid(msg: impl Into<String>) -> QsdError {
    QsdError::InvalidParameter(msg.into())
}

fn eta_meta(c: &ContinuousChain) -> Value {
    match spectral::invariant_measure(c) {
        Ok(eta) => json!(eta.weights()),
        Err(_) => Value::Null,
    }
}

/// Symmetric two-point chain killed at rate 1 everywhere.
pub fn two_point() -> ContinuousChain {
    let l = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 1.0, -1.0]);
    ContinuousChain::new(StateSpace::numbered(1, 2), l, DVector::from_element(2, 1.0))
        .expect("static model")
        .with_meta(json!({"builtin": "two_point"}))
}

/// Birth and death on `1..=N`, unit rates, `L(N, N-1) = 2`, killing 1 at state 1.
///
/// The doubled last rate makes `sin((2k+1)πx/2N)` exact eigenfunctions. The
/// invariant law of `L` is then uniform except for half weight at `N`.
pub fn bd_uniform(n: usize) -> Result<ContinuousChain> {
    if n < 2 {
        return Err(invalid(format!("bd_uniform needs N >= 2, got {n}")));
    }
    let mut l = DMatrix::zeros(n, n);
    for x in 0..n - 1 {
        l[(x, x + 1)] = 1.0;
        l[(x + 1, x)] = 1.0;
    }
    l[(n - 1, n - 2)] = 2.0;
    let mut v = DVector::zeros(n);
    v[0] = 1.0;
    let c = ContinuousChain::new(StateSpace::numbered(1, n), l, v)?;
    let spectrum: Vec<f64> = bd_uniform_spectrum(n);
    let meta = json!({"builtin": "bd_uniform", "N": n, "eta": eta_meta(&c), "spectrum": spectrum});
    Ok(c.with_meta(meta))
}

/// `{2(1 - cos((2k+1)π/2N)) : k = 0..N-1}`, ascending.
pub fn bd_uniform_spectrum(n: usize) -> Vec<f64> {
    (0..n).map(|k| 2.0 * (1.0 - ((2 * k + 1) as f64 * PI / (2.0 * n as f64)).cos())).collect()
}

/// Birth and death on `1..=N` with up-rate `r`, down-rate 1, `L(N, N-1) = 1 + r`,
/// killing 1 at state 1.
pub fn bd_biased(n: usize, r: f64) -> Result<ContinuousChain> {
    if n < 2 {
        return Err(invalid(format!("bd_biased needs N >= 2, got {n}")));
    }
    if !(r > 0.0) || !r.is_finite() || r == 1.0 {
        return Err(invalid(format!("bd_biased needs r > 0, r != 1, got {r}")));
    }
    let mut l = DMatrix::zeros(n, n);
    for x in 0..n - 1 {
        l[(x, x + 1)] = r;
        l[(x + 1, x)] = 1.0;
    }
    l[(n - 1, n - 2)] = 1.0 + r;
    let mut v = DVector::zeros(n);
    v[0] = 1.0;
    let c = ContinuousChain::new(StateSpace::numbered(1, n), l, v)?;
    let meta = json!({"builtin": "bd_biased", "N": n, "r": r, "eta": eta_meta(&c)});
    Ok(c.with_meta(meta))
}

/// Asymptotic equivalent `(r+1)(r-1)² / (2 r^{N+1})` of `λ₁` for `r > 1`.
pub fn biased_lambda1_asymptotic(n: usize, r: f64) -> f64 {
    0.5 * (r + 1.0) * (r - 1.0).powi(2) / r.powi(n as i32 + 1)
}

/// Enclosures of `λ₁` and `λ₂` for `r < 1`, `N ≥ 4`: `((lo₁, hi₁), (lo₂, hi₂))`.
pub fn biased_small_r_bounds(n: usize, r: f64) -> ((f64, f64), (f64, f64)) {
    let base = (1.0 - r.sqrt()).powi(2);
    let s = |a: f64| 4.0 * r.sqrt() * a.sin().powi(2);
    let nf = n as f64;
    (
        (base + s((1.0 - r) / (2.0 * nf + 4.0)), base + s(PI / (2.0 * nf))),
        (base + s(PI / (2.0 * nf)), base + s(PI / nf)),
    )
}

/// Leading-order lower bound `(1-r)²√r / (2N²)` on `λ₂ - λ₁` for `r < 1`.
pub fn biased_gap_lower(n: usize, r: f64) -> f64 {
    (1.0 - r).powi(2) * r.sqrt() / (2.0 * (n * n) as f64)
}

/// Coefficients (ascending in `X`) of the degree-`2N` polynomial whose roots
/// are the `ρ` with `Ψ(ρ)` in the Dirichlet spectrum of [`bd_biased`].
///
/// It is `(X^{2N+2} - X^{2N} + r^{1-N} X² - r^{-N-1}) / (X² - 1/r)`; in `Y = X²`
/// the division is exact and done synthetically.
pub fn biased_polynomial(n: usize, r: f64) -> Vec<f64> {
    // numerator in Y, ascending: -r^{-N-1}, r^{1-N}, 0, ..., -1 (Y^N), 1 (Y^{N+1})
    let mut num = vec![0.0; n + 2];
    num[0] = -r.powi(-(n as i32) - 1);
    num[1] += r.powi(1 - n as i32);
    num[n] += -1.0;
    num[n + 1] += 1.0;
    // divide by (Y - 1/r), highest degree first
    let root = 1.0 / r;
    let mut quot = vec![0.0; n + 1];
    let mut carry = 0.0;
    for k in (1..=n + 1).rev() {
        carry = num[k] + carry * root;
        quot[k - 1] = carry;
    }
    let mut coeffs = vec![0.0; 2 * n + 1];
    for (k, q) in quot.iter().enumerate() {
        coeffs[2 * k] = *q;
    }
    coeffs
}

fn poly_eval(coeffs: &[f64], z: Complex64) -> (Complex64, f64) {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut scale = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
        scale = scale * z.norm() + c.abs();
    }
    (acc, scale)
}

/// Roots of a real polynomial (ascending coefficients) via its companion matrix.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let mut comp = DMatrix::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let mut roots = match linalg::eigenvalues(&comp) {
        Ok(r) => r,
        Err(_) => aberth(coeffs)?,
    };
    // Newton polish
    let deriv: Vec<f64> = (1..=deg).map(|k| k as f64 * coeffs[k]).collect();
    for z in roots.iter_mut() {
        for _ in 0..3 {
            let (p, _) = poly_eval(coeffs, *z);
            let (dp, _) = poly_eval(&deriv, *z);
            if dp.norm() > 0.0 {
                let step = p / dp;
                if step.is_finite() {
                    *z -= step;
                }
            }
        }
    }
    Ok(roots)
}

/// Simultaneous Aberth iteration, used when the companion Schur form stalls.
fn aberth(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    let deriv: Vec<f64> = (1..=deg).map(|k| k as f64 * coeffs[k]).collect();
    let radius = 1.0 + coeffs[..deg].iter().map(|c| (c / coeffs[deg]).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> =
        (0..deg).map(|k| Complex64::from_polar(radius * 0.5, 2.0 * PI * (k as f64 + 0.25) / deg as f64)).collect();
    for _ in 0..500 {
        let mut worst: f64 = 0.0;
        for i in 0..deg {
            let (p, _) = poly_eval(coeffs, z[i]);
            let (dp, _) = poly_eval(&deriv, z[i]);
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg).filter(|&j| j != i).map(|j| 1.0 / (z[i] - z[j])).sum();
            let w = ratio / (1.0 - ratio * repulsion);
            if w.is_finite() {
                z[i] -= w;
                worst = worst.max(w.norm() / z[i].norm().max(1e-300));
            }
        }
        if worst < 1e-15 {
            return Ok(z);
        }
    }
    Err(QsdError::SolverDivergence("polynomial root iteration did not converge".into()))
}

/// All `2N` roots, as `±√y` over the roots `y` of the polynomial in `X²`.
pub fn biased_roots(n: usize, r: f64) -> Result<Vec<Complex64>> {
    let coeffs = biased_polynomial(n, r);
    let even: Vec<f64> = coeffs.iter().step_by(2).copied().collect();
    let mut out = Vec::with_capacity(2 * n);
    for y in poly_roots(&even)? {
        let s = y.sqrt();
        out.push(s);
        out.push(-s);
    }
    Ok(out)
}

/// `Ψ(ρ) = ((1+r)ρ - 1 - rρ²)/ρ`.
pub fn psi_map(rho: Complex64, r: f64) -> Complex64 {
    ((1.0 + r) * rho - 1.0 - r * rho * rho) / rho
}

/// Both preimages of `λ` under `Ψ`, principal square root.
pub fn psi_preimages(lambda: f64, r: f64) -> (Complex64, Complex64) {
    let disc = Complex64::new((lambda - 1.0 - r).powi(2) - 4.0 * r, 0.0).sqrt();
    let b = r + 1.0 - lambda;
    ((b + disc) / (2.0 * r), (b - disc) / (2.0 * r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasedEigenCertificate {
    pub lambda: f64,
    pub rho_plus: Complex64,
    pub rho_minus: Complex64,
    /// `|ρ₊ρ₋ - 1/r|`.
    pub product_defect: f64,
    /// `|Ψ(ρ₊) - λ|`.
    pub psi_defect: f64,
    /// `|P(ρ₊)|` relative to the sum of the absolute terms.
    pub polynomial_defect: f64,
    /// Relative eigen-equation defect of `ρ₊ˣ - ρ₋ˣ`.
    pub residual: f64,
}

/// Certifies each eigenvalue of the biased chain through `ρ₊ˣ - ρ₋ˣ`.
pub fn biased_certify(n: usize, r: f64, spectrum: &[f64]) -> Result<Vec<BiasedEigenCertificate>> {
    let chain = bd_biased(n, r)?;
    let a = -chain.sub_generator();
    let coeffs = biased_polynomial(n, r);
    let mut out = Vec::with_capacity(spectrum.len());
    for &lambda in spectrum {
        let (rp, rm) = psi_preimages(lambda, r);
        let product_defect = (rp * rm - 1.0 / r).norm();
        let psi_defect = (psi_map(rp, r) - lambda).norm();
        let (p, scale) = poly_eval(&coeffs, rp);
        let polynomial_defect = p.norm() / scale.max(f64::MIN_POSITIVE);
        let phi: Vec<Complex64> = (1..=n).map(|x| rp.powi(x as i32) - rm.powi(x as i32)).collect();
        let pmax = phi.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for x in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for y in 0..n {
                s += a[(x, y)] * phi[y];
            }
            worst = worst.max((s - lambda * phi[x]).norm());
        }
        let residual = worst / (pmax * a.amax());
        let cert = BiasedEigenCertificate { lambda, rho_plus: rp, rho_minus: rm, product_defect, psi_defect, polynomial_defect, residual };
        if product_defect > 1e-10 || psi_defect > 1e-9 || polynomial_defect > 1e-8 || residual > 1e-8 {
            return Err(QsdError::CertificationFailure(format!(
                "eigenvalue {lambda}: product {product_defect:e}, Ψ {psi_defect:e}, polynomial {polynomial_defect:e}, residual {residual:e}"
            )));
        }
        out.push(cert);
    }
    Ok(out)
}

/// Directed cycle on `Z_N` at unit rate, killed at rate 1 from state 0.
pub fn cycle_chain(n: usize) -> Result<ContinuousChain> {
    if n < 3 {
        return Err(invalid(format!("cycle needs N >= 3, got {n}")));
    }
    let mut l = DMatrix::zeros(n, n);
    for x in 0..n {
        l[(x, (x + 1) % n)] = 1.0;
    }
    let mut v = DVector::zeros(n);
    v[0] = 1.0;
    let c = ContinuousChain::new(StateSpace::numbered(0, n), l, v)?;
    let spec: Vec<[f64; 2]> = cycle_spectrum(n)?.iter().map(|z| [z.re, z.im]).collect();
    Ok(c.with_meta(json!({"builtin": "cycle", "N": n, "spectrum": spec})))
}

/// Roots of `X^N + X^{N-1} - 1`.
pub fn cycle_roots(n: usize) -> Result<Vec<Complex64>> {
    let mut coeffs = vec![0.0; n + 1];
    coeffs[0] = -1.0;
    coeffs[n - 1] = 1.0;
    coeffs[n] = 1.0;
    poly_roots(&coeffs)
}

/// Spectrum `{1 - c}` of `V - L` for the cycle, sorted by real part.
pub fn cycle_spectrum(n: usize) -> Result<Vec<Complex64>> {
    let mut ev: Vec<Complex64> = cycle_roots(n)?.into_iter().map(|c| 1.0 - c).collect();
    linalg::sort_complex(&mut ev);
    Ok(ev)
}

/// `φ_c(0) = 1`, `φ_c(x) = c^{x-N}` otherwise.
pub fn cycle_eigenvector(n: usize, c: Complex64) -> Vec<Complex64> {
    (0..n).map(|x| if x == 0 { Complex64::new(1.0, 0.0) } else { c.powi(x as i32 - n as i32) }).collect()
}

/// Averaged tensor product of `d` copies: `L⁽ᵈ⁾ = (1/d) Σ L_k`, `V⁽ᵈ⁾ = (1/d) Σ V(x_k)`.
///
/// The averaging keeps `λ₁` fixed but divides every other gap by `d`.
pub fn product_chain(base: &ContinuousChain, d: usize) -> Result<ContinuousChain> {
    if d == 0 {
        return Err(invalid("product needs d >= 1"));
    }
    let n = base.n();
    let total = (n as u128).checked_pow(d as u32).unwrap_or(u128::MAX);
    if total > PRODUCT_SIZE_GUARD as u128 {
        return Err(QsdError::SizeGuard(format!("{n}^{d} states exceeds {PRODUCT_SIZE_GUARD}")));
    }
    let total = total as usize;
    let digits = |mut i: usize| -> Vec<usize> {
        let mut v = vec![0; d];
        for slot in v.iter_mut() {
            *slot = i % n;
            i /= n;
        }
        v
    };
    let l = base.rates();
    let v = base.killing();
    let df = d as f64;
    let mut rates = DMatrix::zeros(total, total);
    let mut kill = DVector::zeros(total);
    let mut labels = Vec::with_capacity(total);
    for i in 0..total {
        let xs = digits(i);
        labels.push(format!("({})", xs.iter().map(|&x| base.states().labels()[x].as_str()).collect::<Vec<_>>().join(",")));
        kill[i] = xs.iter().map(|&x| v[x]).sum::<f64>() / df;
        let mut stride = 1;
        for &x in &xs {
            for y in 0..n {
                if y != x && l[(x, y)] > 0.0 {
                    let j = i - x * stride + y * stride;
                    rates[(i, j)] += l[(x, y)] / df;
                }
            }
            stride *= n;
        }
    }
    let c = ContinuousChain::new(StateSpace::new(labels)?, rates, kill)?;
    let mut meta = json!({"builtin": "product", "d": d});
    if let Some(b) = base.meta().get("builtin") {
        meta["base"] = b.clone();
    }
    Ok(c.with_meta(meta))
}

/// Integer partitions of `n`, parts descending, ordered by number of parts
/// descending and then lexicographically ascending (so `1ⁿ` comes first).
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(rest: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for p in (1..=rest.min(max)).rev() {
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    out
}

/// Number of partitions of `n` into exactly `l` parts.
pub fn partition_count(n: usize, l: usize) -> usize {
    partitions(n).iter().filter(|p| p.len() == l).count()
}

fn binomial(n: usize, k: usize) -> u64 {
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

fn partition_label(p: &[usize]) -> String {
    p.iter().rev().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Exact rock-breaking kernel on all partitions of `n` as integer numerators
/// over `2ⁿ`, in the order of [`partitions`].
pub fn rock_breaking_numerators(n: usize) -> (Vec<Vec<usize>>, Vec<Vec<u64>>) {
    let parts = partitions(n);
    let index: BTreeMap<Vec<usize>, usize> = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let mut table = vec![vec![0u64; parts.len()]; parts.len()];
    for (i, lam) in parts.iter().enumerate() {
        // multiset of pieces so far -> number of binomial outcomes producing it
        let mut acc: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        acc.insert(Vec::new(), 1);
        for &m in lam {
            let mut next = BTreeMap::new();
            for (pieces, w) in &acc {
                for k in 0..=m {
                    let mut p = pieces.clone();
                    for piece in [k, m - k] {
                        if piece > 0 {
                            p.push(piece);
                        }
                    }
                    p.sort_unstable_by(|a, b| b.cmp(a));
                    *next.entry(p).or_insert(0) += w * binomial(m, k);
                }
            }
            acc = next;
        }
        for (p, w) in acc {
            table[i][index[&p]] += w;
        }
    }
    (parts, table)
}

/// Rock breaking on partitions of `n`, absorbed at `1ⁿ`.
pub fn rock_breaking(n: usize) -> Result<DiscreteChain> {
    if !(2..=12).contains(&n) {
        return Err(QsdError::SizeGuard(format!("rock_breaking needs 2 <= n <= 12, got {n}")));
    }
    let (parts, table) = rock_breaking_numerators(n);
    let denom = (1u64 << n) as f64;
    let m = parts.len() - 1;
    let sub = DMatrix::from_fn(m, m, |x, y| table[x + 1][y + 1] as f64 / denom);
    let absorb = DVector::from_fn(m, |x, _| table[x + 1][0] as f64 / denom);
    let labels: Vec<String> = parts[1..].iter().map(|p| partition_label(p)).collect();
    let phi: Vec<u64> = parts[1..].iter().map(|p| p.iter().map(|&x| binomial(x, 2)).sum()).collect();
    let meta = json!({
        "builtin": "rock_breaking",
        "n": n,
        "absorbing": partition_label(&parts[0]),
        "beta": 0.5,
        "phi": phi,
        "denominator": 1u64 << n,
        "numerators": table,
    });
    Ok(DiscreteChain::new(StateSpace::new(labels)?, sub, absorb)?.with_meta(meta))
}

/// Full `(N+1)×(N+1)` birth and death kernel on `0..=N`: holds `r` at 0,
/// steps down with `p`, up with `q = 1 - p`, holds `s` at `N`.
pub fn zhou_kernel(n: usize, p: f64, r: f64, s: f64) -> Result<DMatrix<f64>> {
    if n < 1 {
        return Err(invalid("zhou kernel needs N >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("p must lie in (0, 1), got {p}")));
    }
    for (name, v) in [("r", r), ("s", s)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(format!("{name} must lie in [0, 1], got {v}")));
        }
    }
    let q = 1.0 - p;
    let mut k = DMatrix::zeros(n + 1, n + 1);
    k[(0, 0)] = r;
    k[(0, 1)] = 1.0 - r;
    for x in 1..n {
        k[(x, x - 1)] = p;
        k[(x, x + 1)] = q;
    }
    k[(n, n - 1)] = 1.0 - s;
    k[(n, n)] = s;
    Ok(k)
}

/// The same chain seen as absorbing at `N` (requires `s = 1`), on `0..N-1`.
pub fn zhou_bd(n: usize, p: f64, r: f64, s: f64) -> Result<DiscreteChain> {
    if s != 1.0 {
        return Err(invalid(format!("state N is absorbing only for s = 1, got s = {s}")));
    }
    if n < 2 {
        return Err(invalid("zhou_bd needs N >= 2"));
    }
    let k = zhou_kernel(n, p, r, s)?;
    let sub = k.view((0, 0), (n, n)).into_owned();
    let absorb = DVector::from_fn(n, |x, _| k[(x, n)]);
    let c = DiscreteChain::new(StateSpace::numbered(0, n), sub, absorb)?;
    Ok(c.with_meta(json!({"builtin": "zhou_bd", "N": n, "p": p, "r": r, "s": s})))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZhouCertificate {
    pub theta: f64,
    pub c: f64,
    pub beta: f64,
    /// Defects of the equations at 0 and at `N`.
    pub boundary_defects: (f64, f64),
    /// Worst interior three-term defect.
    pub interior_defect: f64,
}

/// `φ(x) = (p/q)^{x/2} cos(θx + c)`.
pub fn zhou_eigenfunction(n: usize, p: f64, theta: f64, c: f64) -> Vec<f64> {
    let q = 1.0 - p;
    (0..=n).map(|x| (p / q).powf(x as f64 / 2.0) * (theta * x as f64 + c).cos()).collect()
}

/// Checks a proposed `(θ, c)` against the interior recursion and both boundary rows.
pub fn zhou_certify(n: usize, p: f64, r: f64, s: f64, theta: f64, c: f64) -> Result<ZhouCertificate> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(invalid(format!("θ must lie in (0, π], got {theta}")));
    }
    let k = zhou_kernel(n, p, r, s)?;
    let q = 1.0 - p;
    let beta = 2.0 * (p * q).sqrt() * theta.cos();
    let phi = zhou_eigenfunction(n, p, theta, c);
    let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let row_defect = |x: usize| -> f64 {
        let s: f64 = (0..=n).map(|y| k[(x, y)] * phi[y]).sum();
        (s - beta * phi[x]).abs() / scale
    };
    let interior_defect = (1..n).map(row_defect).fold(0.0, f64::max);
    let boundary_defects = (row_defect(0), row_defect(n));
    let cert = ZhouCertificate { theta, c, beta, boundary_defects, interior_defect };
    let worst = boundary_defects.0.max(boundary_defects.1);
    if worst > 1e-9 {
        return Err(QsdError::BoundaryDefect(worst));
    }
    if interior_defect > 1e-9 {
        return Err(QsdError::CertificationFailure(format!("interior defect {interior_defect:e}")));
    }
    Ok(cert)
}

/// Symmetric walk on `1..=N`, steps ±1 with probability 1/2, holding 1/2 at `N`,
/// absorbed at 0.
pub fn intro_walk(n: usize) -> Result<DiscreteChain> {
    if n < 2 {
        return Err(invalid("intro_walk needs N >= 2"));
    }
    let mut q = DMatrix::zeros(n, n);
    for x in 0..n - 1 {
        q[(x, x + 1)] = 0.5;
        q[(x + 1, x)] = 0.5;
    }
    q[(n - 1, n - 1)] = 0.5;
    let mut a = DVector::zeros(n);
    a[0] = 0.5;
    let c = DiscreteChain::new(StateSpace::numbered(1, n), q, a)?;
    let nu = intro_walk_qsd(n);
    Ok(c.with_meta(json!({"builtin": "intro_walk", "N": n, "nu": nu.weights()})))
}

/// `ν(x) ∝ cos((2N+1-2x)π / (2(2N+1)))` on `1..=N`.
pub fn intro_walk_qsd(n: usize) -> ProbDist {
    let m = (2 * n + 1) as f64;
    let w: Vec<f64> = (1..=n).map(|x| ((m - 2.0 * x as f64) * PI / (2.0 * m)).cos()).collect();
    ProbDist::from_unnormalized(&w).expect("positive weights")
}

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 8] =
    ["bd_uniform", "bd_biased", "cycle", "product", "rock_breaking", "zhou_bd", "intro_walk", "two_point"];

/// Parses `builtin:name?key=value&...` (prefix and query both optional).
pub fn builtin(spec: &str) -> Result<AbsorbingChain> {
    let body = spec.trim().strip_prefix("builtin:").unwrap_or(spec.trim());
    let (name, query) = match body.split_once('?') {
        Some((n, q)) => (n, q),
        None => (body, ""),
    };
    let mut params: BTreeMap<String, String> = BTreeMap::new();
    for kv in query.split(['&', ',']).filter(|s| !s.is_empty()) {
        let (k, v) = kv.split_once('=').ok_or_else(|| invalid(format!("malformed parameter `{kv}`")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut take = |key: &str| params.remove(key);
    fn num<T: std::str::FromStr>(key: &str, v: Option<String>, default: T) -> Result<T> {
        match v {
            None => Ok(default),
            Some(s) => s.parse().map_err(|_| invalid(format!("cannot parse {key}={s}"))),
        }
    }
    let chain: AbsorbingChain = match name {
        "bd_uniform" => bd_uniform(num("N", take("N"), 4)?)?.into(),
        "bd_biased" => bd_biased(num("N", take("N"), 10)?, num("r", take("r"), 2.0)?)?.into(),
        "cycle" => cycle_chain(num("N", take("N"), 5)?)?.into(),
        "two_point" => two_point().into(),
        "product" => {
            let d = num("d", take("d"), 2)?;
            let base = match take("base").as_deref() {
                None | Some("two_point") => two_point(),
                Some("bd_uniform") => bd_uniform(num("N", take("N"), 2)?)?,
                Some(other) => return Err(invalid(format!("unsupported product base `{other}`"))),
            };
            product_chain(&base, d)?.into()
        }
        "rock_breaking" => rock_breaking(num("n", take("n"), 4)?)?.into(),
        "zhou_bd" => zhou_bd(
            num("N", take("N"), 2)?,
            num("p", take("p"), 0.5)?,
            num("r", take("r"), 0.5)?,
            num("s", take("s"), 1.0)?,
        )?
        .into(),
        "intro_walk" => intro_walk(num("N", take("N"), 2)?)?.into(),
        other => return Err(invalid(format!("unknown builtin `{other}`; known: {}", BUILTIN_NAMES.join(", ")))),
    };
    if let Some(k) = params.keys().next() {
        return Err(invalid(format!("unknown parameter `{k}` for builtin `{name}`")));
    }
    Ok(chain)
}

/// One representative instance of every builtin family, with its spec string.
pub fn builtin_catalogue() -> Vec<(&'static str, AbsorbingChain)> {
    [
        "builtin:bd_uniform?N=10",
        "builtin:bd_biased?N=10&r=2",
        "builtin:cycle?N=7",
        "builtin:product?d=3",
        "builtin:rock_breaking?n=4",
        "builtin:zhou_bd?N=5",
        "builtin:intro_walk?N=5",
    ]
    .into_iter()
    .map(|s| (s, builtin(s).expect("catalogue entries are valid")))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{dirichlet_spectrum, perron};

    #[test]
    fn bd_uniform_matches_closed_form_spectrum() {
        for n in [2, 4, 7] {
            let c: AbsorbingChain = bd_uniform(n).unwrap().into();
            let s = dirichlet_spectrum(&c).unwrap().real_parts();
            for (a, b) in s.iter().zip(bd_uniform_spectrum(n)) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bd_uniform_invariant_law_halves_last_state() {
        let c = bd_uniform(5).unwrap();
        let eta = spectral::invariant_measure(&c).unwrap();
        let z = 4.5;
        for x in 0..4 {
            assert!((eta.weights()[x] - 1.0 / z).abs() < 1e-12);
        }
        assert!((eta.weights()[4] - 0.5 / z).abs() < 1e-12);
    }

    #[test]
    fn biased_eta_is_geometric_below_the_top() {
        let (n, r) = (6, 2.0);
        let c = bd_biased(n, r).unwrap();
        let eta = spectral::invariant_measure(&c).unwrap();
        let w = eta.weights();
        for x in 0..n - 2 {
            assert!((w[x + 1] / w[x] - r).abs() < 1e-10);
        }
        assert!((w[n - 1] / w[n - 2] - r / (1.0 + r)).abs() < 1e-10);
    }

    #[test]
    fn biased_polynomial_division_is_exact() {
        for (n, r) in [(3, 2.0), (5, 0.5), (8, 3.0)] {
            let coeffs = biased_polynomial(n, r);
            // P(X)(X² - 1/r) must equal the numerator at a few points.
            for z in [Complex64::new(0.3, 0.7), Complex64::new(1.1, -0.2)] {
                let (p, _) = poly_eval(&coeffs, z);
                let lhs = p * (z * z - 1.0 / r);
                let rhs = z.powi(2 * n as i32 + 2) - z.powi(2 * n as i32) + r.powi(1 - n as i32) * z * z
                    - r.powi(-(n as i32) - 1);
                assert!((lhs - rhs).norm() < 1e-9 * rhs.norm().max(1.0));
            }
        }
    }

    #[test]
    fn biased_roots_pair_under_involution() {
        let (n, r) = (5, 2.0);
        let roots = biased_roots(n, r).unwrap();
        assert_eq!(roots.len(), 2 * n);
        for z in &roots {
            let partner = 1.0 / (r * z);
            let d = roots.iter().map(|w| (w - partner).norm()).fold(f64::INFINITY, f64::min);
            assert!(d < 1e-8);
            // Ψ maps the root into the Dirichlet spectrum
            let lam = psi_map(*z, r);
            let spec = dirichlet_spectrum(&bd_biased(n, r).unwrap().into()).unwrap().real_parts();
            let hit = spec.iter().map(|s| (lam - s).norm()).fold(f64::INFINITY, f64::min);
            assert!(hit < 1e-8);
        }
    }

    #[test]
    fn biased_certificates_r2_n5() {
        let c: AbsorbingChain = bd_biased(5, 2.0).unwrap().into();
        let spec = dirichlet_spectrum(&c).unwrap().real_parts();
        let certs = biased_certify(5, 2.0, &spec).unwrap();
        assert_eq!(certs.len(), 5);
        // exactly one eigenvalue has ρ₋ real positive, and it is λ₁
        let pos: Vec<_> = certs.iter().filter(|c| c.rho_minus.im.abs() < 1e-12 && c.rho_minus.re > 0.0).collect();
        assert_eq!(pos.len(), 1);
        assert!((pos[0].lambda - spec[0]).abs() < 1e-12);
    }

    #[test]
    fn cycle_closed_form() {
        let n = 3;
        let c = cycle_chain(n).unwrap();
        let a = c.sub_generator();
        for root in cycle_roots(n).unwrap() {
            let phi = cycle_eigenvector(n, root);
            for x in 0..n {
                let s: Complex64 = (0..n).map(|y| a[(x, y)] * phi[y]).sum();
                assert!((s - (root - 1.0) * phi[x]).norm() < 1e-12);
            }
        }
        let p = perron(&c.clone().into()).unwrap();
        // c³ + c² = 1 by bisection
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.powi(3) + mid.powi(2) > 1.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert!((p.lambda1 - (1.0 - lo)).abs() < 1e-12);
        assert!((p.ratio - (1.0 + lo)).abs() < 1e-9);
        assert!((p.ratio - lo.powi(-2)).abs() < 1e-9);
    }

    #[test]
    fn cycle_phi_star_is_reflected_phi_but_not_inverse() {
        let n = 6;
        let c = cycle_chain(n).unwrap();
        let p = perron(&c.into()).unwrap();
        for x in 0..n {
            let refl = (n - x) % n;
            assert!((p.phi_star[x] / p.phi[refl] - p.phi_star[0] / p.phi[0]).abs() < 1e-9);
        }
        // φφ* is constant off 0 but not at 0: the ratio is c^{-N}, not 1
        let c = 1.0 - p.lambda1;
        let prod1 = p.phi[1] * p.phi_star[1];
        for x in 1..n {
            assert!((p.phi[x] * p.phi_star[x] - prod1).abs() < 1e-9);
        }
        let ratio = prod1 / (p.phi[0] * p.phi_star[0]);
        assert!((ratio - c.powi(-(n as i32))).abs() < 1e-9);
    }

    #[test]
    fn product_keeps_lambda1_and_tensorizes_qsd() {
        let base = two_point();
        let c = product_chain(&base, 3).unwrap();
        assert_eq!(c.n(), 8);
        let p = perron(&c.clone().into()).unwrap();
        assert!((p.lambda1 - 1.0).abs() < 1e-12);
        for &w in p.nu.weights() {
            assert!((w - 0.125).abs() < 1e-10);
        }
        let one = product_chain(&base, 1).unwrap();
        assert_eq!(one.rates(), base.rates());
        assert_eq!(one.killing(), base.killing());
    }

    #[test]
    fn product_size_guard() {
        let base = bd_uniform(10).unwrap();
        assert!(matches!(product_chain(&base, 5), Err(QsdError::SizeGuard(_))));
    }

    #[test]
    fn partitions_of_four_in_table_order() {
        let labels: Vec<String> = partitions(4).iter().map(|p| partition_label(p)).collect();
        assert_eq!(labels, ["1,1,1,1", "1,1,2", "2,2", "1,3", "4"]);
        assert_eq!(partitions(6).len(), 11);
        assert_eq!(partition_count(6, 2), 3);
    }

    #[test]
    fn rock_breaking_four_matches_table() {
        let (_, t) = rock_breaking_numerators(4);
        let expected: [[u64; 5]; 5] =
            [[16, 0, 0, 0, 0], [8, 8, 0, 0, 0], [4, 8, 4, 0, 0], [0, 12, 0, 4, 0], [0, 0, 6, 8, 2]];
        for i in 0..5 {
            assert_eq!(t[i], expected[i]);
        }
    }

    #[test]
    fn rock_breaking_phi_is_eigenvector() {
        for n in 2..=8 {
            let c = rock_breaking(n).unwrap();
            let phi: Vec<f64> = c.meta()["phi"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
            let qphi = c.sub() * DVector::from_vec(phi.clone());
            for x in 0..phi.len() {
                assert_eq!(qphi[x], 0.5 * phi[x]);
            }
        }
    }

    #[test]
    fn zhou_boundary_certificate() {
        let n = 2;
        let theta = PI / 5.0;
        let cert = zhou_certify(n, 0.5, 0.5, 1.0, theta, theta / 2.0).unwrap();
        assert!((cert.beta - theta.cos()).abs() < 1e-15);
        assert!(matches!(zhou_certify(n, 0.5, 0.5, 1.0, PI / 3.0, PI / 6.0), Err(QsdError::BoundaryDefect(_))));
        let d = zhou_bd(2, 0.5, 0.5, 1.0).unwrap();
        assert_eq!(d.sub(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.0]));
        assert!(matches!(zhou_bd(3, 0.5, 0.5, 0.5), Err(QsdError::InvalidParameter(_))));
    }

    #[test]
    fn intro_walk_qsd_matches_eigensolver() {
        for n in 2..=8 {
            let p = perron(&intro_walk(n).unwrap().into()).unwrap();
            let closed = intro_walk_qsd(n);
            for x in 0..n {
                assert!((p.nu.weights()[x] - closed.weights()[x]).abs() < 1e-9, "N={n}");
            }
            let m = (2 * n + 1) as f64;
            assert!((p.beta.unwrap() - (PI / m).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn builtin_parsing() {
        let c = builtin("builtin:bd_uniform?N=6").unwrap();
        assert_eq!(c.n(), 6);
        assert_eq!(builtin("cycle").unwrap().n(), 5);
        assert!(matches!(builtin("builtin:nope"), Err(QsdError::InvalidParameter(_))));
        assert!(matches!(builtin("builtin:cycle?M=3"), Err(QsdError::InvalidParameter(_))));
        assert!(matches!(builtin("builtin:cycle?N=x"), Err(QsdError::InvalidParameter(_))));
        assert_eq!(builtin("builtin:product?d=2&base=bd_uniform&N=3").unwrap().n(), 9);
        assert_eq!(builtin_catalogue().len(), 7);
    }
}
