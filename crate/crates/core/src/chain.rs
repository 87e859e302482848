//! Absorbing chain models and the JSON model file format.
//!
//! A continuous chain is stored as its Markov generator `L` on the transient
//! states together with the killing vector `V`; the sub-Markovian generator
//! seen by the transient states is `L - V`. A discrete chain is stored as the
//! substochastic block `Q` together with the one-step absorption
//! probabilities `a`. The absorbing point is implicit in both cases.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{QsdError, Result};

/// Tolerance on generator row sums and kernel row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Tolerance on probability vectors summing to one.
pub const PROB_SUM_TOL: f64 = 1e-10;

/// Ordered, distinct state names. The absorbing point is never a member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(QsdError::DimensionMismatch("state space is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(QsdError::InvalidParameter(format!("duplicate state label `{l}`")));
            }
        }
        Ok(StateSpace { labels })
    }

    /// States labelled `"1"`, `"2"`, ... or starting from `first`.
    pub fn numbered(first: i64, n: usize) -> Self {
        StateSpace { labels: (0..n as i64).map(|i| (first + i).to_string()).collect() }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A probability vector on the transient states.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ProbDist {
    weights: Vec<f64>,
}

impl ProbDist {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(QsdError::NegativeEntry { row: 0, col: i, value: w });
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > PROB_SUM_TOL {
            return Err(QsdError::InvalidParameter(format!("probability weights sum to {s}")));
        }
        Ok(ProbDist { weights })
    }

    /// Normalizes a nonnegative vector with positive mass.
    pub fn from_unnormalized(weights: &[f64]) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(QsdError::InvalidParameter(format!("cannot normalize a vector of mass {s}")));
        }
        ProbDist::new(weights.iter().map(|w| (w / s).max(0.0)).collect())
    }

    pub fn dirac(n: usize, at: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        ProbDist { weights }
    }

    pub fn uniform(n: usize) -> Self {
        ProbDist { weights: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `sum_x m(x) f(x)`.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(m, f)| m * f).sum()
    }

    pub fn as_row(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.weights)
    }
}

/// Continuous-time absorbing chain: generator `L` plus killing rates `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousChain {
    states: StateSpace,
    rates: DMatrix<f64>,
    killing: DVector<f64>,
    irreducible: bool,
    diagonal_repaired: bool,
    meta: Value,
}

impl ContinuousChain {
    /// Validates and builds a chain. The diagonal of `rates` is recomputed
    /// from the off-diagonal entries; [`diagonal_repaired`](Self::diagonal_repaired)
    /// records whether the supplied diagonal disagreed.
    pub fn new(states: StateSpace, mut rates: DMatrix<f64>, killing: DVector<f64>) -> Result<Self> {
        let n = states.len();
        if rates.nrows() != n || rates.ncols() != n {
            return Err(QsdError::DimensionMismatch(format!(
                "rates is {}x{}, expected {n}x{n}",
                rates.nrows(),
                rates.ncols()
            )));
        }
        if killing.len() != n {
            return Err(QsdError::DimensionMismatch(format!("killing has length {}, expected {n}", killing.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = rates[(i, j)];
                if !v.is_finite() {
                    return Err(QsdError::InvalidParameter(format!("non-finite rate at ({i}, {j})")));
                }
                if i != j && v < 0.0 {
                    return Err(QsdError::NegativeRate { row: i, col: j, value: v });
                }
            }
            let v = killing[i];
            if !(v >= 0.0) || !v.is_finite() {
                return Err(QsdError::NegativeRate { row: i, col: n, value: v });
            }
        }
        let mut diagonal_repaired = false;
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
            if (rates[(i, i)] + off).abs() > ROW_SUM_TOL {
                diagonal_repaired = true;
            }
            rates[(i, i)] = -off;
        }
        let irreducible = strongly_connected(&rates);
        Ok(ContinuousChain { states, rates, killing, irreducible, diagonal_repaired, meta: Value::Null })
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }
    pub fn n(&self) -> usize {
        self.states.len()
    }
    /// The Markov generator `L` (rows sum to zero).
    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }
    /// The killing vector `V`.
    pub fn killing(&self) -> &DVector<f64> {
        &self.killing
    }
    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }
    pub fn diagonal_repaired(&self) -> bool {
        self.diagonal_repaired
    }
    pub fn meta(&self) -> &Value {
        &self.meta
    }
    /// `V ≡ 0`: nothing is ever absorbed.
    pub fn is_non_absorbing(&self) -> bool {
        self.killing.iter().all(|&v| v == 0.0)
    }

    /// `L - V`.
    pub fn sub_generator(&self) -> DMatrix<f64> {
        let mut m = self.rates.clone();
        for i in 0..self.n() {
            m[(i, i)] -= self.killing[i];
        }
        m
    }

    /// The generator on `S ⊔ {∞}`, with `∞` as the last index.
    pub fn full_generator(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.sub_generator());
        for i in 0..n {
            m[(i, n)] = self.killing[i];
        }
        m
    }
}

/// Discrete-time absorbing chain: substochastic block `Q` plus absorption
/// probabilities `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteChain {
    states: StateSpace,
    sub: DMatrix<f64>,
    absorb: DVector<f64>,
    irreducible: bool,
    meta: Value,
}

impl DiscreteChain {
    pub fn new(states: StateSpace, sub: DMatrix<f64>, absorb: DVector<f64>) -> Result<Self> {
        let n = states.len();
        if sub.nrows() != n || sub.ncols() != n {
            return Err(QsdError::DimensionMismatch(format!(
                "sub is {}x{}, expected {n}x{n}",
                sub.nrows(),
                sub.ncols()
            )));
        }
        if absorb.len() != n {
            return Err(QsdError::DimensionMismatch(format!("absorb has length {}, expected {n}", absorb.len())));
        }
        for i in 0..n {
            for j in 0..n {
                let v = sub[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(QsdError::NegativeEntry { row: i, col: j, value: v });
                }
            }
            let a = absorb[i];
            if !(0.0..=1.0).contains(&a) {
                return Err(QsdError::NegativeEntry { row: i, col: n, value: a });
            }
            let sum = sub.row(i).sum() + a;
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(QsdError::RowSumViolation { row: i, sum });
            }
        }
        let irreducible = strongly_connected(&sub);
        Ok(DiscreteChain { states, sub, absorb, irreducible, meta: Value::Null })
    }

    pub fn with_meta(mut self, meta: Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }
    pub fn n(&self) -> usize {
        self.states.len()
    }
    pub fn sub(&self) -> &DMatrix<f64> {
        &self.sub
    }
    pub fn absorb(&self) -> &DVector<f64> {
        &self.absorb
    }
    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }
    pub fn meta(&self) -> &Value {
        &self.meta
    }
    pub fn is_non_absorbing(&self) -> bool {
        self.absorb.iter().all(|&a| a == 0.0)
    }

    /// The `(n+1)×(n+1)` transition matrix with the absorbing point last.
    pub fn full_kernel(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.sub);
        for i in 0..n {
            m[(i, n)] = self.absorb[i];
        }
        m[(n, n)] = 1.0;
        m
    }

    /// Continuous chain jumping at unit total rate according to `(Q | a)`.
    /// Its sub-generator is `Q - I`.
    pub fn embedded_continuous(&self) -> ContinuousChain {
        let mut rates = self.sub.clone();
        for i in 0..self.n() {
            rates[(i, i)] = 0.0;
        }
        ContinuousChain::new(self.states.clone(), rates, self.absorb.clone())
            .expect("a valid kernel embeds into a valid generator")
    }
}

/// Either flavour of absorbing chain.
#[derive(Debug, Clone, PartialEq)]
pub enum AbsorbingChain {
    Continuous(ContinuousChain),
    Discrete(DiscreteChain),
}

impl AbsorbingChain {
    pub fn n(&self) -> usize {
        self.states().len()
    }

    pub fn states(&self) -> &StateSpace {
        match self {
            AbsorbingChain::Continuous(c) => c.states(),
            AbsorbingChain::Discrete(d) => d.states(),
        }
    }

    pub fn is_irreducible(&self) -> bool {
        match self {
            AbsorbingChain::Continuous(c) => c.is_irreducible(),
            AbsorbingChain::Discrete(d) => d.is_irreducible(),
        }
    }

    pub fn meta(&self) -> &Value {
        match self {
            AbsorbingChain::Continuous(c) => c.meta(),
            AbsorbingChain::Discrete(d) => d.meta(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, AbsorbingChain::Discrete(_))
    }

    pub fn as_continuous(&self) -> Option<&ContinuousChain> {
        match self {
            AbsorbingChain::Continuous(c) => Some(c),
            AbsorbingChain::Discrete(_) => None,
        }
    }

    pub fn as_discrete(&self) -> Option<&DiscreteChain> {
        match self {
            AbsorbingChain::Discrete(d) => Some(d),
            AbsorbingChain::Continuous(_) => None,
        }
    }
}

impl From<ContinuousChain> for AbsorbingChain {
    fn from(c: ContinuousChain) -> Self {
        AbsorbingChain::Continuous(c)
    }
}

impl From<DiscreteChain> for AbsorbingChain {
    fn from(d: DiscreteChain) -> Self {
        AbsorbingChain::Discrete(d)
    }
}

/// Strong connectivity of the digraph with an edge `i -> j` whenever
/// `i != j` and `m[(i, j)] > 0`.
pub fn strongly_connected(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(i, j)] } else { m[(j, i)] };
                if j != i && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

// ---------------------------------------------------------------------------
// model files

#[derive(Serialize)]
struct ModelFileOut<'a> {
    kind: &'static str,
    states: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    killing: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sub: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    absorb: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Value::is_null")]
    meta: &'a Value,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Serializes a chain to the JSON model format. Floats are written in
/// shortest round-trip form, so [`parse_model`] recovers them exactly.
pub fn serialize_model(chain: &AbsorbingChain) -> String {
    let out = match chain {
        AbsorbingChain::Continuous(c) => ModelFileOut {
            kind: "continuous",
            states: c.states().labels(),
            rates: Some(rows_of(c.rates())),
            killing: Some(c.killing().iter().copied().collect()),
            sub: None,
            absorb: None,
            meta: c.meta(),
        },
        AbsorbingChain::Discrete(d) => ModelFileOut {
            kind: "discrete",
            states: d.states().labels(),
            rates: None,
            killing: None,
            sub: Some(rows_of(d.sub())),
            absorb: Some(d.absorb().iter().copied().collect()),
            meta: d.meta(),
        },
    };
    serde_json::to_string_pretty(&out).expect("model serialization cannot fail")
}

fn line_of(text: &str, field: &str) -> usize {
    let needle = format!("\"{field}\"");
    text.lines().position(|l| l.contains(&needle)).map(|i| i + 1).unwrap_or(1)
}

fn schema(text: &str, field: &str, message: impl Into<String>) -> QsdError {
    QsdError::Schema { line: line_of(text, field), field: field.to_string(), message: message.into() }
}

fn get_matrix(text: &str, obj: &serde_json::Map<String, Value>, field: &str, n: usize) -> Result<DMatrix<f64>> {
    let rows = obj
        .get(field)
        .ok_or_else(|| schema(text, field, "missing field"))?
        .as_array()
        .ok_or_else(|| schema(text, field, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(schema(text, field, format!("expected {n} rows, found {}", rows.len())));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| schema(text, field, format!("row {i} is not an array")))?;
        if row.len() != n {
            return Err(schema(text, field, format!("row {i} has {} entries, expected {n}", row.len())));
        }
        for (j, v) in row.iter().enumerate() {
            m[(i, j)] = v.as_f64().ok_or_else(|| schema(text, field, format!("entry ({i}, {j}) is not a number")))?;
        }
    }
    Ok(m)
}

fn get_vector(text: &str, obj: &serde_json::Map<String, Value>, field: &str, n: usize) -> Result<DVector<f64>> {
    let xs = obj
        .get(field)
        .ok_or_else(|| schema(text, field, "missing field"))?
        .as_array()
        .ok_or_else(|| schema(text, field, "expected an array"))?;
    if xs.len() != n {
        return Err(schema(text, field, format!("expected {n} entries, found {}", xs.len())));
    }
    let v: Option<Vec<f64>> = xs.iter().map(Value::as_f64).collect();
    let v = v.ok_or_else(|| schema(text, field, "entries must be numbers"))?;
    Ok(DVector::from_vec(v))
}

/// Parses a JSON model file. A `"builtin"` key (e.g. `"bd_uniform:N=4"`)
/// replaces the explicit matrices.
pub fn parse_model(text: &str) -> Result<AbsorbingChain> {
    let value: Value = serde_json::from_str(text).map_err(|e| QsdError::Schema {
        line: e.line(),
        field: String::new(),
        message: e.to_string(),
    })?;
    let obj = value.as_object().ok_or_else(|| schema(text, "", "top level must be an object"))?;
    let meta = obj.get("meta").cloned().unwrap_or(Value::Null);

    if let Some(b) = obj.get("builtin") {
        let spec = b.as_str().ok_or_else(|| schema(text, "builtin", "expected a string"))?;
        return crate::models::builtin(spec);
    }

    let kind = obj
        .get("kind")
        .ok_or_else(|| schema(text, "kind", "missing field"))?
        .as_str()
        .ok_or_else(|| schema(text, "kind", "expected a string"))?;
    let labels = obj
        .get("states")
        .ok_or_else(|| schema(text, "states", "missing field"))?
        .as_array()
        .ok_or_else(|| schema(text, "states", "expected an array of names"))?;
    let labels: Option<Vec<String>> = labels.iter().map(|l| l.as_str().map(str::to_string)).collect();
    let labels = labels.ok_or_else(|| schema(text, "states", "state names must be strings"))?;
    let states = StateSpace::new(labels).map_err(|e| schema(text, "states", e.to_string()))?;
    let n = states.len();

    match kind {
        "continuous" => {
            let rates = get_matrix(text, obj, "rates", n)?;
            let killing = get_vector(text, obj, "killing", n)?;
            Ok(ContinuousChain::new(states, rates, killing)?.with_meta(meta).into())
        }
        "discrete" => {
            let sub = get_matrix(text, obj, "sub", n)?;
            let absorb = get_vector(text, obj, "absorb", n)?;
            Ok(DiscreteChain::new(states, sub, absorb)?.with_meta(meta).into())
        }
        other => Err(schema(text, "kind", format!("unknown kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn two_point() -> ContinuousChain {
        ContinuousChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![-1.0, 1.0; 1.0, -1.0],
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap()
    }

    #[test]
    fn two_point_is_valid() {
        let c = two_point();
        assert!(c.is_irreducible());
        assert!(!c.diagonal_repaired());
        assert!(!c.is_non_absorbing());
    }

    #[test]
    fn negative_off_diagonal_rejected() {
        let err = ContinuousChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![0.0, -0.5; 1.0, 0.0],
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap_err();
        assert!(matches!(err, QsdError::NegativeRate { row: 0, col: 1, .. }));
    }

    #[test]
    fn negative_killing_rejected() {
        let err = ContinuousChain::new(StateSpace::numbered(1, 1), dmatrix![0.0], DVector::from_vec(vec![-1.0]))
            .unwrap_err();
        assert!(matches!(err, QsdError::NegativeRate { .. }));
    }

    #[test]
    fn dimension_mismatch() {
        let err = ContinuousChain::new(StateSpace::numbered(1, 3), dmatrix![0.0, 1.0; 1.0, 0.0], DVector::zeros(3))
            .unwrap_err();
        assert!(matches!(err, QsdError::DimensionMismatch(_)));
    }

    #[test]
    fn bad_diagonal_is_overwritten_and_recorded() {
        let c = ContinuousChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![5.0, 1.0; 2.0, 0.0],
            DVector::from_vec(vec![1.0, 0.0]),
        )
        .unwrap();
        assert!(c.diagonal_repaired());
        assert_eq!(c.rates()[(0, 0)], -1.0);
        assert_eq!(c.rates()[(1, 1)], -2.0);
        assert!(c.is_irreducible());
    }

    #[test]
    fn full_generator_rows_sum_to_zero() {
        let c = ContinuousChain::new(
            StateSpace::numbered(1, 3),
            dmatrix![0.0, 0.3, 0.7; 1.1, 0.0, 0.0; 0.0, 2.0, 0.0],
            DVector::from_vec(vec![0.5, 0.0, 3.0]),
        )
        .unwrap();
        let full = c.full_generator();
        for i in 0..4 {
            assert!(full.row(i).sum().abs() <= 1e-12);
        }
    }

    #[test]
    fn non_absorbing_is_flagged() {
        let c = ContinuousChain::new(StateSpace::numbered(1, 2), dmatrix![0.0, 1.0; 1.0, 0.0], DVector::zeros(2))
            .unwrap();
        assert!(c.is_non_absorbing());
    }

    #[test]
    fn discrete_validation() {
        let ok = DiscreteChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![0.0, 0.5; 0.5, 0.5],
            DVector::from_vec(vec![0.5, 0.0]),
        )
        .unwrap();
        assert!(ok.is_irreducible());
        let err = DiscreteChain::new(StateSpace::numbered(1, 2), dmatrix![0.51, 0.5; 0.5, 0.5], DVector::zeros(2))
            .unwrap_err();
        assert!(matches!(err, QsdError::RowSumViolation { row: 0, .. }));
        let err = DiscreteChain::new(
            StateSpace::numbered(1, 2),
            dmatrix![-0.1, 1.1; 0.5, 0.5],
            DVector::zeros(2),
        )
        .unwrap_err();
        assert!(matches!(err, QsdError::NegativeEntry { .. }));
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(StateSpace::new(["a", "b", "a"]).is_err());
    }

    #[test]
    fn round_trip_two_point() {
        let c: AbsorbingChain = two_point().into();
        let text = serialize_model(&c);
        assert_eq!(parse_model(&text).unwrap(), c);
    }

    #[test]
    fn missing_killing_is_schema_error() {
        let text = r#"{
  "kind": "continuous",
  "states": ["1", "2"],
  "rates": [[-1, 1], [1, -1]]
}"#;
        match parse_model(text).unwrap_err() {
            QsdError::Schema { field, .. } => assert_eq!(field, "killing"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn schema_error_reports_line() {
        let text = "{\n  \"kind\": \"continuous\",\n  \"states\": [\"1\"],\n  \"rates\": [[0, 1]],\n  \"killing\": [1]\n}";
        match parse_model(text).unwrap_err() {
            QsdError::Schema { line, field, .. } => {
                assert_eq!(field, "rates");
                assert_eq!(line, 4);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    /// Transitive closure by Floyd–Warshall.
    fn closure_irreducible(m: &DMatrix<f64>) -> bool {
        let n = m.nrows();
        let mut r = vec![vec![false; n]; n];
        for i in 0..n {
            r[i][i] = true;
            for j in 0..n {
                if i != j && m[(i, j)] > 0.0 {
                    r[i][j] = true;
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r.iter().all(|row| row.iter().all(|&b| b))
    }

    proptest::proptest! {
        #[test]
        fn irreducibility_matches_closure(n in 1usize..7, bits in proptest::collection::vec(proptest::bool::weighted(0.3), 49)) {
            let m = DMatrix::from_fn(n, n, |i, j| if bits[i * 7 + j] { 1.0 } else { 0.0 });
            proptest::prop_assert_eq!(strongly_connected(&m), closure_irreducible(&m));
        }
    }
}
