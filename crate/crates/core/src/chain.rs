//! Finite Markov chains: construction, validation, laziness, and total variation.

use ndarray::{Array1, Array2, ArrayView1};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Row sums must be within this distance of one.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// Scale of the detailed-balance test.
pub const REVERSIBILITY_TOL: f64 = 1e-12;
/// `pi P = pi` must hold entrywise to this tolerance.
pub const STATIONARITY_TOL: f64 = 1e-10;
/// Largest chain accepted by the dense solvers.
pub const MAX_STATES: usize = 2000;

/// A transition matrix with a free-form label. Not yet validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub label: String,
    p: Array2<f64>,
}

impl ChainSpec {
    pub fn new(label: impl Into<String>, p: Array2<f64>) -> Result<Self> {
        let (r, c) = p.dim();
        if r == 0 || r != c {
            return Err(Error::Shape(format!("transition matrix must be square and nonempty, got {r}x{c}")));
        }
        if r > MAX_STATES {
            return Err(Error::Shape(format!("{r} states exceeds the dense limit {MAX_STATES}")));
        }
        Ok(Self { label: label.into(), p })
    }

    pub fn from_rows(label: impl Into<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("every row must have n entries".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let p = Array2::from_shape_vec((n, n), flat).map_err(|e| Error::Shape(e.to_string()))?;
        Self::new(label, p)
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.p
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.p.outer_iter().map(|r| r.to_vec()).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ChainSpecRepr {
    label: String,
    n: usize,
    #[serde(rename = "P")]
    p: Vec<Vec<f64>>,
}

impl Serialize for ChainSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ChainSpecRepr { label: self.label.clone(), n: self.n(), p: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChainSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = ChainSpecRepr::deserialize(d)?;
        if repr.p.len() != repr.n {
            return Err(serde::de::Error::custom(format!(
                "n = {} but P has {} rows",
                repr.n,
                repr.p.len()
            )));
        }
        ChainSpec::from_rows(repr.label, repr.p).map_err(serde::de::Error::custom)
    }
}

/// A chain that passed validation, together with its stationary
/// distribution and structural certificates.
#[derive(Debug, Clone)]
pub struct ValidatedChain {
    spec: ChainSpec,
    pi: Array1<f64>,
    reversible: bool,
    irreducible: bool,
}

impl ValidatedChain {
    pub fn spec(&self) -> &ChainSpec {
        &self.spec
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.spec.p
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn label(&self) -> &str {
        &self.spec.label
    }

    pub fn pi(&self) -> &Array1<f64> {
        &self.pi
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn is_irreducible(&self) -> bool {
        self.irreducible
    }

    pub fn stationary(&self) -> Distribution {
        Distribution(self.pi.to_vec())
    }
}

/// A probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Accepts nonnegative weights summing to one within `1e-12`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("weight {w} at {i}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    pub fn point_mass(n: usize, x: usize) -> Self {
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        Self(w)
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Clips entries in `[-floor, 0)` to zero and renormalizes. Anything more
    /// negative is reported as `NegativeMass`.
    pub(crate) fn from_clipped(mut w: Vec<f64>, floor: f64) -> Result<Self> {
        for (state, v) in w.iter_mut().enumerate() {
            if *v < -floor || !v.is_finite() {
                return Err(Error::NegativeMass { state, value: *v });
            }
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        Ok(Self(w))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Probability of a set of states.
    pub fn mass(&self, set: &[usize]) -> f64 {
        set.iter().map(|&i| self.0[i]).sum()
    }
}

/// Half the L1 distance between two vectors of equal length.
pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(Error::LengthMismatch { left: mu.len(), right: nu.len() });
    }
    Ok(tv(mu.as_slice(), nu.as_slice()).min(1.0))
}

/// Checks stochasticity, decides irreducibility and reversibility, and
/// computes the stationary distribution.
pub fn validate_chain(spec: ChainSpec) -> Result<ValidatedChain> {
    let p = &spec.p;
    for ((row, col), &value) in p.indexed_iter() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeEntry { row, col, value });
        }
    }
    for (row, r) in p.outer_iter().enumerate() {
        let sum = r.sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::RowSumError { row, sum });
        }
    }

    let (components, closed) = communicating_classes(p);
    if closed > 1 {
        return Err(Error::ReducibleChain { closed_classes: closed });
    }
    let irreducible = components == 1;

    let pi = stationary_distribution(p, irreducible)?;
    let residual = pi.dot(p) - &pi;
    if residual.iter().any(|r| r.abs() > STATIONARITY_TOL) {
        return Err(Error::SingularSystem("stationary residual exceeds 1e-10".into()));
    }
    let reversible = detailed_balance_holds(p, pi.view());
    Ok(ValidatedChain { spec, pi, reversible, irreducible })
}

/// `(I + P) / 2`, keeping the stationary distribution of the input.
pub fn lazy_kernel(chain: &ValidatedChain) -> ValidatedChain {
    let n = chain.n();
    let lazy = (chain.matrix() + &Array2::<f64>::eye(n)) * 0.5;
    ValidatedChain {
        spec: ChainSpec { label: format!("lazy({})", chain.label()), p: lazy },
        pi: chain.pi.clone(),
        reversible: chain.reversible,
        irreducible: chain.irreducible,
    }
}

/// Number of strongly connected components and how many of them are closed.
fn communicating_classes(p: &Array2<f64>) -> (usize, usize) {
    let n = p.nrows();
    let mut g = DiGraph::<(), ()>::with_capacity(n, n * 3);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for ((x, y), &v) in p.indexed_iter() {
        if v > 0.0 && x != y {
            g.add_edge(nodes[x], nodes[y], ());
        }
    }
    let sccs = tarjan_scc(&g);
    let mut class_of = vec![0usize; n];
    for (c, comp) in sccs.iter().enumerate() {
        for node in comp {
            class_of[node.index()] = c;
        }
    }
    let mut open = vec![false; sccs.len()];
    for ((x, y), &v) in p.indexed_iter() {
        if v > 0.0 && class_of[x] != class_of[y] {
            open[class_of[x]] = true;
        }
    }
    (sccs.len(), open.iter().filter(|o| !**o).count())
}

fn stationary_distribution(p: &Array2<f64>, irreducible: bool) -> Result<Array1<f64>> {
    let raw = if irreducible {
        match linalg::gth_stationary(p) {
            Some(pi) => pi,
            None => linalg::lu_stationary(p)?,
        }
    } else {
        linalg::lu_stationary(p)?
    };
    // LU may leave round-off negatives on transient states
    let mut pi = raw.mapv(|v| if v < 0.0 { 0.0 } else { v });
    let total = pi.sum();
    if !(total > 0.0) {
        return Err(Error::SingularSystem("stationary vector vanished".into()));
    }
    pi /= total;
    Ok(pi)
}

fn detailed_balance_holds(p: &Array2<f64>, pi: ArrayView1<f64>) -> bool {
    let n = p.nrows();
    for x in 0..n {
        for y in (x + 1)..n {
            let fwd = pi[x] * p[[x, y]];
            let bwd = pi[y] * p[[y, x]];
            if (fwd - bwd).abs() > REVERSIBILITY_TOL * fwd.max(1.0) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn flip() -> ChainSpec {
        ChainSpec::new("flip", array![[0.0, 1.0], [1.0, 0.0]]).unwrap()
    }

    #[test]
    fn flip_chain_certificates() {
        let c = validate_chain(flip()).unwrap();
        assert_eq!(c.pi().to_vec(), vec![0.5, 0.5]);
        assert!(c.is_reversible() && c.is_irreducible());
    }

    #[test]
    fn identity_is_reducible() {
        let spec = ChainSpec::new("id", array![[1.0, 0.0], [0.0, 1.0]]).unwrap();
        assert_eq!(validate_chain(spec).unwrap_err(), Error::ReducibleChain { closed_classes: 2 });
    }

    #[test]
    fn transient_state_keeps_unique_pi() {
        let spec = ChainSpec::new("t", array![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.0, 0.5, 0.5]]).unwrap();
        let c = validate_chain(spec).unwrap();
        assert!(!c.is_irreducible());
        assert!(c.pi()[0].abs() < 1e-15);
        assert!((c.pi()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn row_sum_and_sign_errors() {
        let spec = ChainSpec::new("bad", array![[0.5, 0.49], [0.5, 0.5]]).unwrap();
        assert!(matches!(validate_chain(spec), Err(Error::RowSumError { row: 0, .. })));
        let spec = ChainSpec::new("neg", array![[1.5, -0.5], [0.5, 0.5]]).unwrap();
        assert!(matches!(validate_chain(spec), Err(Error::NegativeEntry { row: 0, col: 1, .. })));
        assert!(ChainSpec::from_rows("ragged", vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn lazy_of_flip() {
        let c = lazy_kernel(&validate_chain(flip()).unwrap());
        assert_eq!(c.matrix(), &array![[0.5, 0.5], [0.5, 0.5]]);
        assert_eq!(c.pi().to_vec(), vec![0.5, 0.5]);
        assert!(c.is_reversible());
    }

    #[test]
    fn tv_examples() {
        let a = Distribution::new(vec![1.0, 0.0]).unwrap();
        let b = Distribution::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 0.5);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        let c = Distribution::new(vec![0.7, 0.3]).unwrap();
        let d = Distribution::new(vec![0.3, 0.7]).unwrap();
        assert!((tv_distance(&c, &d).unwrap() - 0.4).abs() < 1e-15);
        let e = Distribution::uniform(3);
        assert_eq!(tv_distance(&a, &e).unwrap_err(), Error::LengthMismatch { left: 2, right: 3 });
    }

    #[test]
    fn json_round_trip() {
        let spec = flip();
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"label":"flip","n":2,"P":[[0.0,1.0],[1.0,0.0]]}"#);
        let back: ChainSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<ChainSpec>(r#"{"label":"x","n":3,"P":[[1.0]]}"#).is_err());
    }

    #[test]
    fn non_reversible_cycle() {
        let p = array![[0.0, 0.9, 0.1], [0.1, 0.0, 0.9], [0.9, 0.1, 0.0]];
        let c = validate_chain(ChainSpec::new("cyc", p).unwrap()).unwrap();
        assert!(!c.is_reversible());
        assert!(c.pi().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-14));
    }
}
