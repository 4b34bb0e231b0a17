//! Edge weights and the non-backtracking walk operators built from them.
//!
//! With normalized weights `w`, the edge-to-edge operator is
//!
//! ```text
//! P[(i→j), (k→l)] = 0                        if j ≠ k or l = i
//!                 = w(j→l) / Σ w(j→l')       otherwise, l' ranging over j's successors other than i
//! ```
//!
//! which equals `w(j→l) / (1 − w(j→i))` when the back edge exists. `B` puts a
//! node's mass on its outgoing edges: `B[(i→j), i] = w(i→j)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NavGraph, NodeId};

/// Edges beyond which the pseudoinverse projection is refused.
pub const PSEUDOINVERSE_EDGE_LIMIT: usize = 5000;

/// How edge mass after the walk is read back as a node distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// `x̂ = S · P^(h−1) · B · x`, where `S` sends each edge's mass to its
    /// destination. This is the exact law of the non-backtracking walk.
    #[default]
    HeadProjection,
    /// `x̂ = B⁺ · P^h · B · x` with the Moore-Penrose pseudoinverse of `B`,
    /// negatives clamped to zero.
    Pseudoinverse,
}

impl std::str::FromStr for ProjectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "head" | "head-projection" => Ok(Self::HeadProjection),
            "pinv" | "pseudoinverse" => Ok(Self::Pseudoinverse),
            _ => Err(Error::InvalidConfig(format!("unknown projection mode `{s}` (expected head or pinv)"))),
        }
    }
}

/// Softmax of `values` at the positions `idx`. Returns an empty vector when
/// `idx` is empty.
pub(crate) fn softmax_at(values: &[f64], idx: impl Iterator<Item = usize> + Clone) -> Vec<f64> {
    let max = idx.clone().map(|i| values[i]).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = idx.map(|i| (values[i] - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax of the logits over each node's outgoing edges.
pub fn normalize_weights(graph: &NavGraph, logits: &[f64]) -> Vec<f64> {
    assert_eq!(logits.len(), graph.edge_count(), "one logit per edge");
    let mut w = vec![0.0; graph.edge_count()];
    for v in 0..graph.node_count() {
        let out = graph.out_edges(v);
        for (&e, p) in out.iter().zip(softmax_at(logits, out.iter().copied())) {
            w[e] = p;
        }
    }
    w
}

/// Sparse `P` and `B` for fixed edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOperators {
    weights: Vec<f64>,
    sources: Vec<NodeId>,
    rows: Vec<Vec<(EdgeId, f64)>>,
    trapped: Vec<bool>,
}

pub fn build_operators(graph: &NavGraph, weights: &[f64]) -> TransitionOperators {
    assert_eq!(weights.len(), graph.edge_count(), "one weight per edge");
    let mut rows = Vec::with_capacity(graph.edge_count());
    let mut trapped = Vec::with_capacity(graph.edge_count());
    for edge in graph.edges() {
        let allowed: Vec<EdgeId> = graph.out_edges(edge.dst).iter().copied().filter(|&b| graph.edge(b).dst != edge.src).collect();
        let denom: f64 = allowed.iter().map(|&b| weights[b]).sum();
        if allowed.is_empty() || denom <= 0.0 {
            rows.push(Vec::new());
            trapped.push(true);
        } else {
            rows.push(allowed.into_iter().map(|b| (b, weights[b] / denom)).collect());
            trapped.push(false);
        }
    }
    TransitionOperators { weights: weights.to_vec(), sources: graph.edges().iter().map(|e| e.src).collect(), rows, trapped }
}

impl TransitionOperators {
    pub fn edge_count(&self) -> usize {
        self.rows.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nonzero entries of row `a` of `P`, in ascending column order.
    pub fn p_row(&self, a: EdgeId) -> &[(EdgeId, f64)] {
        &self.rows[a]
    }

    pub fn p(&self, a: EdgeId, b: EdgeId) -> f64 {
        self.rows[a].iter().find(|&&(c, _)| c == b).map_or(0.0, |&(_, v)| v)
    }

    pub fn b(&self, e: EdgeId, node: NodeId) -> f64 {
        if self.sources[e] == node {
            self.weights[e]
        } else {
            0.0
        }
    }

    /// Whether a walk arriving over edge `a` has nowhere to go but back.
    pub fn is_trapped(&self, a: EdgeId) -> bool {
        self.trapped[a]
    }

    pub fn trapped_count(&self) -> usize {
        self.trapped.iter().filter(|&&t| t).count()
    }

    pub fn p_dense(&self) -> nalgebra::DMatrix<f64> {
        let m = self.edge_count();
        let mut p = nalgebra::DMatrix::zeros(m, m);
        for (a, row) in self.rows.iter().enumerate() {
            for &(b, v) in row {
                p[(a, b)] = v;
            }
        }
        p
    }

    pub fn b_dense(&self, n: usize) -> nalgebra::DMatrix<f64> {
        let mut b = nalgebra::DMatrix::zeros(self.edge_count(), n);
        for (e, &src) in self.sources.iter().enumerate() {
            b[(e, src)] = self.weights[e];
        }
        b
    }

    /// One walk step over edges: `y ↦ Pᵀ y`.
    fn step(&self, y: &[f64]) -> Vec<f64> {
        let mut next = vec![0.0; y.len()];
        for (a, &mass) in y.iter().enumerate() {
            if mass != 0.0 {
                for &(b, q) in &self.rows[a] {
                    next[b] += mass * q;
                }
            }
        }
        next
    }
}

/// A predicted node distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    /// Unit-sum distribution, or all zeros when no mass survived.
    pub distribution: Vec<f64>,
    /// Mass left before renormalization; below 1 when some walks were trapped.
    pub retained_mass: f64,
}

impl Propagation {
    pub(crate) fn from_raw(mut raw: Vec<f64>) -> Self {
        let mass: f64 = raw.iter().sum();
        if mass > 0.0 {
            raw.iter_mut().for_each(|x| *x /= mass);
        } else {
            raw.iter_mut().for_each(|x| *x = 0.0);
        }
        Self { distribution: raw, retained_mass: mass.max(0.0) }
    }

    /// Every walk was trapped; the distribution carries no information.
    pub fn is_degenerate(&self) -> bool {
        self.retained_mass <= 0.0
    }

    /// The distribution before renormalization.
    pub fn raw(&self) -> Vec<f64> {
        self.distribution.iter().map(|x| x * self.retained_mass).collect()
    }
}

/// Moves the node distribution `x` forward `h ≥ 1` steps.
pub fn propagate(graph: &NavGraph, ops: &TransitionOperators, x: &[f64], h: usize, mode: ProjectionMode) -> Result<Propagation> {
    if h == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    if x.len() != graph.node_count() || ops.edge_count() != graph.edge_count() {
        return Err(Error::DimensionMismatch(format!("state has {} entries for {} nodes", x.len(), graph.node_count())));
    }
    let mut y: Vec<f64> = (0..graph.edge_count()).map(|e| ops.weights[e] * x[ops.sources[e]]).collect();
    let raw = match mode {
        ProjectionMode::HeadProjection => {
            for _ in 1..h {
                y = ops.step(&y);
            }
            let mut out = vec![0.0; graph.node_count()];
            for (e, edge) in graph.edges().iter().enumerate() {
                out[edge.dst] += y[e];
            }
            out
        }
        ProjectionMode::Pseudoinverse => {
            if graph.edge_count() > PSEUDOINVERSE_EDGE_LIMIT {
                return Err(Error::TooLargeForPseudoinverse { m: graph.edge_count(), limit: PSEUDOINVERSE_EDGE_LIMIT });
            }
            for _ in 0..h {
                y = ops.step(&y);
            }
            pseudoinverse_apply(graph, &ops.weights, &y)
        }
    };
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { stage: "propagation" });
    }
    Ok(Propagation::from_raw(raw))
}

/// `B⁺ y`, clamped at zero.
///
/// `B` has one nonzero per row and distinct rows per column, so its columns
/// are orthogonal and `B⁺ = (BᵀB)⁻¹Bᵀ` on columns with any weight, zero
/// elsewhere: `(B⁺y)[k] = Σ_{e∈out(k)} w_e·y_e / Σ_{e∈out(k)} w_e²`.
pub(crate) fn pseudoinverse_apply(graph: &NavGraph, weights: &[f64], y: &[f64]) -> Vec<f64> {
    (0..graph.node_count())
        .map(|k| {
            let out = graph.out_edges(k);
            let norm: f64 = out.iter().map(|&e| weights[e] * weights[e]).sum();
            if norm > 0.0 {
                (out.iter().map(|&e| weights[e] * y[e]).sum::<f64>() / norm).max(0.0)
            } else {
                0.0
            }
        })
        .collect()
}
