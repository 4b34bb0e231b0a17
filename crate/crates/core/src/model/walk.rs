//! The non-backtracking walk restricted to the edges a query can reach.
//!
//! A walk of `h` steps from `v` only ever reads the logits of edges leaving
//! nodes within `h − 1` hops of `v`, so training and prediction evaluate the
//! network on that local edge set instead of the whole graph. `P` is applied
//! as a softmax over each edge's allowed successors, which is the same value
//! as `w / (1 − w_back)`.

use std::collections::{BTreeMap, HashMap};

use super::operators::softmax_at;
use crate::graph::{EdgeId, NavGraph, NodeId};

/// Floor inside the logarithm of the loss.
pub const LOSS_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct LocalWalk {
    current: NodeId,
    steps: usize,
    edges: Vec<EdgeId>,
    dst: Vec<NodeId>,
    /// Local indices of the edges leaving the current node.
    start: Vec<usize>,
    /// Allowed successors of each local edge, CSR style.
    succ_ptr: Vec<usize>,
    succ: Vec<usize>,
}

impl LocalWalk {
    /// The edges needed for a walk of `steps ≥ 1` edges from `current`.
    pub fn new(graph: &NavGraph, current: NodeId, steps: usize) -> Self {
        assert!(steps >= 1, "a walk takes at least one step");
        let mut depth: BTreeMap<NodeId, usize> = BTreeMap::from([(current, 0)]);
        let mut frontier = vec![current];
        for d in 1..steps {
            let mut next = Vec::new();
            for &v in &frontier {
                for u in graph.successors(v) {
                    if let std::collections::btree_map::Entry::Vacant(slot) = depth.entry(u) {
                        slot.insert(d);
                        next.push(u);
                    }
                }
            }
            frontier = next;
        }
        // Node order by (depth, id) keeps the local layout deterministic.
        let mut expanded: Vec<(usize, NodeId)> = depth.iter().map(|(&v, &d)| (d, v)).collect();
        expanded.sort_unstable();
        let mut edges = Vec::new();
        let mut first_out: HashMap<NodeId, usize> = HashMap::with_capacity(expanded.len());
        for &(_, v) in &expanded {
            first_out.insert(v, edges.len());
            edges.extend_from_slice(graph.out_edges(v));
        }
        let dst: Vec<NodeId> = edges.iter().map(|&e| graph.edge(e).dst).collect();
        let mut succ_ptr = Vec::with_capacity(edges.len() + 1);
        let mut succ = Vec::new();
        succ_ptr.push(0);
        for (a, &e) in edges.iter().enumerate() {
            if let Some(&base) = first_out.get(&dst[a]) {
                let src = graph.edge(e).src;
                for (k, &b) in graph.out_edges(dst[a]).iter().enumerate() {
                    if graph.edge(b).dst != src {
                        succ.push(base + k);
                    }
                }
            }
            succ_ptr.push(succ.len());
        }
        let start = (0..graph.out_degree(current)).collect();
        Self { current, steps, edges, dst, start, succ_ptr, succ }
    }

    pub fn current(&self) -> NodeId {
        self.current
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Global ids of the local edges; logits are passed in this order.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn local_index(&self) -> HashMap<EdgeId, usize> {
        self.edges.iter().enumerate().map(|(i, &e)| (e, i)).collect()
    }

    pub fn destination(&self, a: usize) -> NodeId {
        self.dst[a]
    }

    pub fn start_edges(&self) -> &[usize] {
        &self.start
    }

    pub fn successors(&self, a: usize) -> &[usize] {
        &self.succ[self.succ_ptr[a]..self.succ_ptr[a + 1]]
    }

    /// Plain softmax over the edges leaving the current node.
    pub fn start_probabilities(&self, z: &[f64]) -> Vec<f64> {
        softmax_at(z, self.start.iter().copied())
    }

    /// Non-backtracking step probabilities after arriving over local edge `a`.
    pub fn step_probabilities(&self, z: &[f64], a: usize) -> Vec<f64> {
        softmax_at(z, self.successors(a).iter().copied())
    }

    /// Edge mass after each step: `ys[s][a]` is the mass on `a` after `s + 1` edges.
    pub fn forward(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let mut ys = Vec::with_capacity(self.steps);
        let mut y = vec![0.0; self.edges.len()];
        for (&a, p) in self.start.iter().zip(self.start_probabilities(z)) {
            y[a] = p;
        }
        for _ in 1..self.steps {
            let mut next = vec![0.0; self.edges.len()];
            for (a, &mass) in y.iter().enumerate() {
                if mass != 0.0 {
                    for (&b, q) in self.successors(a).iter().zip(self.step_probabilities(z, a)) {
                        next[b] += mass * q;
                    }
                }
            }
            ys.push(y);
            y = next;
        }
        ys.push(y);
        ys
    }

    /// Node masses at the end of the walk: each edge's mass at its destination.
    pub fn head_projection(&self, y_last: &[f64]) -> BTreeMap<NodeId, f64> {
        let mut out = BTreeMap::new();
        for (a, &mass) in y_last.iter().enumerate() {
            if mass != 0.0 {
                *out.entry(self.dst[a]).or_insert(0.0) += mass;
            }
        }
        out
    }

    /// `−ln(x̂[target] + ε)` for the renormalized head projection, and its
    /// gradient with respect to the local logits.
    pub fn loss_and_gradient(&self, z: &[f64], target: NodeId) -> (f64, Vec<f64>) {
        let ys = self.forward(z);
        let last = ys.last().unwrap();
        let mass: f64 = last.iter().sum();
        let mut dz = vec![0.0; self.edges.len()];
        if mass <= 0.0 {
            log::debug!("all walk mass from node {} trapped before step {}", self.current, self.steps);
            return (-LOSS_EPSILON.ln(), dz);
        }
        let hit: f64 = last.iter().zip(&self.dst).filter(|&(_, &d)| d == target).map(|(y, _)| y).sum();
        let p = hit / mass;
        let loss = -(p + LOSS_EPSILON).ln();
        // dL/dy at the final step.
        let scale = -1.0 / ((p + LOSS_EPSILON) * mass);
        let mut g: Vec<f64> = self.dst.iter().map(|&d| scale * (f64::from(u8::from(d == target)) - p)).collect();
        for s in (0..self.steps - 1).rev() {
            let y = &ys[s];
            let mut g_prev = vec![0.0; self.edges.len()];
            for a in 0..self.edges.len() {
                let succ = self.successors(a);
                if succ.is_empty() {
                    continue;
                }
                let q = self.step_probabilities(z, a);
                let gbar: f64 = succ.iter().zip(&q).map(|(&b, qb)| qb * g[b]).sum();
                g_prev[a] = gbar;
                if y[a] != 0.0 {
                    for (&b, qb) in succ.iter().zip(&q) {
                        dz[b] += y[a] * qb * (g[b] - gbar);
                    }
                }
            }
            g = g_prev;
        }
        let w = self.start_probabilities(z);
        let gbar: f64 = self.start.iter().zip(&w).map(|(&b, wb)| wb * g[b]).sum();
        for (&b, wb) in self.start.iter().zip(&w) {
            dz[b] += wb * (g[b] - gbar);
        }
        (loss, dz)
    }
}
