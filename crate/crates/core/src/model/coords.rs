//! Pseudo-coordinates: the observed prefix diffused over the graph.
//!
//! `Â` is the row-normalized out-adjacency with a self-connection on every
//! node, so one diffusion step moves a node's mass evenly to itself and its
//! successors. Two channels are diffused `K` times:
//!
//! 1. a one-hot vector at the current node `v_t`;
//! 2. the decayed history `Σ_τ γ^(t−τ) · onehot(v_τ)` over the prefix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{NavGraph, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    /// Number of diffusion steps `K`.
    pub depth: usize,
    /// History decay `γ ∈ (0, 1]`.
    pub decay: f64,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self { depth: 3, decay: 0.7 }
    }
}

/// Width of a node's coordinate vector.
pub const COORD_WIDTH: usize = 2;

/// Sparse per-node coordinates; absent nodes are zero in both channels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoCoordinates {
    values: BTreeMap<NodeId, [f64; COORD_WIDTH]>,
}

impl PseudoCoordinates {
    pub fn get(&self, node: NodeId) -> [f64; COORD_WIDTH] {
        self.values.get(&node).copied().unwrap_or([0.0; COORD_WIDTH])
    }

    pub fn current(&self, node: NodeId) -> f64 {
        self.get(node)[0]
    }

    pub fn history(&self, node: NodeId) -> f64 {
        self.get(node)[1]
    }

    /// Nodes with a nonzero entry in either channel.
    pub fn support(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.values.keys().copied()
    }

    /// Dense `(current, history)` vectors of length `n`.
    pub fn to_dense(&self, n: usize) -> (Vec<f64>, Vec<f64>) {
        let (mut cur, mut hist) = (vec![0.0; n], vec![0.0; n]);
        for (&v, c) in &self.values {
            cur[v] = c[0];
            hist[v] = c[1];
        }
        (cur, hist)
    }
}

fn diffuse(graph: &NavGraph, mut x: BTreeMap<NodeId, f64>, depth: usize) -> BTreeMap<NodeId, f64> {
    for _ in 0..depth {
        let mut next: BTreeMap<NodeId, f64> = BTreeMap::new();
        for (&v, &mass) in &x {
            let share = mass / (graph.out_degree(v) + 1) as f64;
            *next.entry(v).or_default() += share;
            for u in graph.successors(v) {
                *next.entry(u).or_default() += share;
            }
        }
        x = next;
    }
    x
}

/// Coordinates for an agent that has observed `prefix` (`v_1 … v_t`).
///
/// # Panics
/// If `prefix` is empty.
pub fn pseudo_coordinates(graph: &NavGraph, prefix: &[NodeId], config: DiffusionConfig) -> PseudoCoordinates {
    let &current = prefix.last().expect("prefix must contain the current node");
    let mut history: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut weight = 1.0;
    for &v in prefix.iter().rev() {
        *history.entry(v).or_default() += weight;
        weight *= config.decay;
    }
    let cur = diffuse(graph, BTreeMap::from([(current, 1.0)]), config.depth);
    let hist = diffuse(graph, history, config.depth);
    let mut values: BTreeMap<NodeId, [f64; COORD_WIDTH]> = BTreeMap::new();
    for (v, x) in cur {
        values.entry(v).or_default()[0] = x;
    }
    for (v, x) in hist {
        values.entry(v).or_default()[1] = x;
    }
    PseudoCoordinates { values }
}
