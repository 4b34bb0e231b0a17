use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;

use super::coords::{pseudo_coordinates, PseudoCoordinates, COORD_WIDTH};
use super::operators::{normalize_weights, pseudoinverse_apply, softmax_at, ProjectionMode, Propagation, PSEUDOINVERSE_EDGE_LIMIT};
use super::walk::LocalWalk;
use super::Model;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::graph::{EdgeId, NavGraph, NodeId};

/// A model applied to one graph and its standardized features.
#[derive(Debug, Clone)]
pub struct Predictor<'a> {
    model: &'a Model,
    graph: &'a NavGraph,
    node_x: DMatrix<f64>,
    edge_x: DMatrix<f64>,
}

/// A predicted continuation and its likelihood given the prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffixCandidate {
    pub nodes: Vec<NodeId>,
    pub probability: f64,
}

impl<'a> Predictor<'a> {
    pub(super) fn new(model: &'a Model, graph: &'a NavGraph, features: &FeatureSet) -> Result<Self> {
        Ok(Self {
            model,
            graph,
            node_x: model.node_scaler.transform(&features.nodes.values)?,
            edge_x: model.edge_scaler.transform(&features.edges.values)?,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn graph(&self) -> &NavGraph {
        self.graph
    }

    fn check_prefix(&self, prefix: &[NodeId]) -> Result<()> {
        if prefix.is_empty() {
            return Err(Error::InvalidTrajectory("empty prefix".into()));
        }
        if let Some(&v) = prefix.iter().find(|&&v| v >= self.graph.node_count()) {
            return Err(Error::InvalidTrajectory(format!("node {v} is not in the graph")));
        }
        Ok(())
    }

    pub fn coordinates(&self, prefix: &[NodeId]) -> PseudoCoordinates {
        pseudo_coordinates(self.graph, prefix, self.model.config.diffusion)
    }

    /// Appends the network input for every edge in `edges` to `out`, row by row.
    pub(super) fn push_input_rows(&self, coords: &PseudoCoordinates, edges: &[EdgeId], out: &mut Vec<f64>) {
        for &e in edges {
            let edge = self.graph.edge(e);
            out.extend(coords.get(edge.src));
            out.extend(coords.get(edge.dst));
            out.extend(self.node_x.row(edge.src).iter());
            out.extend(self.node_x.row(edge.dst).iter());
            out.extend(self.edge_x.row(e).iter());
        }
    }

    pub fn input_width(&self) -> usize {
        2 * COORD_WIDTH + 2 * self.node_x.ncols() + self.edge_x.ncols()
    }

    /// Logits of `edges` for an agent that has observed `prefix`.
    pub fn logits(&self, prefix: &[NodeId], edges: &[EdgeId]) -> Result<Vec<f64>> {
        self.check_prefix(prefix)?;
        if edges.is_empty() {
            return Ok(Vec::new());
        }
        let coords = self.coordinates(prefix);
        let mut rows = Vec::with_capacity(edges.len() * self.input_width());
        self.push_input_rows(&coords, edges, &mut rows);
        let batch = DMatrix::from_row_slice(edges.len(), self.input_width(), &rows);
        Ok(self.model.mlp.forward(&batch)?.0)
    }

    /// Normalized weights of every edge of the graph.
    pub fn edge_weights(&self, prefix: &[NodeId]) -> Result<Vec<f64>> {
        let all: Vec<EdgeId> = (0..self.graph.edge_count()).collect();
        let z = self.logits(prefix, &all)?;
        Ok(normalize_weights(self.graph, &z))
    }

    /// Weights of the edges leaving the prefix's last node, as `(edge, weight)`.
    pub fn next_step_weights(&self, prefix: &[NodeId]) -> Result<Vec<(EdgeId, f64)>> {
        self.check_prefix(prefix)?;
        let out = self.graph.out_edges(*prefix.last().unwrap());
        let z = self.logits(prefix, out)?;
        Ok(out.iter().copied().zip(softmax_at(&z, 0..z.len())).collect())
    }

    /// Distribution over the node reached `h` steps after the prefix.
    pub fn propagate(&self, prefix: &[NodeId], h: usize, mode: ProjectionMode) -> Result<Propagation> {
        self.check_prefix(prefix)?;
        if h == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        let current = *prefix.last().unwrap();
        let steps = match mode {
            ProjectionMode::HeadProjection => h,
            ProjectionMode::Pseudoinverse => {
                if self.graph.edge_count() > PSEUDOINVERSE_EDGE_LIMIT {
                    return Err(Error::TooLargeForPseudoinverse { m: self.graph.edge_count(), limit: PSEUDOINVERSE_EDGE_LIMIT });
                }
                h + 1
            }
        };
        let mut raw = vec![0.0; self.graph.node_count()];
        if self.graph.out_degree(current) == 0 {
            return Ok(Propagation::from_raw(raw));
        }
        let walk = LocalWalk::new(self.graph, current, steps);
        let z = self.logits(prefix, walk.edges())?;
        let ys = walk.forward(&z);
        let last = ys.last().unwrap();
        match mode {
            ProjectionMode::HeadProjection => {
                for (v, mass) in walk.head_projection(last) {
                    raw[v] = mass;
                }
            }
            ProjectionMode::Pseudoinverse => {
                // Weights and mass of the local edges laid out globally.
                let mut w = vec![0.0; self.graph.edge_count()];
                let mut y = vec![0.0; self.graph.edge_count()];
                let mut seen = vec![false; self.graph.node_count()];
                let index = walk.local_index();
                for (a, &e) in walk.edges().iter().enumerate() {
                    y[e] = last[a];
                    let src = self.graph.edge(e).src;
                    if !seen[src] {
                        seen[src] = true;
                        let out = self.graph.out_edges(src);
                        let zs: Vec<f64> = out.iter().map(|oe| z[index[oe]]).collect();
                        for (&oe, p) in out.iter().zip(softmax_at(&zs, 0..zs.len())) {
                            w[oe] = p;
                        }
                    }
                }
                raw = pseudoinverse_apply(self.graph, &w, &y);
            }
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { stage: "propagation" });
        }
        Ok(Propagation::from_raw(raw))
    }

    /// `Pr(suffix | prefix)`: the product of the step probabilities along the
    /// suffix. A step that is not an edge gives probability 0.
    pub fn suffix_likelihood(&self, prefix: &[NodeId], suffix: &[NodeId]) -> Result<f64> {
        self.check_prefix(prefix)?;
        if suffix.is_empty() {
            return Ok(1.0);
        }
        let current = *prefix.last().unwrap();
        let mut path = vec![current];
        path.extend_from_slice(suffix);
        let mut edges = Vec::with_capacity(suffix.len());
        for w in path.windows(2) {
            match self.graph.edge_between(w[0], w[1]) {
                Some(e) => edges.push(e),
                None => {
                    log::warn!("suffix step {} -> {} is not an edge; likelihood is 0", w[0], w[1]);
                    return Ok(0.0);
                }
            }
        }
        let walk = LocalWalk::new(self.graph, current, suffix.len());
        let z = self.logits(prefix, walk.edges())?;
        let index = walk.local_index();
        let previous = prefix.len().checked_sub(2).map(|i| prefix[i]);
        let mut p = self.first_step(&walk, &z, previous).into_iter().find(|&(a, _)| a == index[&edges[0]]).map_or(0.0, |(_, q)| q);
        for pair in edges.windows(2) {
            let (a, b) = (index[&pair[0]], index[&pair[1]]);
            let q = walk.successors(a).iter().zip(walk.step_probabilities(&z, a)).find(|&(&c, _)| c == b).map_or(0.0, |(_, q)| q);
            p *= q;
        }
        Ok(p)
    }

    /// First-step probabilities as `(local edge, probability)`: conditioned on
    /// not returning to `previous` when the prefix has a last edge, plain
    /// softmax otherwise.
    fn first_step(&self, walk: &LocalWalk, z: &[f64], previous: Option<NodeId>) -> Vec<(usize, f64)> {
        let allowed: Vec<usize> = walk.start_edges().iter().copied().filter(|&a| Some(walk.destination(a)) != previous).collect();
        let probs = softmax_at(z, allowed.iter().copied());
        allowed.into_iter().zip(probs).collect()
    }

    /// The `j` most likely suffixes of length `h`, most likely first. Ties are
    /// broken by the node sequence.
    pub fn top_suffixes(&self, prefix: &[NodeId], h: usize, j: usize) -> Result<Vec<SuffixCandidate>> {
        self.check_prefix(prefix)?;
        let current = *prefix.last().unwrap();
        if h == 0 || j == 0 || self.graph.out_degree(current) == 0 {
            return Ok(Vec::new());
        }
        let walk = LocalWalk::new(self.graph, current, h);
        let z = self.logits(prefix, walk.edges())?;
        let previous = prefix.len().checked_sub(2).map(|i| prefix[i]);
        let mut heap = BinaryHeap::new();
        for (a, p) in self.first_step(&walk, &z, previous) {
            heap.push(Partial { probability: p, nodes: vec![walk.destination(a)], last: a });
        }
        let mut out = Vec::with_capacity(j);
        while let Some(top) = heap.pop() {
            if top.nodes.len() == h {
                out.push(SuffixCandidate { nodes: top.nodes, probability: top.probability });
                if out.len() == j {
                    break;
                }
                continue;
            }
            for (&b, q) in walk.successors(top.last).iter().zip(walk.step_probabilities(&z, top.last)) {
                let mut nodes = top.nodes.clone();
                nodes.push(walk.destination(b));
                heap.push(Partial { probability: top.probability * q, nodes, last: b });
            }
        }
        Ok(out)
    }
}

/// A partial suffix in the best-first search. Extending a suffix never raises
/// its probability, so complete suffixes leave the heap in order.
struct Partial {
    probability: f64,
    nodes: Vec<NodeId>,
    last: usize,
}

impl Ord for Partial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.probability.total_cmp(&other.probability).then_with(|| other.nodes.cmp(&self.nodes))
    }
}

impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Partial {}
