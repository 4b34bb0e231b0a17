//! Dual hypergraph transformation and the edge features read off the dual.
//!
//! The transformation swaps the roles of nodes and edges: a graph given as
//! `(F, M, E)` (node features, incidence, edge features) becomes
//! `(E, Mᵀ, F)`. Original edges are the dual's nodes and every original node
//! becomes a hyperedge joining the dual nodes of its incident edges. Applying
//! it twice gives back the input.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{incidence, IncidenceMatrix, IncidenceMode, NavGraph};

/// A (hyper)graph as node features, incidence and (hyper)edge features.
///
/// Both a graph and its dual hypergraph use this shape: for the dual,
/// `node_features` are the original edge features and `edge_features` the
/// original node features.
#[derive(Debug, Clone, PartialEq)]
pub struct HypergraphTriple {
    pub node_features: DMatrix<f64>,
    pub incidence: IncidenceMatrix,
    pub edge_features: DMatrix<f64>,
}

pub fn dht(graph: &HypergraphTriple) -> Result<HypergraphTriple> {
    let (rows, cols) = graph.incidence.shape();
    if graph.node_features.nrows() != rows || graph.edge_features.nrows() != cols {
        return Err(Error::DimensionMismatch(format!(
            "incidence is {rows}x{cols} but there are {} node and {} edge feature rows",
            graph.node_features.nrows(),
            graph.edge_features.nrows()
        )));
    }
    Ok(HypergraphTriple {
        node_features: graph.edge_features.clone(),
        incidence: graph.incidence.transpose(),
        edge_features: graph.node_features.clone(),
    })
}

/// Cosine similarity between the undirected incidence rows of each edge's
/// endpoints. Values lie in `[0, 1]`.
pub fn similarity_hyperedge(graph: &NavGraph) -> Vec<f64> {
    let m = incidence(graph, IncidenceMode::Undirected);
    let rows: Vec<Vec<usize>> = (0..graph.node_count()).map(|v| m.row(v).map(|(c, _)| c).collect()).collect();
    graph
        .edges()
        .iter()
        .map(|e| {
            let (a, b) = (&rows[e.src], &rows[e.dst]);
            if a.is_empty() || b.is_empty() {
                return 0.0;
            }
            let shared = sorted_intersection_len(a, b) as f64;
            // The product of the lengths is an exact integer, so equal rows
            // give exactly 1.
            shared / ((a.len() * b.len()) as f64).sqrt()
        })
        .collect()
}

fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Unnormalized in/out degree of every dual node.
///
/// For each original node `l`, every pair of an edge entering `l` and an edge
/// leaving `l` is a directed dual connection `e_in -> e_out` through the
/// hyperedge `l*`. Pairs are counted once per through-node.
pub fn dual_degrees(graph: &NavGraph) -> Vec<(usize, usize)> {
    let m = incidence(graph, IncidenceMode::Directed);
    let mut degrees = vec![(0usize, 0usize); graph.edge_count()];
    for l in 0..graph.node_count() {
        let (entering, leaving): (Vec<_>, Vec<_>) = m.row(l).partition(|&(_, v)| v > 0);
        for &(e, _) in &entering {
            degrees[e].1 += leaving.len();
        }
        for &(e, _) in &leaving {
            degrees[e].0 += entering.len();
        }
    }
    degrees
}

/// Dual-node `(in, out)` degrees divided by the largest degree in either
/// direction; all zeros when the dual has no connections at all.
pub fn dhnode_in_out_degree(graph: &NavGraph) -> Vec<(f64, f64)> {
    let degrees = dual_degrees(graph);
    let d_max = degrees.iter().map(|&(i, o)| i.max(o)).max().unwrap_or(0);
    if d_max == 0 {
        return vec![(0.0, 0.0); degrees.len()];
    }
    let d = d_max as f64;
    degrees.into_iter().map(|(i, o)| (i as f64 / d, o as f64 / d)).collect()
}
