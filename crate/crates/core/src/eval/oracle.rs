//! Exhaustive enumeration of non-backtracking walks, for testing propagation.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NavGraph};

pub const ORACLE_MAX_NODES: usize = 12;
pub const ORACLE_MAX_HORIZON: usize = 4;

/// Endpoint distribution of all non-backtracking walks of `h` edges started
/// from `x`, without renormalization.
///
/// The first step takes edge `e` with probability `w(e)`. Every later step
/// from `i→j` to `j→l`, `l ≠ i`, has probability `w(j→l) / (1 − w(j→i))`
/// when the back edge exists and `w(j→l) / Σ w` over `j`'s successors
/// otherwise.
pub fn brute_force_walk_oracle(graph: &NavGraph, weights: &[f64], x: &[f64], h: usize) -> Result<Vec<f64>> {
    if graph.node_count() > ORACLE_MAX_NODES || h > ORACLE_MAX_HORIZON {
        return Err(Error::OracleTooLarge(format!(
            "n = {}, h = {h}; limits are n ≤ {ORACLE_MAX_NODES}, h ≤ {ORACLE_MAX_HORIZON}",
            graph.node_count()
        )));
    }
    if h == 0 {
        return Err(Error::InvalidConfig("horizon must be at least 1".into()));
    }
    let mut out = vec![0.0; graph.node_count()];
    for (v, &mass) in x.iter().enumerate() {
        if mass == 0.0 {
            continue;
        }
        for &e in graph.out_edges(v) {
            walk(graph, weights, e, mass * weights[e], h - 1, &mut out);
        }
    }
    Ok(out)
}

fn walk(graph: &NavGraph, weights: &[f64], arrived: EdgeId, p: f64, remaining: usize, out: &mut [f64]) {
    let edge = graph.edge(arrived);
    if remaining == 0 {
        out[edge.dst] += p;
        return;
    }
    let out_edges = graph.out_edges(edge.dst);
    let denom = match graph.edge_between(edge.dst, edge.src) {
        Some(back) => 1.0 - weights[back],
        None => out_edges.iter().map(|&e| weights[e]).sum(),
    };
    if denom <= 0.0 {
        return;
    }
    for &next in out_edges {
        if graph.edge(next).dst != edge.src {
            walk(graph, weights, next, p * weights[next] / denom, remaining - 1, out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    #[test]
    fn chain_and_cycle() {
        let chain = build_graph(&[("a", "b"), ("b", "c")], &["a", "b", "c"]).unwrap();
        assert_eq!(brute_force_walk_oracle(&chain, &[1.0, 1.0], &[1.0, 0.0, 0.0], 2).unwrap(), vec![0.0, 0.0, 1.0]);
        let cycle = build_graph(&[("a", "b"), ("b", "c"), ("c", "a")], &["a", "b", "c"]).unwrap();
        assert_eq!(brute_force_walk_oracle(&cycle, &[1.0; 3], &[0.0, 1.0, 0.0], 3).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn size_cap() {
        let titles: Vec<String> = (0..13).map(|i| i.to_string()).collect();
        let g = build_graph::<String>(&[], &titles).unwrap();
        assert!(matches!(brute_force_walk_oracle(&g, &[], &[0.0; 13], 1), Err(Error::OracleTooLarge(_))));
        let small = build_graph(&[("a", "b")], &["a", "b"]).unwrap();
        assert!(matches!(brute_force_walk_oracle(&small, &[1.0], &[1.0, 0.0], 5), Err(Error::OracleTooLarge(_))));
    }
}
