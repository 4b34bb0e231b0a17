//! Directed article graphs and the trajectories walked over them.
//!
//! Node and edge ids are dense, 0-based indices so that feature matrices and
//! state vectors can be indexed by id directly.

mod dataset;
mod graphml;
mod incidence;
pub mod wikispeedia;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use dataset::{load_dataset, save_dataset, split_dataset, Dataset, Split, DEFAULT_SPLIT, FILES as DATASET_FILES};
pub use graphml::write_graphml;
pub use incidence::{incidence, IncidenceMatrix, IncidenceMode};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Horizon used when a trajectory is created without an explicit prefix length.
pub const DEFAULT_HORIZON: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleNode {
    pub id: NodeId,
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub id: EdgeId,
    pub src: NodeId,
    pub dst: NodeId,
}

/// A directed, loop-free article graph with per-node adjacency lists.
///
/// Adjacency lists hold edge ids in ascending order. The graph is immutable
/// once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavGraph {
    nodes: Vec<ArticleNode>,
    edges: Vec<DirectedEdge>,
    out_adj: Vec<Vec<EdgeId>>,
    in_adj: Vec<Vec<EdgeId>>,
    by_title: HashMap<String, NodeId>,
    by_endpoints: HashMap<(NodeId, NodeId), EdgeId>,
}

/// Builds a graph from titled edges.
///
/// Node ids follow the order of `node_titles`; edge ids follow the first
/// appearance of each `(src, dst)` pair, later duplicates are dropped.
pub fn build_graph<S: AsRef<str>>(edge_list: &[(S, S)], node_titles: &[S]) -> Result<NavGraph> {
    let titles: Vec<String> = node_titles.iter().map(|t| t.as_ref().to_owned()).collect();
    let mut index = HashMap::with_capacity(titles.len());
    for (id, title) in titles.iter().enumerate() {
        if index.insert(title.as_str(), id).is_some() {
            return Err(Error::DuplicateTitle(title.clone()));
        }
    }
    let lookup = |t: &str| index.get(t).copied().ok_or_else(|| Error::UnknownTitle(t.to_owned()));
    let mut pairs = Vec::with_capacity(edge_list.len());
    for (src, dst) in edge_list {
        pairs.push((lookup(src.as_ref())?, lookup(dst.as_ref())?));
    }
    NavGraph::from_id_pairs(titles, &pairs, true)
}

impl NavGraph {
    /// Builds a graph from titles (ids by position) and `(src, dst)` id pairs.
    ///
    /// With `collapse_duplicates` unset a repeated pair is an error instead of
    /// being dropped.
    pub fn from_id_pairs(
        titles: Vec<String>,
        pairs: &[(NodeId, NodeId)],
        collapse_duplicates: bool,
    ) -> Result<Self> {
        if titles.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let n = titles.len();
        let mut by_title = HashMap::with_capacity(n);
        let mut nodes = Vec::with_capacity(n);
        for (id, title) in titles.into_iter().enumerate() {
            if by_title.insert(title.clone(), id).is_some() {
                return Err(Error::DuplicateTitle(title));
            }
            nodes.push(ArticleNode { id, title });
        }
        let mut edges = Vec::with_capacity(pairs.len());
        let mut by_endpoints = HashMap::with_capacity(pairs.len());
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        for &(src, dst) in pairs {
            for id in [src, dst] {
                if id >= n {
                    return Err(Error::Inconsistent(format!("edge endpoint {id} out of range for {n} nodes")));
                }
            }
            if src == dst {
                return Err(Error::SelfLoop(nodes[src].title.clone()));
            }
            if by_endpoints.contains_key(&(src, dst)) {
                if collapse_duplicates {
                    continue;
                }
                return Err(Error::Inconsistent(format!("duplicate edge {src} -> {dst}")));
            }
            let id = edges.len();
            by_endpoints.insert((src, dst), id);
            edges.push(DirectedEdge { id, src, dst });
            out_adj[src].push(id);
            in_adj[dst].push(id);
        }
        Ok(Self { nodes, edges, out_adj, in_adj, by_title, by_endpoints })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[ArticleNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[DirectedEdge] {
        &self.edges
    }

    pub fn edge(&self, id: EdgeId) -> DirectedEdge {
        self.edges[id]
    }

    pub fn title(&self, id: NodeId) -> &str {
        &self.nodes[id].title
    }

    pub fn node_id(&self, title: &str) -> Option<NodeId> {
        self.by_title.get(title).copied()
    }

    pub fn edge_between(&self, src: NodeId, dst: NodeId) -> Option<EdgeId> {
        self.by_endpoints.get(&(src, dst)).copied()
    }

    pub fn out_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.out_adj[node]
    }

    pub fn in_edges(&self, node: NodeId) -> &[EdgeId] {
        &self.in_adj[node]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.in_adj[node].len()
    }

    /// Successor node ids of `node`, in edge-id order.
    pub fn successors(&self, node: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.out_adj[node].iter().map(move |&e| self.edges[e].dst)
    }

    pub fn density(&self) -> Result<f64> {
        density(self.node_count(), self.edge_count())
    }
}

/// Density of a loop-free directed graph, `m / (n (n - 1))`.
pub fn density(n: usize, m: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DensityDomain(n));
    }
    Ok(m as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// An observed navigation path, split into a prefix of `prefix_len` nodes and
/// a suffix of `horizon()` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub path_id: usize,
    node_ids: Vec<NodeId>,
    prefix_len: usize,
}

impl Trajectory {
    pub fn new(path_id: usize, node_ids: Vec<NodeId>, prefix_len: usize) -> Result<Self> {
        if node_ids.len() < 2 {
            return Err(Error::InvalidTrajectory(format!("path {path_id} has fewer than two nodes")));
        }
        if prefix_len == 0 || prefix_len >= node_ids.len() {
            return Err(Error::InvalidTrajectory(format!(
                "path {path_id}: prefix length {prefix_len} must lie in [1, {}]",
                node_ids.len() - 1
            )));
        }
        let mut seen = std::collections::HashSet::with_capacity(node_ids.len());
        if let Some(v) = node_ids.iter().find(|v| !seen.insert(**v)) {
            return Err(Error::InvalidTrajectory(format!("path {path_id} revisits node {v}")));
        }
        Ok(Self { path_id, node_ids, prefix_len })
    }

    /// Uses the last [`DEFAULT_HORIZON`] nodes (at most `len - 1`) as suffix.
    pub fn with_default_split(path_id: usize, node_ids: Vec<NodeId>) -> Result<Self> {
        let prefix_len = node_ids.len().saturating_sub(DEFAULT_HORIZON).max(1);
        Self::new(path_id, node_ids, prefix_len)
    }

    pub fn node_ids(&self) -> &[NodeId] {
        &self.node_ids
    }

    pub fn len(&self) -> usize {
        self.node_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn horizon(&self) -> usize {
        self.node_ids.len() - self.prefix_len
    }

    pub fn prefix(&self) -> &[NodeId] {
        &self.node_ids[..self.prefix_len]
    }

    pub fn suffix(&self) -> &[NodeId] {
        &self.node_ids[self.prefix_len..]
    }

    /// Edge ids of consecutive steps; fails on the first step that is not an edge.
    pub fn edge_ids(&self, graph: &NavGraph) -> Result<Vec<EdgeId>> {
        self.node_ids
            .windows(2)
            .map(|w| {
                graph.edge_between(w[0], w[1]).ok_or(Error::MissingEdge {
                    path_id: self.path_id,
                    from: w[0],
                    to: w[1],
                })
            })
            .collect()
    }

    pub fn validate(&self, graph: &NavGraph) -> Result<()> {
        if let Some(&v) = self.node_ids.iter().find(|&&v| v >= graph.node_count()) {
            return Err(Error::DanglingId { file: "trajectory".into(), line: self.path_id, id: v });
        }
        self.edge_ids(graph).map(|_| ())
    }
}
