//! Node and edge features.
//!
//! Nodes carry `(in-degree, out-degree)`. Edges carry a base pair
//! `(tfidf, nof)` optionally extended with features read off the dual
//! hypergraph, always in the column order `sim_hyperedge, dh_in, dh_out`.

mod dual;
pub mod tfidf;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use dual::{dht, dhnode_in_out_degree, dual_degrees, similarity_hyperedge, HypergraphTriple};
pub use tfidf::{edge_tfidf, tfidf_similarity, TfidfModel};

use crate::error::{Error, Result};
use crate::graph::{NavGraph, Trajectory};

pub const NODE_COLUMNS: [&str; 2] = ["in_degree", "out_degree"];
pub const EDGE_COLUMNS: [&str; 5] = ["tfidf", "nof", "sim_hyperedge", "dh_in", "dh_out"];

/// A named-column feature table, one row per node or edge.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub values: DMatrix<f64>,
}

impl FeatureMatrix {
    pub fn new(columns: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if columns.len() != values.ncols() {
            return Err(Error::DimensionMismatch(format!("{} column names for {} columns", columns.len(), values.ncols())));
        }
        Ok(Self { columns, values })
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn width(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.values.column(j).iter().copied().collect())
    }

    /// TSV with a header line of column names. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_tsv(&self) -> String {
        let mut out = self.columns.join("\t");
        out.push('\n');
        for i in 0..self.rows() {
            let row: Vec<String> = self.values.row(i).iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, file: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse { file: file.into(), line: 1, msg: "missing header".into() })?;
        let columns: Vec<String> = header.split('\t').map(str::to_owned).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for (i, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != columns.len() {
                return Err(Error::Parse {
                    file: file.into(),
                    line: i + 2,
                    msg: format!("expected {} fields, found {}", columns.len(), fields.len()),
                });
            }
            for f in fields {
                let v: f64 = f.parse().map_err(|_| Error::Parse { file: file.into(), line: i + 2, msg: format!("bad number `{f}`") })?;
                data.push(v);
            }
            rows += 1;
        }
        Self::new(columns.clone(), DMatrix::from_row_slice(rows, columns.len(), &data))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_owned()));
        }
        Self::from_tsv(&fs::read_to_string(path)?, &path.display().to_string())
    }
}

pub fn node_degree_features(graph: &NavGraph) -> FeatureMatrix {
    let n = graph.node_count();
    let values = DMatrix::from_fn(n, 2, |i, j| if j == 0 { graph.in_degree(i) as f64 } else { graph.out_degree(i) as f64 });
    FeatureMatrix { columns: NODE_COLUMNS.map(str::to_owned).to_vec(), values }
}

/// Number of traversals of every edge over the given (training) trajectories.
pub fn nof_counts(graph: &NavGraph, train: &[Trajectory]) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; graph.edge_count()];
    for t in train {
        for e in t.edge_ids(graph)? {
            counts[e] += 1;
        }
    }
    Ok(counts)
}

/// Which dual-hypergraph features extend the base edge pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureConfig {
    Original,
    Sim,
    Dhnode,
    Both,
}

impl FeatureConfig {
    pub const ALL: [FeatureConfig; 4] = [Self::Original, Self::Sim, Self::Dhnode, Self::Both];

    pub fn name(self) -> &'static str {
        match self {
            Self::Original => "original",
            Self::Sim => "sim",
            Self::Dhnode => "dhnode",
            Self::Both => "both",
        }
    }

    /// Row label used in the results tables.
    pub fn label(self) -> &'static str {
        match self {
            Self::Original => "Original Edges",
            Self::Sim => "Similarity-Hyperedge",
            Self::Dhnode => "DHnode-In-Out-Degree",
            Self::Both => "Similarity-Hyperedge-DHnode-In-Out-Degree",
        }
    }

    pub fn uses_similarity(self) -> bool {
        matches!(self, Self::Sim | Self::Both)
    }

    pub fn uses_dhnode(self) -> bool {
        matches!(self, Self::Dhnode | Self::Both)
    }

    pub fn edge_columns(self) -> Vec<String> {
        let mut cols = vec!["tfidf", "nof"];
        if self.uses_similarity() {
            cols.push("sim_hyperedge");
        }
        if self.uses_dhnode() {
            cols.extend(["dh_in", "dh_out"]);
        }
        cols.into_iter().map(str::to_owned).collect()
    }

    pub fn edge_width(self) -> usize {
        self.edge_columns().len()
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown feature configuration `{s}` (expected original, sim, dhnode or both)")))
    }
}

/// Edge features before assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatureParts {
    pub tfidf: Vec<f64>,
    pub nof: Vec<u64>,
    pub similarity: Option<Vec<f64>>,
    pub dhnode: Option<Vec<(f64, f64)>>,
}

pub fn assemble_edge_features(parts: &EdgeFeatureParts) -> Result<FeatureMatrix> {
    let m = parts.tfidf.len();
    let mismatch = |what: &str, len: usize| Error::DimensionMismatch(format!("{what} has {len} rows, expected {m}"));
    if parts.nof.len() != m {
        return Err(mismatch("nof", parts.nof.len()));
    }
    let mut columns: Vec<Vec<f64>> = vec![parts.tfidf.clone(), parts.nof.iter().map(|&c| c as f64).collect()];
    let mut names = vec!["tfidf", "nof"];
    if let Some(sim) = &parts.similarity {
        if sim.len() != m {
            return Err(mismatch("sim_hyperedge", sim.len()));
        }
        columns.push(sim.clone());
        names.push("sim_hyperedge");
    }
    if let Some(dh) = &parts.dhnode {
        if dh.len() != m {
            return Err(mismatch("dhnode", dh.len()));
        }
        columns.push(dh.iter().map(|p| p.0).collect());
        columns.push(dh.iter().map(|p| p.1).collect());
        names.extend(["dh_in", "dh_out"]);
    }
    let values = DMatrix::from_fn(m, columns.len(), |i, j| columns[j][i]);
    FeatureMatrix::new(names.into_iter().map(str::to_owned).collect(), values)
}

/// All features for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub config: FeatureConfig,
    pub nodes: FeatureMatrix,
    pub edges: FeatureMatrix,
}

/// Computes node and edge features. `documents` holds one text per node in
/// node-id order; `train` are the trajectories whose clicks feed `nof`.
pub fn extract_features<S: AsRef<str>>(graph: &NavGraph, documents: &[S], train: &[Trajectory], config: FeatureConfig) -> Result<FeatureSet> {
    if documents.len() != graph.node_count() {
        return Err(Error::DimensionMismatch(format!("{} documents for {} nodes", documents.len(), graph.node_count())));
    }
    let model = TfidfModel::fit(documents);
    let parts = EdgeFeatureParts {
        tfidf: edge_tfidf(graph, &model),
        nof: nof_counts(graph, train)?,
        similarity: config.uses_similarity().then(|| similarity_hyperedge(graph)),
        dhnode: config.uses_dhnode().then(|| dhnode_in_out_degree(graph)),
    };
    Ok(FeatureSet { config, nodes: node_degree_features(graph), edges: assemble_edge_features(&parts)? })
}

/// Node documents taken from the titles; used when no article text exists.
pub fn title_documents(graph: &NavGraph) -> Vec<String> {
    graph.nodes().iter().map(|n| n.title.clone()).collect()
}

/// Per-column affine scaling to zero mean and unit variance. Constant
/// columns are only centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(values: &DMatrix<f64>) -> Self {
        let rows = values.nrows().max(1) as f64;
        let mut mean = Vec::with_capacity(values.ncols());
        let mut scale = Vec::with_capacity(values.ncols());
        for col in values.column_iter() {
            let mu = col.iter().sum::<f64>() / rows;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / rows;
            mean.push(mu);
            scale.push(if var > 1e-24 { var.sqrt() } else { 1.0 });
        }
        Self { mean, scale }
    }

    pub fn transform(&self, values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if values.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch(format!("scaler fitted on {} columns, got {}", self.mean.len(), values.ncols())));
        }
        Ok(DMatrix::from_fn(values.nrows(), values.ncols(), |i, j| (values[(i, j)] - self.mean[j]) / self.scale[j]))
    }
}
