//! The path-extrapolation model.
//!
//! Each edge `i→j` gets a logit `z = MLP(c_i, c_j, f_i, f_j, f_ij)` from the
//! pseudo-coordinates `c` of the observed prefix, the node features `f_i` and
//! the edge features `f_ij`. A softmax over each node's outgoing edges turns
//! logits into weights, and the weights drive a non-backtracking walk that
//! predicts where the agent will be `h` steps later.

mod coords;
mod mlp;
mod operators;
mod predictor;
mod train;
mod walk;

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use coords::{pseudo_coordinates, DiffusionConfig, PseudoCoordinates, COORD_WIDTH};
pub use mlp::{Layer, Mlp, INIT_RANGE};
pub use operators::{build_operators, normalize_weights, propagate, ProjectionMode, Propagation, TransitionOperators, PSEUDOINVERSE_EDGE_LIMIT};
pub use predictor::{Predictor, SuffixCandidate};
pub use train::{gradient, loss, loss_and_gradient, train, EpochRecord, PreparedBatch, Query, TrainConfig, TrainOutcome};
pub use walk::{LocalWalk, LOSS_EPSILON};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, FeatureSet, Standardizer};
use crate::graph::NavGraph;

pub const CHECKPOINT_FORMAT: &str = "pathex-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub hidden: Vec<usize>,
    pub diffusion: DiffusionConfig,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { hidden: vec![16, 16], diffusion: DiffusionConfig::default(), seed: 0 }
    }
}

/// What a trained model expects of the graph and features it is applied to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_config: FeatureConfig,
    pub node_columns: Vec<String>,
    pub edge_columns: Vec<String>,
    pub node_count: usize,
    pub edge_count: usize,
    /// SHA-256 over the node count and edge list.
    pub graph_fingerprint: String,
}

impl FeatureSchema {
    pub fn of(graph: &NavGraph, features: &FeatureSet) -> Self {
        Self {
            feature_config: features.config,
            node_columns: features.nodes.columns.clone(),
            edge_columns: features.edges.columns.clone(),
            node_count: graph.node_count(),
            edge_count: graph.edge_count(),
            graph_fingerprint: graph_fingerprint(graph),
        }
    }

    pub fn input_width(&self) -> usize {
        2 * COORD_WIDTH + 2 * self.node_columns.len() + self.edge_columns.len()
    }

    /// Fails with a message naming the first difference.
    pub fn check(&self, other: &FeatureSchema) -> Result<()> {
        let differ = |what: &str, a: &dyn std::fmt::Debug, b: &dyn std::fmt::Debug| {
            Err(Error::SchemaMismatch(format!("{what}: model has {a:?}, input has {b:?}")))
        };
        if self.feature_config != other.feature_config {
            return differ("feature configuration", &self.feature_config, &other.feature_config);
        }
        if self.node_columns != other.node_columns {
            return differ("node columns", &self.node_columns, &other.node_columns);
        }
        if self.edge_columns != other.edge_columns {
            return differ("edge columns", &self.edge_columns, &other.edge_columns);
        }
        if (self.node_count, self.edge_count) != (other.node_count, other.edge_count) {
            return differ("graph size", &(self.node_count, self.edge_count), &(other.node_count, other.edge_count));
        }
        if self.graph_fingerprint != other.graph_fingerprint {
            return differ("graph fingerprint", &self.graph_fingerprint, &other.graph_fingerprint);
        }
        Ok(())
    }
}

pub fn graph_fingerprint(graph: &NavGraph) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{}\n", graph.node_count()));
    for e in graph.edges() {
        hasher.update(format!("{}\t{}\n", e.src, e.dst));
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Network parameters together with everything needed to apply them.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub schema: FeatureSchema,
    pub node_scaler: Standardizer,
    pub edge_scaler: Standardizer,
    pub mlp: Mlp,
}

impl Model {
    /// A freshly initialized model for `graph` and `features`. The feature
    /// scalers are fitted here.
    pub fn new(config: ModelConfig, graph: &NavGraph, features: &FeatureSet) -> Result<Self> {
        let schema = FeatureSchema::of(graph, features);
        if features.nodes.rows() != graph.node_count() || features.edges.rows() != graph.edge_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} node and {} edge feature rows for a graph with {} nodes and {} edges",
                features.nodes.rows(),
                features.edges.rows(),
                graph.node_count(),
                graph.edge_count()
            )));
        }
        if !(config.diffusion.decay > 0.0 && config.diffusion.decay <= 1.0) {
            return Err(Error::InvalidConfig(format!("decay must lie in (0, 1], got {}", config.diffusion.decay)));
        }
        let mlp = Mlp::new(schema.input_width(), &config.hidden, config.seed);
        Ok(Self {
            node_scaler: Standardizer::fit(&features.nodes.values),
            edge_scaler: Standardizer::fit(&features.edges.values),
            config,
            schema,
            mlp,
        })
    }

    /// Binds the model to a graph and its features after checking that they
    /// match what it was built for.
    pub fn predictor<'a>(&'a self, graph: &'a NavGraph, features: &FeatureSet) -> Result<Predictor<'a>> {
        self.schema.check(&FeatureSchema::of(graph, features))?;
        Predictor::new(self, graph, features)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            schema: self.schema.clone(),
            node_scaler: self.node_scaler.clone(),
            edge_scaler: self.edge_scaler.clone(),
            layers: self
                .mlp
                .layers()
                .iter()
                .map(|l| LayerFile {
                    outputs: l.weights.nrows(),
                    inputs: l.weights.ncols(),
                    weights: (0..l.weights.nrows()).flat_map(|r| l.weights.row(r).iter().copied().collect::<Vec<_>>()).collect(),
                    bias: l.bias.iter().copied().collect(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "unsupported checkpoint {} v{} (expected {CHECKPOINT_FORMAT} v{CHECKPOINT_VERSION})",
                file.format, file.version
            )));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for l in file.layers {
            if l.weights.len() != l.outputs * l.inputs || l.bias.len() != l.outputs {
                return Err(Error::SchemaMismatch("layer shape does not match its parameter count".into()));
            }
            layers.push(Layer { weights: DMatrix::from_row_slice(l.outputs, l.inputs, &l.weights), bias: DVector::from_vec(l.bias) });
        }
        let mlp = Mlp::from_layers(layers).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
        if mlp.input_width() != file.schema.input_width() || mlp.hidden_widths() != file.config.hidden {
            return Err(Error::SchemaMismatch("network shape disagrees with the recorded schema".into()));
        }
        if file.node_scaler.mean.len() != file.schema.node_columns.len() || file.edge_scaler.mean.len() != file.schema.edge_columns.len() {
            return Err(Error::SchemaMismatch("feature scalers disagree with the recorded columns".into()));
        }
        Ok(Self { config: file.config, schema: file.schema, node_scaler: file.node_scaler, edge_scaler: file.edge_scaler, mlp })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_owned()));
        }
        Self::from_json(&fs::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: ModelConfig,
    schema: FeatureSchema,
    node_scaler: Standardizer,
    edge_scaler: Standardizer,
    layers: Vec<LayerFile>,
}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    outputs: usize,
    inputs: usize,
    /// Row-major.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{extract_features, title_documents};
    use crate::graph::build_graph;

    fn fixture() -> (NavGraph, FeatureSet) {
        let g = build_graph(&[("a", "b"), ("b", "c"), ("b", "d"), ("c", "d")], &["a", "b", "c", "d"]).unwrap();
        let f = extract_features(&g, &title_documents(&g), &[], FeatureConfig::Both).unwrap();
        (g, f)
    }

    #[test]
    fn checkpoint_round_trip_is_lossless() {
        let (g, f) = fixture();
        let mut model = Model::new(ModelConfig { seed: 11, ..Default::default() }, &g, &f).unwrap();
        let mut p = model.mlp.params();
        p[0] = 1.0 / 3.0;
        p[1] = -2.718281828459045e-7;
        model.mlp.set_params(&p);
        let back = Model::from_json(&model.to_json().unwrap()).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), model.to_json().unwrap());
    }

    #[test]
    fn refuses_mismatched_schema() {
        let (g, f) = fixture();
        let model = Model::new(ModelConfig::default(), &g, &f).unwrap();
        let other = extract_features(&g, &title_documents(&g), &[], FeatureConfig::Original).unwrap();
        assert!(matches!(model.predictor(&g, &other), Err(Error::SchemaMismatch(_))));
        let g2 = build_graph(&[("a", "b"), ("b", "c"), ("b", "d"), ("d", "c")], &["a", "b", "c", "d"]).unwrap();
        let f2 = extract_features(&g2, &title_documents(&g2), &[], FeatureConfig::Both).unwrap();
        assert!(matches!(model.predictor(&g2, &f2), Err(Error::SchemaMismatch(_))));
        assert!(model.predictor(&g, &f).is_ok());
        let bad = model.to_json().unwrap().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(Model::from_json(&bad), Err(Error::SchemaMismatch(_))));
    }

    #[test]
    fn input_width_follows_features() {
        let (g, f) = fixture();
        let model = Model::new(ModelConfig::default(), &g, &f).unwrap();
        assert_eq!(model.mlp.input_width(), 2 * 2 + 2 * 2 + 5);
    }
}
