//! Metrics, the experiment matrix and run manifests.

mod experiment;
mod metrics;
mod oracle;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub use experiment::{run_experiment_matrix, ConfigSummary, ExperimentSettings, MetricsReport, RunResult, Stat};
pub use metrics::{
    choice_accuracy, evaluate, precision_top_k, rank_successors, target_probability, top_edge, CrossroadDegree, EvalOptions,
    Metrics,
};
pub use oracle::{brute_force_walk_oracle, ORACLE_MAX_HORIZON, ORACLE_MAX_NODES};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every output. Holds no timestamps so
/// that repeated runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub dataset_digest: Option<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            tool: "pathex".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            dataset_digest: None,
            config,
            seeds: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST_FILE), self.to_json()?)?;
        Ok(())
    }
}
