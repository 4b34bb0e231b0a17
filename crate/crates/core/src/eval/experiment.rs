use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, FeatureConfig};
use crate::graph::{split_dataset, Dataset, DEFAULT_SPLIT};
use crate::model::{train, Model, ModelConfig, Query, TrainConfig};

use super::metrics::{evaluate, EvalOptions, Metrics};

/// Everything besides the feature configuration and seed that a run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split_ratios: [f64; 3],
    pub split_seed: u64,
    pub eval: EvalOptions,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            split_ratios: DEFAULT_SPLIT,
            split_seed: 0,
            eval: EvalOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub feature_config: FeatureConfig,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub metrics: Metrics,
}

/// Mean and sample standard deviation across seeds. The deviation is 0 for a
/// single run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub feature_config: FeatureConfig,
    pub runs: usize,
    pub target_probability: Stat,
    /// Over the runs that passed at least one crossroad.
    pub choice_accuracy: Option<Stat>,
    pub precision_top1: Stat,
    pub precision_top5: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dataset: String,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunResult>,
    pub summaries: Vec<ConfigSummary>,
}

const METRIC_ROWS: [&str; 4] = ["target probability", "choice accuracy", "precision top1", "precision top5"];

impl MetricsReport {
    pub fn summary(&self, config: FeatureConfig) -> Option<&ConfigSummary> {
        self.summaries.iter().find(|s| s.feature_config == config)
    }

    /// Whether some dual configuration beats the original edges on mean
    /// top-5 precision. `None` unless both kinds were run.
    pub fn dual_improves_precision_top5(&self) -> Option<bool> {
        let base = self.summary(FeatureConfig::Original)?.precision_top5.mean;
        let duals: Vec<f64> =
            self.summaries.iter().filter(|s| s.feature_config != FeatureConfig::Original).map(|s| s.precision_top5.mean).collect();
        (!duals.is_empty()).then(|| duals.iter().any(|&d| d > base))
    }

    /// One row per feature configuration.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("dataset\tfeature_config\truns");
        for m in ["target_probability", "choice_accuracy", "precision_top1", "precision_top5"] {
            write!(out, "\t{m}_mean\t{m}_std").unwrap();
        }
        out.push('\n');
        for s in &self.summaries {
            write!(out, "{}\t{}\t{}", self.dataset, s.feature_config, s.runs).unwrap();
            for stat in [Some(s.target_probability), s.choice_accuracy, Some(s.precision_top1), Some(s.precision_top5)] {
                match stat {
                    Some(st) => write!(out, "\t{}\t{}", st.mean, st.std).unwrap(),
                    None => out.push_str("\tNA\tNA"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// One row per seed and configuration.
    pub fn runs_tsv(&self) -> String {
        let mut out = String::from(
            "dataset\tfeature_config\tseed\tbest_epoch\tepochs_run\ttarget_probability\ttarget_support\tchoice_accuracy\tprecision_top1\tprecision_top5\tqueries\tsteps\tcrossroads\tdegenerate\n",
        );
        for r in &self.runs {
            let m = &r.metrics;
            let choice = m.choice_accuracy.map_or("NA".to_string(), |c| c.to_string());
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                self.dataset,
                r.feature_config,
                r.seed,
                r.best_epoch,
                r.epochs_run,
                m.target_probability,
                m.target_support,
                choice,
                m.precision_top1,
                m.precision_top5,
                m.queries,
                m.steps,
                m.crossroads,
                m.degenerate
            )
            .unwrap();
        }
        out
    }

    /// Fixed-width text table: metrics down, configurations across, grouped
    /// under the plain and dual model.
    pub fn to_table(&self) -> String {
        let cell = |s: Option<Stat>| s.map_or("n/a".to_string(), |s| format!("{:.2} ± {:.2}", s.mean, s.std));
        let mut rows: Vec<Vec<String>> = Vec::new();
        let mut group = vec![String::new()];
        let mut header = vec![self.dataset.clone()];
        for s in &self.summaries {
            group.push(if s.feature_config == FeatureConfig::Original { "GRETEL" } else { "Dual GRETEL" }.to_string());
            header.push(s.feature_config.label().to_string());
        }
        rows.push(group);
        rows.push(header);
        for (i, name) in METRIC_ROWS.iter().enumerate() {
            let mut row = vec![name.to_string()];
            for s in &self.summaries {
                let stat = match i {
                    0 => Some(s.target_probability),
                    1 => s.choice_accuracy,
                    2 => Some(s.precision_top1),
                    _ => Some(s.precision_top5),
                };
                row.push(cell(stat));
            }
            rows.push(row);
        }
        let widths: Vec<usize> =
            (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for (ri, row) in rows.iter().enumerate() {
            let cells: Vec<String> =
                row.iter().zip(&widths).map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
            out.push_str(cells.join(" | ").trim_end());
            out.push('\n');
            if ri == 1 {
                let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
                out.push_str(&rule.join("-+-"));
                out.push('\n');
            }
        }
        out
    }
}

/// Trains and evaluates one model per feature configuration and seed.
///
/// The trajectories are split once with `settings.split_seed`. Features are
/// extracted once per configuration from the training split, and each seed
/// initializes its own network. Test queries use the declared split of every
/// test trajectory.
pub fn run_experiment_matrix<S: AsRef<str>>(
    label: &str,
    dataset: &Dataset,
    documents: &[S],
    configs: &[FeatureConfig],
    seeds: &[u64],
    settings: &ExperimentSettings,
) -> Result<MetricsReport> {
    if configs.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidConfig("an experiment needs at least one feature configuration and one seed".into()));
    }
    let graph = &dataset.graph;
    let split = split_dataset(&dataset.trajectories, settings.split_ratios, settings.split_seed)?;
    let test: Vec<Query> = split.test.iter().map(Query::from_trajectory).collect();
    if test.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let mut runs = Vec::with_capacity(configs.len() * seeds.len());
    let mut summaries = Vec::with_capacity(configs.len());
    for &config in configs {
        let features = extract_features(graph, documents, &split.train, config)?;
        let first = runs.len();
        for &seed in seeds {
            log::info!("{label}: {config} seed {seed}");
            let model_config = ModelConfig { seed, ..settings.model.clone() };
            let initial = Model::new(model_config, graph, &features)?;
            let outcome = train(&initial, graph, &features, &split.train, &split.validation, &settings.train)?;
            let predictor = outcome.model.predictor(graph, &features)?;
            let metrics = evaluate(&predictor, &test, settings.eval)?;
            runs.push(RunResult {
                feature_config: config,
                seed,
                best_epoch: outcome.best_epoch,
                epochs_run: outcome.history.len(),
                metrics,
            });
        }
        let of = |f: fn(&Metrics) -> f64| Stat::of(&runs[first..].iter().map(|r| f(&r.metrics)).collect::<Vec<_>>()).unwrap();
        let choices: Vec<f64> = runs[first..].iter().filter_map(|r| r.metrics.choice_accuracy).collect();
        summaries.push(ConfigSummary {
            feature_config: config,
            runs: seeds.len(),
            target_probability: of(|m| m.target_probability),
            choice_accuracy: Stat::of(&choices),
            precision_top1: of(|m| m.precision_top1),
            precision_top5: of(|m| m.precision_top5),
        });
    }
    Ok(MetricsReport { dataset: label.to_string(), seeds: seeds.to_vec(), runs, summaries })
}
