use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::walk::LocalWalk;
use super::{Model, Predictor};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::graph::{NavGraph, NodeId, Trajectory};

/// One prediction task: continue `prefix` for `suffix.len()` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub path_id: usize,
    pub prefix: Vec<NodeId>,
    pub suffix: Vec<NodeId>,
}

impl Query {
    /// The trajectory's own prefix/suffix split.
    pub fn from_trajectory(t: &Trajectory) -> Self {
        Self { path_id: t.path_id, prefix: t.prefix().to_vec(), suffix: t.suffix().to_vec() }
    }

    /// One query per split point `1 ≤ τ < len`, each predicting the path's end.
    pub fn all_splits(t: &Trajectory) -> Vec<Self> {
        let ids = t.node_ids();
        (1..ids.len()).map(|tau| Self { path_id: t.path_id, prefix: ids[..tau].to_vec(), suffix: ids[tau..].to_vec() }).collect()
    }

    pub fn current(&self) -> NodeId {
        *self.prefix.last().unwrap()
    }

    pub fn target(&self) -> NodeId {
        *self.suffix.last().unwrap()
    }

    pub fn horizon(&self) -> usize {
        self.suffix.len()
    }
}

struct PreparedQuery {
    walk: LocalWalk,
    row_start: usize,
    target: NodeId,
}

/// Queries with their network inputs precomputed. Inputs depend only on the
/// graph, the features and the prefix, so they are built once per training run.
pub struct PreparedBatch {
    rows: DMatrix<f64>,
    queries: Vec<PreparedQuery>,
}

impl PreparedBatch {
    pub fn new(predictor: &Predictor<'_>, queries: &[Query]) -> Result<Self> {
        let graph = predictor.graph();
        for q in queries {
            if q.prefix.is_empty() || q.suffix.is_empty() {
                return Err(Error::InvalidTrajectory(format!("path {}: query needs a prefix and a suffix", q.path_id)));
            }
            if q.prefix.iter().chain(&q.suffix).any(|&v| v >= graph.node_count()) {
                return Err(Error::InvalidTrajectory(format!("path {}: node outside the graph", q.path_id)));
            }
        }
        let width = predictor.input_width();
        let built: Vec<(LocalWalk, Vec<f64>)> = queries
            .par_iter()
            .map(|q| {
                let walk = LocalWalk::new(graph, q.current(), q.horizon());
                let mut rows = Vec::with_capacity(walk.len() * width);
                predictor.push_input_rows(&predictor.coordinates(&q.prefix), walk.edges(), &mut rows);
                (walk, rows)
            })
            .collect();
        let total: usize = built.iter().map(|(w, _)| w.len()).sum();
        let mut data = Vec::with_capacity(total * width);
        let mut prepared = Vec::with_capacity(queries.len());
        for ((walk, rows), q) in built.into_iter().zip(queries) {
            prepared.push(PreparedQuery { row_start: data.len() / width, walk, target: q.target() });
            data.extend(rows);
        }
        Ok(Self { rows: DMatrix::from_row_slice(total, width, &data), queries: prepared })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Total network evaluations per pass.
    pub fn row_count(&self) -> usize {
        self.rows.nrows()
    }
}

fn per_query(batch: &PreparedBatch, z: &[f64]) -> Vec<(f64, Vec<f64>)> {
    batch
        .queries
        .par_iter()
        .map(|q| q.walk.loss_and_gradient(&z[q.row_start..q.row_start + q.walk.len()], q.target))
        .collect()
}

/// Mean target loss `−ln(x̂·x_target + ε)` over the batch.
pub fn loss(model: &Model, batch: &PreparedBatch) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (z, _) = model.mlp.forward(&batch.rows)?;
    let total: f64 = per_query(batch, &z).iter().map(|(l, _)| l).sum();
    let mean = total / batch.len() as f64;
    if !mean.is_finite() {
        return Err(Error::NonFinite { stage: "loss" });
    }
    Ok(mean)
}

/// The mean loss and its exact gradient with respect to the flattened
/// network parameters (see [`super::Mlp::params`]).
pub fn loss_and_gradient(model: &Model, batch: &PreparedBatch) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let (z, cache) = model.mlp.forward(&batch.rows)?;
    let results = per_query(batch, &z);
    let scale = 1.0 / batch.len() as f64;
    let mut dz = vec![0.0; z.len()];
    let mut total = 0.0;
    for (q, (l, g)) in batch.queries.iter().zip(results) {
        total += l;
        for (slot, v) in dz[q.row_start..q.row_start + g.len()].iter_mut().zip(g) {
            *slot = v * scale;
        }
    }
    let mean = total * scale;
    if !mean.is_finite() {
        return Err(Error::NonFinite { stage: "loss" });
    }
    if dz.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { stage: "logit gradient" });
    }
    let grad = model.mlp.backward(&cache, &dz);
    if grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { stage: "parameter gradient" });
    }
    Ok((mean, grad))
}

pub fn gradient(model: &Model, batch: &PreparedBatch) -> Result<Vec<f64>> {
    loss_and_gradient(model, batch).map(|(_, g)| g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Stop after this many epochs without a new best validation loss.
    pub patience: usize,
    /// Abort when the training loss exceeds this value.
    pub divergence_threshold: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, epochs: 200, patience: 20, divergence_threshold: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Training loss at the parameters the epoch started from.
    pub train_loss: f64,
    /// Validation loss after the epoch's update.
    pub validation_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// The parameters with the lowest validation loss seen.
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// `0` when the initial parameters were never beaten.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Full-batch gradient descent.
///
/// Training queries use every split point of every training trajectory;
/// validation queries use each trajectory's own split. Without validation
/// trajectories the training loss selects the best parameters.
pub fn train(
    initial: &Model,
    graph: &NavGraph,
    features: &FeatureSet,
    train: &[Trajectory],
    validation: &[Trajectory],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    let predictor = initial.predictor(graph, features)?;
    let mut model = initial.clone();
    if config.epochs == 0 {
        return Ok(TrainOutcome { model, history: Vec::new(), best_epoch: 0, stopped_early: false });
    }
    let train_queries: Vec<Query> = train.iter().flat_map(Query::all_splits).collect();
    let train_batch = PreparedBatch::new(&predictor, &train_queries)?;
    if train_batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let val_queries: Vec<Query> = validation.iter().map(Query::from_trajectory).collect();
    let val_batch = PreparedBatch::new(&predictor, &val_queries)?;
    let select = |m: &Model| if val_batch.is_empty() { loss(m, &train_batch) } else { loss(m, &val_batch) };
    log::info!("training on {} queries ({} network rows), validating on {}", train_batch.len(), train_batch.row_count(), val_batch.len());

    let mut best = (select(&model)?, model.mlp.params(), 0);
    let mut history = Vec::with_capacity(config.epochs);
    let mut stopped_early = false;
    for epoch in 1..=config.epochs {
        let (train_loss, grad) = loss_and_gradient(&model, &train_batch)?;
        if train_loss > config.divergence_threshold {
            return Err(Error::Diverged { epoch, loss: train_loss });
        }
        let mut params = model.mlp.params();
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= config.learning_rate * g;
        }
        model.mlp.set_params(&params);
        let validation_loss = match select(&model) {
            Ok(l) => l,
            Err(Error::NonFinite { .. }) => return Err(Error::Diverged { epoch, loss: f64::INFINITY }),
            Err(e) => return Err(e),
        };
        log::debug!("epoch {epoch}: train {train_loss:.6} validation {validation_loss:.6}");
        history.push(EpochRecord { epoch, train_loss, validation_loss });
        if validation_loss < best.0 {
            best = (validation_loss, params, epoch);
        } else if epoch - best.2 >= config.patience {
            stopped_early = true;
            break;
        }
    }
    model.mlp.set_params(&best.1);
    Ok(TrainOutcome { model, history, best_epoch: best.2, stopped_early })
}
