use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeId, NavGraph, NodeId};
use crate::model::{Predictor, ProjectionMode, Query};

/// Which degree decides whether a node is a crossroad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossroadDegree {
    /// Out-degree ≥ 3: at least three links to choose from.
    #[default]
    Out,
    /// In-degree plus out-degree ≥ 3.
    Total,
}

impl std::str::FromStr for CrossroadDegree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "out" => Ok(Self::Out),
            "total" => Ok(Self::Total),
            _ => Err(Error::InvalidConfig(format!("unknown crossroad degree `{s}` (expected out or total)"))),
        }
    }
}

impl CrossroadDegree {
    pub fn is_crossroad(self, graph: &NavGraph, v: NodeId) -> bool {
        let d = match self {
            Self::Out => graph.out_degree(v),
            Self::Total => graph.out_degree(v) + graph.in_degree(v),
        };
        d >= 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub crossroads: CrossroadDegree,
    pub projection: ProjectionMode,
}

/// Metric values in percent for one model on one query set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Mean predicted mass on the true target.
    pub target_probability: f64,
    /// Share of queries whose true target has nonzero predicted mass.
    pub target_support: f64,
    /// `None` when the queries pass no crossroad.
    pub choice_accuracy: Option<f64>,
    pub precision_top1: f64,
    pub precision_top5: f64,
    pub queries: usize,
    /// Teacher-forced next-step predictions behind the precision metrics.
    pub steps: usize,
    pub crossroads: usize,
    /// Queries whose predicted mass was entirely trapped.
    pub degenerate: usize,
}

/// Successors of the current node ordered by weight, heaviest first, ties by
/// ascending node id.
pub fn rank_successors(graph: &NavGraph, weights: &[(EdgeId, f64)]) -> Vec<NodeId> {
    let mut ranked: Vec<(f64, NodeId)> = weights.iter().map(|&(e, w)| (w, graph.edge(e).dst)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    ranked.into_iter().map(|(_, v)| v).collect()
}

/// The heaviest outgoing edge, ties by smallest edge id.
pub fn top_edge(weights: &[(EdgeId, f64)]) -> Option<EdgeId> {
    weights.iter().copied().reduce(|best, x| if x.1 > best.1 || (x.1 == best.1 && x.0 < best.0) { x } else { best }).map(|(e, _)| e)
}

#[derive(Default)]
struct Tally {
    mass: f64,
    supported: usize,
    degenerate: usize,
    steps: usize,
    top1: usize,
    top5: usize,
    crossroads: usize,
    choices: usize,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.mass += o.mass;
        self.supported += o.supported;
        self.degenerate += o.degenerate;
        self.steps += o.steps;
        self.top1 += o.top1;
        self.top5 += o.top5;
        self.crossroads += o.crossroads;
        self.choices += o.choices;
        self
    }
}

fn tally(predictor: &Predictor<'_>, q: &Query, options: EvalOptions) -> Result<Tally> {
    let graph = predictor.graph();
    let mut t = Tally::default();
    let x = predictor.propagate(&q.prefix, q.horizon(), options.projection)?;
    let p = x.distribution[q.target()];
    t.mass = p;
    t.supported = usize::from(p > 0.0);
    t.degenerate = usize::from(x.is_degenerate());
    let mut prefix = q.prefix.clone();
    for &next in &q.suffix {
        let current = *prefix.last().unwrap();
        let weights = predictor.next_step_weights(&prefix)?;
        let ranked = rank_successors(graph, &weights);
        t.steps += 1;
        t.top1 += usize::from(ranked.first() == Some(&next));
        t.top5 += usize::from(ranked.iter().take(5).any(|&v| v == next));
        if options.crossroads.is_crossroad(graph, current) {
            t.crossroads += 1;
            t.choices += usize::from(top_edge(&weights).map(|e| graph.edge(e).dst) == Some(next));
        }
        prefix.push(next);
    }
    Ok(t)
}

/// All four metrics over `queries`.
///
/// Target probability reads `x̂[target]` at each query's horizon. The other
/// metrics are stepwise: every suffix step is predicted from the true path
/// up to that step.
pub fn evaluate(predictor: &Predictor<'_>, queries: &[Query], options: EvalOptions) -> Result<Metrics> {
    if queries.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let tallies: Vec<Tally> = queries.par_iter().map(|q| tally(predictor, q, options)).collect::<Result<_>>()?;
    // Summed in query order so the result does not depend on scheduling.
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    let pct = |num: f64, den: usize| 100.0 * num / den as f64;
    Ok(Metrics {
        target_probability: pct(t.mass, queries.len()),
        target_support: pct(t.supported as f64, queries.len()),
        choice_accuracy: (t.crossroads > 0).then(|| pct(t.choices as f64, t.crossroads)),
        precision_top1: pct(t.top1 as f64, t.steps),
        precision_top5: pct(t.top5 as f64, t.steps),
        queries: queries.len(),
        steps: t.steps,
        crossroads: t.crossroads,
        degenerate: t.degenerate,
    })
}

pub fn target_probability(predictor: &Predictor<'_>, queries: &[Query]) -> Result<f64> {
    evaluate(predictor, queries, EvalOptions::default()).map(|m| m.target_probability)
}

pub fn choice_accuracy(predictor: &Predictor<'_>, queries: &[Query], crossroads: CrossroadDegree) -> Result<Option<f64>> {
    evaluate(predictor, queries, EvalOptions { crossroads, ..Default::default() }).map(|m| m.choice_accuracy)
}

/// Share of next-step predictions whose true successor is among the `k`
/// heaviest successors.
pub fn precision_top_k(predictor: &Predictor<'_>, queries: &[Query], k: usize) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::EmptyEvaluation);
    }
    let graph = predictor.graph();
    let per_query: Vec<(usize, usize)> = queries
        .par_iter()
        .map(|q| {
            let mut prefix = q.prefix.clone();
            let mut hits = 0;
            for &next in &q.suffix {
                let ranked = rank_successors(graph, &predictor.next_step_weights(&prefix)?);
                hits += usize::from(ranked.iter().take(k).any(|&v| v == next));
                prefix.push(next);
            }
            Ok((hits, q.suffix.len()))
        })
        .collect::<Result<_>>()?;
    let (hits, steps) = per_query.into_iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(100.0 * hits as f64 / steps as f64)
}
