use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{is_valid_title, CorpusSource, FALLBACK_CATEGORY};
use crate::error::{Error, Result};
use crate::graph::{Dataset, NavGraph, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkPolicy {
    /// Choose among the first `dense_window` candidate links only.
    Dense,
    /// Choose among all candidate links.
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlConfig {
    pub seed_title: String,
    pub num_paths: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub policy: LinkPolicy,
    pub dense_window: usize,
    pub rng_seed: u64,
    /// Cut the dense window from the raw link list before filtering, instead
    /// of filtering first and then taking the window.
    pub window_before_filter: bool,
    /// Start each walk from a uniformly drawn, previously visited article
    /// instead of the seed.
    pub restart_from_random_prior: bool,
    /// Attempts per path slot before a short path is accepted.
    pub max_attempts: usize,
}

impl CrawlConfig {
    pub fn new(seed_title: impl Into<String>) -> Self {
        Self {
            seed_title: seed_title.into(),
            num_paths: 3000,
            min_len: 4,
            max_len: 7,
            policy: LinkPolicy::Sparse,
            dense_window: 5,
            rng_seed: 0,
            window_before_filter: false,
            restart_from_random_prior: false,
            max_attempts: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_len < 2 || self.min_len > self.max_len {
            return Err(Error::InvalidConfig(format!(
                "path lengths need 2 <= min_len <= max_len, got [{}, {}]",
                self.min_len, self.max_len
            )));
        }
        if self.dense_window == 0 {
            return Err(Error::InvalidConfig("dense_window must be at least 1".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidConfig("max_attempts must be at least 1".into()));
        }
        if !is_valid_title(&self.seed_title) {
            return Err(Error::InvalidConfig(format!("seed title `{}` fails the title filter", self.seed_title)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratedPath {
    pub titles: Vec<String>,
    pub target_len: usize,
    /// The walk stopped before `target_len` because no candidate was left.
    pub early_terminated: bool,
}

/// Links a walk standing on an article with outbound `links` may follow next,
/// in link order, given the titles already on the path.
pub fn successor_candidates<S: CorpusSource + ?Sized>(
    source: &mut S,
    links: &[String],
    on_path: &HashSet<String>,
    config: &CrawlConfig,
) -> Vec<String> {
    let mut seen = HashSet::with_capacity(links.len());
    let mut unique = links.iter().filter(|l| seen.insert(l.as_str()));
    let windowed: Vec<&String> = match (config.policy, config.window_before_filter) {
        (LinkPolicy::Dense, true) => unique.by_ref().take(config.dense_window).collect(),
        _ => unique.collect(),
    };
    let usable = windowed
        .into_iter()
        .filter(|l| is_valid_title(l) && !on_path.contains(l.as_str()) && source.contains(l))
        .cloned();
    match (config.policy, config.window_before_filter) {
        (LinkPolicy::Dense, false) => usable.take(config.dense_window).collect(),
        _ => usable.collect(),
    }
}

/// One random walk from the configured seed article.
pub fn generate_path<S: CorpusSource + ?Sized, R: Rng + ?Sized>(
    source: &mut S,
    config: &CrawlConfig,
    rng: &mut R,
) -> Result<GeneratedPath> {
    generate_path_from(source, config, &config.seed_title, rng)
}

/// One random walk from `start`.
///
/// The target length is drawn uniformly from `[min_len, max_len]`; each step
/// draws uniformly from [`successor_candidates`].
pub fn generate_path_from<S: CorpusSource + ?Sized, R: Rng + ?Sized>(
    source: &mut S,
    config: &CrawlConfig,
    start: &str,
    rng: &mut R,
) -> Result<GeneratedPath> {
    if !source.contains(start) {
        return Err(Error::ArticleNotFound(start.to_owned()));
    }
    let target_len = rng.gen_range(config.min_len..=config.max_len);
    let mut titles = vec![start.to_owned()];
    let mut on_path: HashSet<String> = titles.iter().cloned().collect();
    let mut early_terminated = false;
    while titles.len() < target_len {
        let current = titles.last().expect("path is never empty");
        let links = source.links(current)?.unwrap_or_default();
        let candidates = successor_candidates(source, &links, &on_path, config);
        if candidates.is_empty() {
            early_terminated = true;
            break;
        }
        let next = candidates[rng.gen_range(0..candidates.len())].clone();
        on_path.insert(next.clone());
        titles.push(next);
    }
    Ok(GeneratedPath { titles, target_len, early_terminated })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GenerationStats {
    /// Walks that stopped early, whether kept or discarded.
    pub early_terminated: usize,
    /// Walks discarded for being shorter than `min_len`.
    pub discarded: usize,
    /// Slots that exhausted `max_attempts` and kept a short path.
    pub short_accepted: usize,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub dataset: Dataset,
    pub stats: GenerationStats,
}

/// Generates `num_paths` paths and the graph of everything they traverse.
///
/// Node and edge ids follow first appearance along the paths. Categories are
/// set to the fallback label; see [`super::categorize_all`].
pub fn generate_dataset<S: CorpusSource + ?Sized>(source: &mut S, config: &CrawlConfig) -> Result<GeneratedDataset> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut stats = GenerationStats::default();
    let mut visited: Vec<String> = Vec::new();
    let mut visited_set: HashSet<String> = HashSet::new();
    let mut paths = Vec::with_capacity(config.num_paths);

    for slot in 0..config.num_paths {
        let mut kept = None;
        let mut last = None;
        for _ in 0..config.max_attempts {
            let start = if config.restart_from_random_prior && !visited.is_empty() {
                visited[rng.gen_range(0..visited.len())].clone()
            } else {
                config.seed_title.clone()
            };
            let path = generate_path_from(source, config, &start, &mut rng)?;
            if path.early_terminated {
                stats.early_terminated += 1;
            }
            if path.titles.len() >= config.min_len {
                kept = Some(path);
                break;
            }
            stats.discarded += 1;
            last = Some(path);
        }
        let path = match (kept, last) {
            (Some(p), _) => p,
            (None, Some(p)) if p.titles.len() >= 2 => {
                log::warn!("slot {slot}: keeping a {}-article path after {} attempts", p.titles.len(), config.max_attempts);
                stats.discarded -= 1;
                stats.short_accepted += 1;
                p
            }
            _ => {
                return Err(Error::CorpusExhausted(format!(
                    "no path of two or more articles from `{}` after {} attempts",
                    config.seed_title, config.max_attempts
                )))
            }
        };
        for t in &path.titles {
            if visited_set.insert(t.clone()) {
                visited.push(t.clone());
            }
        }
        paths.push(path.titles);
    }

    let ids: HashMap<&str, usize> = visited.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let id_paths: Vec<Vec<usize>> = paths.iter().map(|p| p.iter().map(|t| ids[t.as_str()]).collect()).collect();
    let pairs: Vec<(usize, usize)> = id_paths.iter().flat_map(|p| p.windows(2).map(|w| (w[0], w[1]))).collect();
    let graph = NavGraph::from_id_pairs(visited.clone(), &pairs, true)?;
    let trajectories = id_paths
        .into_iter()
        .enumerate()
        .map(|(i, p)| Trajectory::with_default_split(i, p))
        .collect::<Result<Vec<_>>>()?;
    let categories = vec![FALLBACK_CATEGORY.to_owned(); graph.node_count()];
    Ok(GeneratedDataset { dataset: Dataset { graph, trajectories, categories }, stats })
}
