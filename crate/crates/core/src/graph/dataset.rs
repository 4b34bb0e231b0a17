//! The WCM dataset directory format.
//!
//! Every file is UTF-8, LF-terminated, tab-separated and has no header:
//!
//! | file               | columns                                                  |
//! |--------------------|----------------------------------------------------------|
//! | `articles.tsv`     | node id, title                                           |
//! | `edges.tsv`        | edge id, source node id, destination node id             |
//! | `paths.tsv`        | path id, comma-joined node ids                           |
//! | `lengths.tsv`      | path id, number of nodes in the path                     |
//! | `categories.tsv`   | node id, category                                        |
//! | `hyperedges.tsv`   | node id, comma-joined ids of every incident edge         |
//! | `observations.tsv` | path id, comma-joined `step:node_id` pairs of the prefix |
//!
//! `hyperedges.tsv` is the dual incidence: the hyperedge of node `v` joins the
//! dual nodes of all edges touching `v`, listed in ascending edge id.
//! `observations.tsv` records the observed prefix of each path; its length is
//! the trajectory's prefix length.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{NavGraph, NodeId, Trajectory};
use crate::error::{Error, Result};

pub const FILES: [&str; 7] = [
    "articles.tsv",
    "edges.tsv",
    "paths.tsv",
    "lengths.tsv",
    "categories.tsv",
    "hyperedges.tsv",
    "observations.tsv",
];

pub const DEFAULT_SPLIT: [f64; 3] = [0.8, 0.1, 0.1];

/// A graph, its trajectories and one category label per node.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub graph: NavGraph,
    pub trajectories: Vec<Trajectory>,
    pub categories: Vec<String>,
}

impl Dataset {
    /// SHA-256 over the serialized file set, in the fixed file order.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for (name, body) in render(self) {
            hasher.update(name.as_bytes());
            hasher.update([0]);
            hasher.update(body.as_bytes());
        }
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn save_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    if dataset.categories.len() != dataset.graph.node_count() {
        return Err(Error::Inconsistent(format!(
            "{} categories for {} nodes",
            dataset.categories.len(),
            dataset.graph.node_count()
        )));
    }
    fs::create_dir_all(dir)?;
    for (name, body) in render(dataset) {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn render(dataset: &Dataset) -> Vec<(&'static str, String)> {
    let g = &dataset.graph;
    let mut articles = String::new();
    let mut categories = String::new();
    let mut hyperedges = String::new();
    for node in g.nodes() {
        let _ = writeln!(articles, "{}\t{}", node.id, node.title);
        let _ = writeln!(categories, "{}\t{}", node.id, dataset.categories[node.id]);
        let mut incident: Vec<_> = g.out_edges(node.id).iter().chain(g.in_edges(node.id)).copied().collect();
        incident.sort_unstable();
        let _ = writeln!(hyperedges, "{}\t{}", node.id, join(incident));
    }
    let mut edges = String::new();
    for e in g.edges() {
        let _ = writeln!(edges, "{}\t{}\t{}", e.id, e.src, e.dst);
    }
    let mut paths = String::new();
    let mut lengths = String::new();
    let mut observations = String::new();
    for t in &dataset.trajectories {
        let _ = writeln!(paths, "{}\t{}", t.path_id, join(t.node_ids()));
        let _ = writeln!(lengths, "{}\t{}", t.path_id, t.len());
        let obs = t.prefix().iter().enumerate().map(|(step, v)| format!("{step}:{v}"));
        let _ = writeln!(observations, "{}\t{}", t.path_id, join(obs));
    }
    vec![
        ("articles.tsv", articles),
        ("edges.tsv", edges),
        ("paths.tsv", paths),
        ("lengths.tsv", lengths),
        ("categories.tsv", categories),
        ("hyperedges.tsv", hyperedges),
        ("observations.tsv", observations),
    ]
}

struct Table {
    file: &'static str,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read(dir: &Path, file: &'static str, columns: usize) -> Result<Self> {
        let path = dir.join(file);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let text = fs::read_to_string(&path)?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let fields: Vec<String> = line.split('\t').map(str::to_owned).collect();
            if fields.len() != columns {
                return Err(Error::Parse {
                    file: file.into(),
                    line: i + 1,
                    msg: format!("expected {columns} fields, found {}", fields.len()),
                });
            }
            rows.push((i + 1, fields));
        }
        Ok(Self { file, rows })
    }

    fn int(&self, line: usize, field: &str) -> Result<usize> {
        field.trim().parse().map_err(|_| Error::Parse {
            file: self.file.into(),
            line,
            msg: format!("`{field}` is not a non-negative integer"),
        })
    }

    fn ints(&self, line: usize, field: &str) -> Result<Vec<usize>> {
        if field.is_empty() {
            return Ok(Vec::new());
        }
        field.split(',').map(|x| self.int(line, x)).collect()
    }

    fn node(&self, line: usize, id: usize, n: usize) -> Result<NodeId> {
        if id >= n {
            return Err(Error::DanglingId { file: self.file.into(), line, id });
        }
        Ok(id)
    }

    /// Requires the first column to run 0, 1, 2, ... in file order.
    fn dense_ids(&self) -> Result<()> {
        for (expected, (line, fields)) in self.rows.iter().enumerate() {
            if self.int(*line, &fields[0])? != expected {
                return Err(Error::Parse {
                    file: self.file.into(),
                    line: *line,
                    msg: format!("ids must be dense and ordered; expected {expected}"),
                });
            }
        }
        Ok(())
    }
}

/// Loads and cross-validates a dataset directory.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let tables: Vec<Table> = FILES
        .iter()
        .zip([2, 3, 2, 2, 2, 2, 2])
        .map(|(f, cols)| Table::read(dir, f, cols))
        .collect::<Result<_>>()?;
    let [articles, edges, paths, lengths, categories, hyperedges, observations] =
        <[Table; 7]>::try_from(tables).ok().expect("seven tables");

    articles.dense_ids()?;
    let titles: Vec<String> = articles.rows.iter().map(|(_, f)| f[1].clone()).collect();
    let n = titles.len();

    edges.dense_ids()?;
    let mut pairs = Vec::with_capacity(edges.rows.len());
    for (line, f) in &edges.rows {
        let src = edges.node(*line, edges.int(*line, &f[1])?, n)?;
        let dst = edges.node(*line, edges.int(*line, &f[2])?, n)?;
        pairs.push((src, dst));
    }
    let graph = NavGraph::from_id_pairs(titles, &pairs, false)?;

    let mut trajectories = Vec::with_capacity(paths.rows.len());
    for (i, (line, f)) in paths.rows.iter().enumerate() {
        let path_id = paths.int(*line, &f[0])?;
        let nodes = paths
            .ints(*line, &f[1])?
            .into_iter()
            .map(|id| paths.node(*line, id, n))
            .collect::<Result<Vec<_>>>()?;
        let (len_line, len_fields) = lengths.rows.get(i).ok_or_else(|| {
            Error::Inconsistent(format!("lengths.tsv has no row for path {path_id}"))
        })?;
        if lengths.int(*len_line, &len_fields[0])? != path_id
            || lengths.int(*len_line, &len_fields[1])? != nodes.len()
        {
            return Err(Error::Inconsistent(format!("lengths.tsv:{len_line} disagrees with path {path_id}")));
        }
        let (obs_line, obs_fields) = observations.rows.get(i).ok_or_else(|| {
            Error::Inconsistent(format!("observations.tsv has no row for path {path_id}"))
        })?;
        if observations.int(*obs_line, &obs_fields[0])? != path_id {
            return Err(Error::Inconsistent(format!("observations.tsv:{obs_line} is not path {path_id}")));
        }
        let observed = parse_observations(&observations, *obs_line, &obs_fields[1])?;
        for (step, &(s, v)) in observed.iter().enumerate() {
            if s != step || nodes.get(step) != Some(&v) {
                return Err(Error::Inconsistent(format!(
                    "observations.tsv:{obs_line}: observation {s}:{v} does not match path {path_id}"
                )));
            }
        }
        let trajectory = Trajectory::new(path_id, nodes, observed.len())?;
        trajectory.edge_ids(&graph)?;
        trajectories.push(trajectory);
    }
    if lengths.rows.len() != paths.rows.len() || observations.rows.len() != paths.rows.len() {
        return Err(Error::Inconsistent("paths, lengths and observations differ in row count".into()));
    }

    let mut labels: Vec<Option<String>> = vec![None; n];
    for (line, f) in &categories.rows {
        let id = categories.node(*line, categories.int(*line, &f[0])?, n)?;
        if f[1].is_empty() || labels[id].replace(f[1].clone()).is_some() {
            return Err(Error::Inconsistent(format!("categories.tsv:{line}: empty or repeated category for node {id}")));
        }
    }
    let categories = labels
        .into_iter()
        .enumerate()
        .map(|(id, c)| c.ok_or_else(|| Error::Inconsistent(format!("node {id} has no category"))))
        .collect::<Result<Vec<_>>>()?;

    if hyperedges.rows.len() != n {
        return Err(Error::Inconsistent(format!("hyperedges.tsv has {} rows for {n} nodes", hyperedges.rows.len())));
    }
    for (line, f) in &hyperedges.rows {
        let id = hyperedges.node(*line, hyperedges.int(*line, &f[0])?, n)?;
        let listed = hyperedges.ints(*line, &f[1])?;
        if let Some(&e) = listed.iter().find(|&&e| e >= graph.edge_count()) {
            return Err(Error::DanglingId { file: hyperedges.file.into(), line: *line, id: e });
        }
        let mut incident: Vec<_> = graph.out_edges(id).iter().chain(graph.in_edges(id)).copied().collect();
        incident.sort_unstable();
        if listed != incident {
            return Err(Error::Inconsistent(format!("hyperedges.tsv:{line}: incident edges of node {id} disagree with edges.tsv")));
        }
    }

    Ok(Dataset { graph, trajectories, categories })
}

fn parse_observations(table: &Table, line: usize, field: &str) -> Result<Vec<(usize, NodeId)>> {
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|pair| {
            let (step, node) = pair.split_once(':').ok_or_else(|| Error::Parse {
                file: table.file.into(),
                line,
                msg: format!("`{pair}` is not a step:node pair"),
            })?;
            Ok((table.int(line, step)?, table.int(line, node)?))
        })
        .collect()
}

/// Disjoint train / validation / test partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Trajectory>,
    pub validation: Vec<Trajectory>,
    pub test: Vec<Trajectory>,
}

/// Seeded shuffle followed by a cut at the rounded ratio boundaries.
///
/// Each part keeps the original relative order of its trajectories.
pub fn split_dataset(trajectories: &[Trajectory], ratios: [f64; 3], seed: u64) -> Result<Split> {
    if trajectories.is_empty() {
        return Err(Error::EmptyTrajectories);
    }
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::InvalidRatios(format!("{ratios:?} must all be positive")));
    }
    if (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(format!("{ratios:?} must sum to 1")));
    }
    let total = trajectories.len();
    let n_train = ((ratios[0] * total as f64).round() as usize).min(total);
    let n_val = ((ratios[1] * total as f64).round() as usize).min(total - n_train);

    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut part = vec![2u8; total];
    for &i in &order[..n_train] {
        part[i] = 0;
    }
    for &i in &order[n_train..n_train + n_val] {
        part[i] = 1;
    }
    let pick = |p: u8| -> Vec<Trajectory> {
        trajectories.iter().zip(&part).filter(|(_, &q)| q == p).map(|(t, _)| t.clone()).collect()
    };
    Ok(Split { train: pick(0), validation: pick(1), test: pick(2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn five_node() -> Dataset {
        let titles = ["Central Macedonia", "Thessaloniki", "Kilkis", "Veria", "Edessa"];
        let edges = [
            ("Central Macedonia", "Thessaloniki"),
            ("Thessaloniki", "Kilkis"),
            ("Kilkis", "Veria"),
            ("Central Macedonia", "Veria"),
            ("Veria", "Edessa"),
        ];
        let graph = build_graph(&edges, &titles).unwrap();
        let trajectories = vec![
            Trajectory::new(0, vec![0, 1, 2, 3], 2).unwrap(),
            Trajectory::new(1, vec![0, 3, 4], 1).unwrap(),
            Trajectory::new(2, vec![1, 2, 3, 4], 3).unwrap(),
        ];
        let categories = vec!["Place".into(), "City".into(), "subject.General".into(), "City".into(), "City".into()];
        Dataset { graph, trajectories, categories }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let data = five_node();
        save_dataset(&data, dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded, data);
        let again = tempfile::tempdir().unwrap();
        save_dataset(&loaded, again.path()).unwrap();
        for f in FILES {
            assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap(), "{f}");
        }
        assert_eq!(fs::read_to_string(dir.path().join("hyperedges.tsv")).unwrap().lines().next(), Some("0\t0,3"));
        assert_eq!(fs::read_to_string(dir.path().join("observations.tsv")).unwrap().lines().next(), Some("0\t0:0,1:1"));
    }

    #[test]
    fn distinct_load_errors() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&five_node(), dir.path()).unwrap();

        fs::write(dir.path().join("paths.tsv"), "0\t0,1,999\n1\t0,3,4\n2\t1,2,3,4\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::DanglingId { id: 999, .. })));

        fs::write(dir.path().join("paths.tsv"), "0\t0,2,3,4\n1\t0,3,4\n2\t1,2,3,4\n").unwrap();
        fs::write(dir.path().join("observations.tsv"), "0\t0:0,1:2\n1\t0:0\n2\t0:1,1:2,2:3\n").unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::MissingEdge { path_id: 0, from: 0, to: 2 })));

        fs::remove_file(dir.path().join("edges.tsv")).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::MissingFile(_))));
    }

    #[test]
    fn split_sizes() {
        let ts: Vec<_> = (0..10).map(|i| Trajectory::new(i, vec![0, 1], 1).unwrap()).collect();
        let s = split_dataset(&ts, DEFAULT_SPLIT, 7).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
        assert_eq!(s, split_dataset(&ts, DEFAULT_SPLIT, 7).unwrap());
        let mut ids: Vec<_> = s.train.iter().chain(&s.validation).chain(&s.test).map(|t| t.path_id).collect();
        ids.sort_unstable();
        assert_eq!(ids, (0..10).collect::<Vec<_>>());

        let ts: Vec<_> = (0..3000).map(|i| Trajectory::new(i, vec![0, 1], 1).unwrap()).collect();
        let s = split_dataset(&ts, DEFAULT_SPLIT, 1).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (2400, 300, 300));
    }

    #[test]
    fn split_rejects_bad_input() {
        assert!(matches!(split_dataset(&[], DEFAULT_SPLIT, 0), Err(Error::EmptyTrajectories)));
        let ts = vec![Trajectory::new(0, vec![0, 1], 1).unwrap()];
        assert!(matches!(split_dataset(&ts, [0.5, 0.5, 0.5], 0), Err(Error::InvalidRatios(_))));
        assert!(matches!(split_dataset(&ts, [1.0, 0.0, 0.0], 0), Err(Error::InvalidRatios(_))));
    }
}
