//! Loader for Wikispeedia-style navigation logs.
//!
//! Each non-comment line is tab-separated; the path is the fourth column when
//! present (the layout of `paths_finished.tsv`), otherwise the first. A path is
//! a `;`-joined list of URL-encoded titles in which `<` marks a back-click.
//! Back-clicks are expanded by popping the previous node, so `A;B;<;C`
//! becomes `A, C`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use percent_encoding::percent_decode_str;

use super::{Dataset, NavGraph, NodeId, Trajectory};
use crate::corpus::FALLBACK_CATEGORY;
use crate::error::{Error, Result};

#[derive(Debug)]
pub struct WikispeediaImport {
    pub dataset: Dataset,
    /// Paths dropped because they revisit an article after expansion.
    pub skipped_revisits: usize,
    /// Paths dropped because fewer than two articles remain after expansion.
    pub skipped_short: usize,
}

fn decode(title: &str) -> String {
    percent_decode_str(title).decode_utf8_lossy().into_owned()
}

/// Resolves back-clicks; `None` if a `<` has nothing to return to.
pub fn expand_back_clicks(steps: &[&str]) -> Option<Vec<String>> {
    let mut stack: Vec<String> = Vec::with_capacity(steps.len());
    for step in steps {
        if *step == "<" {
            if stack.len() < 2 {
                return None;
            }
            stack.pop();
        } else {
            stack.push(decode(step));
        }
    }
    Some(stack)
}

fn path_field(line: &str) -> &str {
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() >= 4 {
        fields[3]
    } else {
        fields[0]
    }
}

struct Interner {
    titles: Vec<String>,
    ids: HashMap<String, NodeId>,
}

impl Interner {
    fn id(&mut self, title: &str) -> NodeId {
        if let Some(&id) = self.ids.get(title) {
            return id;
        }
        let id = self.titles.len();
        self.titles.push(title.to_owned());
        self.ids.insert(title.to_owned(), id);
        id
    }
}

pub fn parse_wikispeedia(paths_text: &str, links_text: Option<&str>) -> Result<WikispeediaImport> {
    let mut names = Interner { titles: Vec::new(), ids: HashMap::new() };
    let mut pairs = Vec::new();
    let mut routes = Vec::new();
    let (mut skipped_revisits, mut skipped_short) = (0, 0);
    for line in paths_text.lines() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let steps: Vec<&str> = path_field(line).split(';').filter(|s| !s.is_empty()).collect();
        let Some(titles) = expand_back_clicks(&steps) else {
            skipped_short += 1;
            continue;
        };
        if titles.len() < 2 {
            skipped_short += 1;
            continue;
        }
        let mut seen = std::collections::HashSet::new();
        if !titles.iter().all(|t| seen.insert(t.as_str())) {
            skipped_revisits += 1;
            continue;
        }
        let ids: Vec<NodeId> = titles.iter().map(|t| names.id(t)).collect();
        pairs.extend(ids.windows(2).map(|w| (w[0], w[1])));
        routes.push(ids);
    }
    if let Some(links) = links_text {
        for (i, line) in links.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (src, dst) = line.split_once('\t').ok_or_else(|| Error::Parse {
                file: "links".into(),
                line: i + 1,
                msg: "expected two tab-separated titles".into(),
            })?;
            let (src, dst) = (names.id(&decode(src)), names.id(&decode(dst.trim_end())));
            if src != dst {
                pairs.push((src, dst));
            }
        }
    }
    if names.titles.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let graph = NavGraph::from_id_pairs(names.titles, &pairs, true)?;
    let trajectories = routes
        .into_iter()
        .enumerate()
        .map(|(i, ids)| Trajectory::with_default_split(i, ids))
        .collect::<Result<Vec<_>>>()?;
    let categories = vec![FALLBACK_CATEGORY.to_owned(); graph.node_count()];
    Ok(WikispeediaImport {
        dataset: Dataset { graph, trajectories, categories },
        skipped_revisits,
        skipped_short,
    })
}

pub fn load_wikispeedia(paths_file: &Path, links_file: Option<&Path>) -> Result<WikispeediaImport> {
    let read = |p: &Path| -> Result<String> {
        if !p.is_file() {
            return Err(Error::MissingFile(p.to_path_buf()));
        }
        Ok(fs::read_to_string(p)?)
    };
    let paths = read(paths_file)?;
    let links = links_file.map(read).transpose()?;
    parse_wikispeedia(&paths, links.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn back_clicks_pop_previous_node() {
        assert_eq!(expand_back_clicks(&["A", "B", "<", "C"]).unwrap(), vec!["A", "C"]);
        assert_eq!(expand_back_clicks(&["A", "B", "C", "<", "<", "D"]).unwrap(), vec!["A", "D"]);
        assert_eq!(expand_back_clicks(&["A", "<"]), None);
        assert_eq!(expand_back_clicks(&["%C3%85land", "B"]).unwrap(), vec!["Åland", "B"]);
    }

    #[test]
    fn parses_finished_paths_layout() {
        let text = "# comment\n\
                    6a3701d3\t1297740409\t166\t14th_century;15th_century;<;Europe;Africa\t-1\n\
                    3824310e\t1344753412\t88\tA;B;A\t3\n\
                    x\t0\t1\tSolo\tNULL\n\
                    Europe;Asia\n";
        let import = parse_wikispeedia(text, Some("Asia\tAfrica\n")).unwrap();
        let g = &import.dataset.graph;
        assert_eq!(import.skipped_revisits, 1);
        assert_eq!(import.skipped_short, 1);
        assert_eq!(import.dataset.trajectories.len(), 2);
        let first: Vec<&str> = import.dataset.trajectories[0].node_ids().iter().map(|&v| g.title(v)).collect();
        assert_eq!(first, vec!["14th_century", "Europe", "Africa"]);
        assert!(g.edge_between(g.node_id("Asia").unwrap(), g.node_id("Africa").unwrap()).is_some());
        assert_eq!(g.edge_count(), 4);
    }
}
