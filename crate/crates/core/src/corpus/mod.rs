//! Article corpora and WCM-style path generation.
//!
//! A [`CorpusSource`] answers "what are the ordered outbound links of this
//! article". [`LocalSnapshot`] serves a recorded snapshot directory and is what
//! every test uses; [`live::WikipediaSource`] fetches pages over HTTP behind a
//! politeness delay.

pub mod category;
pub mod live;
mod pathgen;
pub mod synthetic;

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::NavGraph;

pub use category::{categorize, categorize_all, CategoryClient, CategoryRecord, FALLBACK_CATEGORY};
pub use pathgen::{
    generate_dataset, generate_path, generate_path_from, successor_candidates, CrawlConfig, GeneratedDataset,
    GeneratedPath, GenerationStats, LinkPolicy,
};

/// Namespace markers and tokens that disqualify a title. Matching is
/// case-sensitive.
const BANNED_SUBSTRINGS: [&str; 7] = ["Talk", "User", "File", "ISO", "%", "#", ":"];

/// Title filter applied to every candidate link.
///
/// Rejects titles containing `Talk`, `User`, `File`, `ISO`, `%`, `#` or `:`,
/// and titles made only of digits.
///
/// ```
/// use pathex::corpus::is_valid_title;
/// assert!(!is_valid_title("Talk:Thessaloniki"));
/// assert!(!is_valid_title("12345"));
/// assert!(is_valid_title("Thessaloniki"));
/// ```
pub fn is_valid_title(title: &str) -> bool {
    if !title.is_empty() && title.chars().all(|c| c.is_ascii_digit()) {
        return false;
    }
    !BANNED_SUBSTRINGS.iter().any(|b| title.contains(b))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArticleDocument {
    pub title: String,
    /// Outbound link titles in document order.
    pub links: Vec<String>,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    LocalSnapshot,
    LiveFetch,
}

/// Where walks read their link lists from.
pub trait CorpusSource {
    fn kind(&self) -> SourceKind;

    /// Ordered outbound links of `title`, or `None` when the article is unknown.
    fn links(&mut self, title: &str) -> Result<Option<Vec<String>>>;

    /// Whether a walk may step onto `title`.
    fn contains(&mut self, title: &str) -> bool;
}

/// A recorded corpus held in memory.
///
/// On disk a snapshot is a directory with one `.txt` file per article: the
/// first line is the title, the second the comma-joined links (a comma inside
/// a link title is written `%2C`), the rest is body text. Files are read in
/// file-name order.
#[derive(Debug, Clone, Default)]
pub struct LocalSnapshot {
    docs: Vec<ArticleDocument>,
    index: HashMap<String, usize>,
}

impl LocalSnapshot {
    pub fn from_documents(docs: Vec<ArticleDocument>) -> Result<Self> {
        let mut index = HashMap::with_capacity(docs.len());
        for (i, d) in docs.iter().enumerate() {
            if index.insert(d.title.clone(), i).is_some() {
                return Err(Error::DuplicateTitle(d.title.clone()));
            }
        }
        Ok(Self { docs, index })
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        if !dir.is_dir() {
            return Err(Error::MissingFile(dir.to_path_buf()));
        }
        let mut files: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        files.sort();
        let docs = files
            .iter()
            .map(|p| parse_document(&fs::read_to_string(p)?, p))
            .collect::<Result<Vec<_>>>()?;
        Self::from_documents(docs)
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (i, doc) in self.docs.iter().enumerate() {
            fs::write(dir.join(format!("{i:05}.txt")), render_document(doc))?;
        }
        Ok(())
    }

    pub fn documents(&self) -> &[ArticleDocument] {
        &self.docs
    }

    pub fn get(&self, title: &str) -> Option<&ArticleDocument> {
        self.index.get(title).map(|&i| &self.docs[i])
    }

    /// One text per graph node, in node order. Nodes missing from the
    /// snapshot or with an empty body fall back to their title.
    pub fn node_documents(&self, graph: &NavGraph) -> Vec<String> {
        graph
            .nodes()
            .iter()
            .map(|n| match self.get(&n.title) {
                Some(d) if !d.body.trim().is_empty() => format!("{}\n{}", d.title, d.body),
                _ => n.title.clone(),
            })
            .collect()
    }
}

impl CorpusSource for LocalSnapshot {
    fn kind(&self) -> SourceKind {
        SourceKind::LocalSnapshot
    }

    fn links(&mut self, title: &str) -> Result<Option<Vec<String>>> {
        Ok(self.get(title).map(|d| d.links.clone()))
    }

    fn contains(&mut self, title: &str) -> bool {
        self.index.contains_key(title)
    }
}

pub(crate) fn render_document(doc: &ArticleDocument) -> String {
    let links: Vec<String> = doc.links.iter().map(|l| l.replace(',', "%2C")).collect();
    format!("{}\n{}\n{}", doc.title, links.join(","), doc.body)
}

pub(crate) fn parse_document(text: &str, origin: &Path) -> Result<ArticleDocument> {
    let mut parts = text.splitn(3, '\n');
    let title = parts.next().unwrap_or("").trim_end_matches('\r').to_owned();
    if title.is_empty() {
        return Err(Error::Parse { file: origin.display().to_string(), line: 1, msg: "empty title".into() });
    }
    let links = parts
        .next()
        .unwrap_or("")
        .trim_end_matches('\r')
        .split(',')
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().replace("%2C", ","))
        .collect();
    let body = parts.next().unwrap_or("").to_owned();
    Ok(ArticleDocument { title, links, body })
}
