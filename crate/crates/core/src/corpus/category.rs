//! Article categorization through a SPARQL endpoint.
//!
//! Any failure (no type, transport error, malformed response) maps to
//! [`FALLBACK_CATEGORY`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use percent_encoding::{utf8_percent_encode, AsciiSet, CONTROLS, NON_ALPHANUMERIC};
use serde::Deserialize;

use super::live::HttpTransport;
use crate::error::Result;

pub const FALLBACK_CATEGORY: &str = "subject.General";
pub const DBPEDIA_ENDPOINT: &str = "https://dbpedia.org/sparql";
const ONTOLOGY_PREFIX: &str = "http://dbpedia.org/ontology/";

/// Characters that may not appear raw inside a SPARQL IRI reference.
const IRI_UNSAFE: &AsciiSet = &CONTROLS.add(b' ').add(b'"').add(b'<').add(b'>').add(b'{').add(b'}').add(b'|').add(b'\\').add(b'^').add(b'`');

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryRecord {
    pub title: String,
    pub category: String,
}

pub trait CategoryClient: Sync {
    /// The ontology type of `title`, `Ok(None)` when the endpoint knows none.
    fn ontology_type(&self, title: &str) -> Result<Option<String>>;
}

/// A client that never knows a type; everything falls back.
#[derive(Debug, Default, Clone, Copy)]
pub struct OfflineCategories;

impl CategoryClient for OfflineCategories {
    fn ontology_type(&self, _title: &str) -> Result<Option<String>> {
        Ok(None)
    }
}

pub struct DbpediaClient<T: HttpTransport> {
    transport: T,
    endpoint: String,
}

impl<T: HttpTransport> DbpediaClient<T> {
    pub fn new(transport: T, endpoint: impl Into<String>) -> Self {
        Self { transport, endpoint: endpoint.into() }
    }

    pub fn query_for(title: &str) -> String {
        let resource = utf8_percent_encode(&title.replace(' ', "_"), IRI_UNSAFE).to_string();
        format!(
            "SELECT ?type WHERE {{ <http://dbpedia.org/resource/{resource}> a ?type . \
             FILTER(STRSTARTS(STR(?type), \"{ONTOLOGY_PREFIX}\")) }} LIMIT 1"
        )
    }

    pub fn request_url(&self, title: &str) -> String {
        format!(
            "{}?query={}&format={}",
            self.endpoint,
            utf8_percent_encode(&Self::query_for(title), NON_ALPHANUMERIC),
            utf8_percent_encode("application/sparql-results+json", NON_ALPHANUMERIC)
        )
    }
}

#[derive(Deserialize)]
struct SparqlResults {
    results: Bindings,
}

#[derive(Deserialize)]
struct Bindings {
    bindings: Vec<TypeBinding>,
}

#[derive(Deserialize)]
struct TypeBinding {
    #[serde(rename = "type")]
    kind: Term,
}

#[derive(Deserialize)]
struct Term {
    value: String,
}

/// Extracts the first ontology type from a SPARQL JSON result set.
pub fn parse_type_results(body: &str) -> Result<Option<String>> {
    let parsed: SparqlResults = serde_json::from_str(body)?;
    Ok(parsed.results.bindings.into_iter().next().map(|b| {
        b.kind.value.strip_prefix(ONTOLOGY_PREFIX).map(str::to_owned).unwrap_or(b.kind.value)
    }))
}

impl<T: HttpTransport> CategoryClient for DbpediaClient<T> {
    fn ontology_type(&self, title: &str) -> Result<Option<String>> {
        let body = self.transport.get(&self.request_url(title))?;
        parse_type_results(&body)
    }
}

pub fn categorize<C: CategoryClient + ?Sized>(title: &str, client: &C) -> CategoryRecord {
    let category = match client.ontology_type(title) {
        Ok(Some(kind)) if !kind.trim().is_empty() => kind,
        Ok(_) => FALLBACK_CATEGORY.to_owned(),
        Err(e) => {
            log::warn!("categorizing `{title}` failed: {e}; using {FALLBACK_CATEGORY}");
            FALLBACK_CATEGORY.to_owned()
        }
    };
    CategoryRecord { title: title.to_owned(), category }
}

/// Categorizes `titles` with at most `max_in_flight` lookups running at once.
/// The output is in input order.
pub fn categorize_all<C: CategoryClient + ?Sized>(titles: &[String], client: &C, max_in_flight: usize) -> Vec<CategoryRecord> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<CategoryRecord>>> = titles.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..max_in_flight.clamp(1, titles.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(title) = titles.get(i) else { break };
                *slots[i].lock().unwrap() = Some(categorize(title, client));
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().unwrap().expect("every slot filled")).collect()
}
