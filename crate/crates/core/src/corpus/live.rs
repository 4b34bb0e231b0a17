//! Live fetching over HTTP.
//!
//! Every request goes through a [`RateLimiter`] so that no two requests leave
//! closer together than the politeness delay (1 s by default). The limiter
//! reads time from a [`Clock`]; tests substitute [`FakeClock`].

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};
use serde::Deserialize;

use super::{parse_document, render_document, ArticleDocument, CorpusSource, SourceKind};
use crate::error::{Error, Result};

pub const DEFAULT_POLITENESS_DELAY: Duration = Duration::from_secs(1);
pub const DEFAULT_USER_AGENT: &str = concat!("pathex/", env!("CARGO_PKG_VERSION"), " (research crawler)");

pub trait Clock: Send + Sync {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, duration: Duration);
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// A clock that only moves when slept on.
#[derive(Debug, Default)]
pub struct FakeClock {
    now: Mutex<Duration>,
}

impl FakeClock {
    pub fn advance(&self, by: Duration) {
        *self.now.lock().unwrap() += by;
    }
}

impl Clock for FakeClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, duration: Duration) {
        self.advance(duration);
    }
}

/// Enforces a minimum spacing between consecutive requests.
pub struct RateLimiter<C: Clock> {
    clock: C,
    min_delay: Duration,
    last: Mutex<Option<Duration>>,
}

impl<C: Clock> RateLimiter<C> {
    pub fn new(clock: C, min_delay: Duration) -> Self {
        Self { clock, min_delay, last: Mutex::new(None) }
    }

    pub fn clock(&self) -> &C {
        &self.clock
    }

    /// Blocks until a request may be issued and records it as issued.
    pub fn acquire(&self) {
        // Held across the sleep so concurrent callers queue up behind it.
        let mut last = self.last.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = self.clock.now().saturating_sub(prev);
            if elapsed < self.min_delay {
                self.clock.sleep(self.min_delay - elapsed);
            }
        }
        *last = Some(self.clock.now());
    }
}

pub trait HttpTransport: Send + Sync {
    /// GET `url` and return the response body.
    fn get(&self, url: &str) -> Result<String>;
}

/// Blocking HTTP client.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .user_agent(user_agent)
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self { agent }
    }
}

impl HttpTransport for UreqTransport {
    fn get(&self, url: &str) -> Result<String> {
        let mut response = self.agent.get(url).call().map_err(|e| Error::Transport(e.to_string()))?;
        response.body_mut().read_to_string().map_err(|e| Error::Transport(e.to_string()))
    }
}

/// Wraps a transport with a [`RateLimiter`].
pub struct PoliteTransport<T, C: Clock> {
    inner: T,
    limiter: RateLimiter<C>,
}

impl<T: HttpTransport, C: Clock> PoliteTransport<T, C> {
    pub fn new(inner: T, limiter: RateLimiter<C>) -> Self {
        Self { inner, limiter }
    }

    pub fn inner(&self) -> &T {
        &self.inner
    }
}

impl<T: HttpTransport, C: Clock> HttpTransport for PoliteTransport<T, C> {
    fn get(&self, url: &str) -> Result<String> {
        self.limiter.acquire();
        self.inner.get(url)
    }
}

#[derive(Deserialize)]
struct ParseResponse {
    parse: Option<ParsedPage>,
}

#[derive(Deserialize)]
struct ParsedPage {
    #[serde(default)]
    links: Vec<PageLink>,
    #[serde(default)]
    wikitext: String,
}

#[derive(Deserialize)]
struct PageLink {
    ns: i64,
    title: String,
}

/// Reads articles through the MediaWiki `action=parse` API.
///
/// Fetched pages are memoised and, with a cache directory, persisted in the
/// snapshot file format so later runs can use them as a local snapshot.
pub struct WikipediaSource<T: HttpTransport> {
    transport: T,
    api: String,
    cache: HashMap<String, Option<ArticleDocument>>,
    cache_dir: Option<PathBuf>,
}

impl<T: HttpTransport> WikipediaSource<T> {
    pub fn new(transport: T, api: impl Into<String>, cache_dir: Option<PathBuf>) -> Self {
        Self { transport, api: api.into(), cache: HashMap::new(), cache_dir }
    }

    pub fn page_url(&self, title: &str) -> String {
        format!(
            "{}?action=parse&format=json&formatversion=2&redirects=1&prop=links%7Cwikitext&page={}",
            self.api,
            utf8_percent_encode(title, NON_ALPHANUMERIC)
        )
    }

    fn cache_path(&self, title: &str) -> Option<PathBuf> {
        let name: String = utf8_percent_encode(title, NON_ALPHANUMERIC).to_string();
        self.cache_dir.as_ref().map(|d| d.join(format!("{name}.txt")))
    }

    pub fn document(&mut self, title: &str) -> Result<Option<ArticleDocument>> {
        if let Some(doc) = self.cache.get(title) {
            return Ok(doc.clone());
        }
        if let Some(path) = self.cache_path(title).filter(|p| p.is_file()) {
            let doc = parse_document(&fs::read_to_string(&path)?, &path)?;
            self.cache.insert(title.to_owned(), Some(doc.clone()));
            return Ok(Some(doc));
        }
        let body = self.transport.get(&self.page_url(title))?;
        let doc = parse_page(title, &body)?;
        if let (Some(doc), Some(path)) = (&doc, self.cache_path(title)) {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, render_document(doc))?;
        }
        self.cache.insert(title.to_owned(), doc.clone());
        Ok(doc)
    }
}

/// Parses an `action=parse` JSON response; a missing page yields `None`.
pub fn parse_page(title: &str, body: &str) -> Result<Option<ArticleDocument>> {
    let response: ParseResponse = serde_json::from_str(body)?;
    Ok(response.parse.map(|page| ArticleDocument {
        title: title.to_owned(),
        links: page.links.into_iter().filter(|l| l.ns == 0).map(|l| l.title).collect(),
        body: page.wikitext,
    }))
}

impl<T: HttpTransport> CorpusSource for WikipediaSource<T> {
    fn kind(&self) -> SourceKind {
        SourceKind::LiveFetch
    }

    fn links(&mut self, title: &str) -> Result<Option<Vec<String>>> {
        match self.document(title) {
            Ok(doc) => Ok(doc.map(|d| d.links)),
            Err(Error::Transport(msg)) => {
                log::warn!("fetching `{title}` failed: {msg}; treating it as a dead end");
                Ok(Some(Vec::new()))
            }
            Err(e) => Err(e),
        }
    }

    /// Existence is only known after fetching, so every title is admitted.
    fn contains(&mut self, _title: &str) -> bool {
        true
    }
}
