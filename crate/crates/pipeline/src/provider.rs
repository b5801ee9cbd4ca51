//! Search providers. Only the file-backed fixture provider is usable
//! without extra configuration; the HTTP provider refuses to start unless
//! an endpoint is configured and the operator passes the unsafe flag.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use nidscan_core::Engine;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("reading fixture index {path}: {message}")]
    Index { path: PathBuf, message: String },
    #[error("live search provider is disabled: {0}")]
    Disabled(&'static str),
    #[error("search request failed: {0}")]
    Request(String),
}

/// One result on a result page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderHit {
    pub url: String,
    pub rank: u32,
}

/// A page of results plus the provider's view of how many pages exist.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchPage {
    pub hits: Vec<ProviderHit>,
    pub total_pages: u32,
}

pub trait SearchProvider: Send + Sync {
    fn search(&self, engine: Engine, query: &str, page: u32) -> Result<SearchPage, ProviderError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureResult {
    pub url: String,
    pub page: u32,
    pub rank: u32,
}

/// How a fixture URL responds when downloaded.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureObject {
    /// Body file, relative to the index file.
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub content_disposition: Option<String>,
    /// Number of initial requests that fail with a network error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fail_first: Option<u32>,
    /// Simulated response latency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_ms: Option<u64>,
}

/// The corpus-index file shared by the fixture provider and fetcher.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureIndex {
    pub queries: BTreeMap<String, Vec<FixtureResult>>,
    pub objects: BTreeMap<String, FixtureObject>,
    /// Directory that object paths are relative to. Not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl FixtureIndex {
    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let err = |message: String| ProviderError::Index {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut index: FixtureIndex = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        index.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(index)
    }

    pub fn object_path(&self, obj: &FixtureObject) -> PathBuf {
        self.base_dir.join(&obj.path)
    }
}

/// Answers searches from a [`FixtureIndex`]. The same results are returned
/// for every engine; unknown queries have no results.
#[derive(Debug, Clone)]
pub struct FixtureProvider {
    index: FixtureIndex,
}

impl FixtureProvider {
    pub fn new(index: FixtureIndex) -> Self {
        FixtureProvider { index }
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        FixtureIndex::load(path).map(Self::new)
    }

    pub fn index(&self) -> &FixtureIndex {
        &self.index
    }
}

impl SearchProvider for FixtureProvider {
    fn search(&self, _engine: Engine, query: &str, page: u32) -> Result<SearchPage, ProviderError> {
        let results = self.index.queries.get(query).map(Vec::as_slice).unwrap_or_default();
        let total_pages = results.iter().map(|r| r.page).max().unwrap_or(0);
        let mut hits: Vec<ProviderHit> = results
            .iter()
            .filter(|r| r.page == page)
            .map(|r| ProviderHit {
                url: r.url.clone(),
                rank: r.rank,
            })
            .collect();
        hits.sort_by_key(|h| h.rank);
        Ok(SearchPage { hits, total_pages })
    }
}

/// Settings for [`HttpSearchProvider`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpProviderConfig {
    /// JSON search endpoint, called as `GET <endpoint>?engine=..&q=..&page=..`
    /// and expected to answer with a [`SearchPage`] body.
    pub endpoint: Option<String>,
    #[serde(default)]
    pub timeout_secs: Option<u64>,
}

/// Adapter for an operator-run JSON search endpoint. Disabled unless both
/// an endpoint is configured and `allow_unsafe` is set.
#[derive(Debug)]
pub struct HttpSearchProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
}

impl HttpSearchProvider {
    pub fn new(config: &HttpProviderConfig, allow_unsafe: bool) -> Result<Self, ProviderError> {
        let endpoint = config
            .endpoint
            .clone()
            .ok_or(ProviderError::Disabled("no endpoint configured"))?;
        if !allow_unsafe {
            return Err(ProviderError::Disabled("live search needs the explicit unsafe flag"));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.unwrap_or(30)))
            .build()
            .map_err(|e| ProviderError::Request(e.to_string()))?;
        Ok(HttpSearchProvider { endpoint, client })
    }
}

impl SearchProvider for HttpSearchProvider {
    fn search(&self, engine: Engine, query: &str, page: u32) -> Result<SearchPage, ProviderError> {
        let page_str = page.to_string();
        self.client
            .get(&self.endpoint)
            .query(&[("engine", engine.as_str()), ("q", query), ("page", &page_str)])
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.bytes())
            .map_err(|e| ProviderError::Request(e.to_string()))
            .and_then(|body| serde_json::from_slice(&body).map_err(|e| ProviderError::Request(e.to_string())))
    }
}
