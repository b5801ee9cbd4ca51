//! Plan execution and downloading.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use log::{debug, warn};
use nidscan_core::{Engine, QueryPlan};
use serde::{Deserialize, Serialize};
use url::Url;

use crate::clock::{wait_gap, Clock};
use crate::config::CrawlConfig;
use crate::fetch::{disposition_filename, FetchError, Fetcher};
use crate::provider::SearchProvider;
use crate::store::{Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchHit {
    pub query: String,
    pub engine: Engine,
    pub page_number: u32,
    pub rank_on_page: u32,
    pub url: String,
    pub retrieved_at: DateTime<Utc>,
}

/// A hit as persisted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoredHit {
    pub id: i64,
    pub hit: SearchHit,
    pub is_repeat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DownloadStatus {
    Success,
    Failed(String),
    TypeMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DownloadRecord {
    pub hit_id: i64,
    pub hit: SearchHit,
    pub status: DownloadStatus,
    pub sha256: Option<String>,
    pub declared_type: Option<String>,
    pub stored_path: Option<PathBuf>,
    pub size_bytes: u64,
    pub attempts: u32,
    pub completed_at: DateTime<Utc>,
}

/// A page that could not be fetched; the rest of that query was skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryFailure {
    pub query: String,
    pub engine: Engine,
    pub page: u32,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HarvestReport {
    pub hits: Vec<StoredHit>,
    pub failures: Vec<QueryFailure>,
    pub pages_fetched: u32,
}

/// Runs every query on every engine, paging until the provider runs out of
/// pages or the page limit (the smaller of the plan's and the config's) is
/// reached. Consecutive search requests are at least `search_delay` apart.
pub fn execute_plan(
    plan: &QueryPlan,
    provider: &dyn SearchProvider,
    config: &CrawlConfig,
    store: &Store,
    clock: &dyn Clock,
) -> Result<HarvestReport, StoreError> {
    let max_pages = plan.max_pages.min(config.max_pages);
    let mut report = HarvestReport::default();
    let mut last_request: Option<DateTime<Utc>> = None;
    for query in &plan.queries {
        for &engine in &plan.engines {
            let mut page = 1;
            while page <= max_pages {
                if let Some(t) = last_request {
                    wait_gap(clock, t, config.search_delay);
                }
                last_request = Some(clock.now());
                let result = provider.search(engine, query, page);
                report.pages_fetched += 1;
                let results = match result {
                    Ok(r) => r,
                    Err(e) => {
                        warn!("{engine} page {page} of {query:?}: {e}");
                        let message = e.to_string();
                        store.record_query_error(query, engine.as_str(), page, &message, clock.now())?;
                        report.failures.push(QueryFailure {
                            query: query.clone(),
                            engine,
                            page,
                            message,
                        });
                        break;
                    }
                };
                for h in results.hits {
                    if Url::parse(&h.url).is_err() {
                        let message = format!("invalid result URL {:?}", h.url);
                        store.record_query_error(query, engine.as_str(), page, &message, clock.now())?;
                        report.failures.push(QueryFailure {
                            query: query.clone(),
                            engine,
                            page,
                            message,
                        });
                        continue;
                    }
                    let hit = SearchHit {
                        query: query.clone(),
                        engine,
                        page_number: page,
                        rank_on_page: h.rank,
                        url: h.url,
                        retrieved_at: clock.now(),
                    };
                    let (id, is_repeat) = store.insert_hit(&hit)?;
                    report.hits.push(StoredHit { id, hit, is_repeat });
                }
                if page >= results.total_pages {
                    break;
                }
                page += 1;
            }
        }
    }
    Ok(report)
}

fn extension(name: &str) -> Option<String> {
    let last = name.rsplit('/').next()?;
    let (_, ext) = last.rsplit_once('.')?;
    (!ext.is_empty()).then(|| ext.to_ascii_lowercase())
}

/// File type from the Content-Disposition filename, else the URL path.
pub fn declared_type(url: &str, content_disposition: Option<&str>) -> Option<String> {
    content_disposition
        .and_then(disposition_filename)
        .and_then(|f| extension(&f))
        .or_else(|| Url::parse(url).ok().and_then(|u| extension(u.path())))
}

/// Enforces a minimum spacing between requests to the same host. The
/// per-host lock is held while waiting so requests to one host are
/// serialized; different hosts proceed independently.
pub struct HostScheduler<'a> {
    clock: &'a dyn Clock,
    gap: std::time::Duration,
    hosts: Mutex<HashMap<String, LastRequest>>,
}

/// Time of the latest request to one host.
type LastRequest = Arc<Mutex<Option<DateTime<Utc>>>>;

impl<'a> HostScheduler<'a> {
    pub fn new(clock: &'a dyn Clock, gap: std::time::Duration) -> Self {
        HostScheduler {
            clock,
            gap,
            hosts: Mutex::new(HashMap::new()),
        }
    }

    /// Runs `f` once the host's spacing allows, recording the start time.
    pub fn run<T>(&self, url: &str, f: impl FnOnce() -> T) -> T {
        let host = Url::parse(url)
            .ok()
            .and_then(|u| u.host_str().map(str::to_string))
            .unwrap_or_default();
        let slot = self
            .hosts
            .lock()
            .expect("scheduler poisoned")
            .entry(host)
            .or_default()
            .clone();
        let mut last = slot.lock().expect("host slot poisoned");
        if let Some(t) = *last {
            wait_gap(self.clock, t, self.gap);
        }
        *last = Some(self.clock.now());
        f()
    }
}

/// Downloads one hit with retries. A hit that already has a successful
/// or type-mismatch download is returned from the store unchanged; failed
/// downloads are retried.
pub fn download(
    hit: &StoredHit,
    config: &CrawlConfig,
    store: &Store,
    fetcher: &dyn Fetcher,
    scheduler: &HostScheduler<'_>,
    clock: &dyn Clock,
) -> Result<DownloadRecord, StoreError> {
    if let Some(prev) = store.download_for_hit(hit.id)? {
        if !matches!(prev.status, DownloadStatus::Failed(_)) {
            return Ok(prev);
        }
    }
    let mut attempts = 0;
    let mut outcome = Err(FetchError::Timeout);
    while attempts <= config.download_max_retry {
        attempts += 1;
        outcome = scheduler.run(&hit.hit.url, || {
            fetcher.fetch(&hit.hit.url, config.download_timeout, config.max_bytes)
        });
        match &outcome {
            Ok(_) => break,
            Err(e) if !e.retryable() => break,
            Err(e) => debug!("attempt {attempts} for {}: {e}", hit.hit.url),
        }
    }
    let mut rec = DownloadRecord {
        hit_id: hit.id,
        hit: hit.hit.clone(),
        status: DownloadStatus::Success,
        sha256: None,
        declared_type: None,
        stored_path: None,
        size_bytes: 0,
        attempts,
        completed_at: clock.now(),
    };
    match outcome {
        Err(e) => rec.status = DownloadStatus::Failed(e.to_string()),
        Ok(resp) => {
            rec.size_bytes = resp.body.len() as u64;
            rec.declared_type = declared_type(&hit.hit.url, resp.content_disposition.as_deref());
            let accepted = rec.declared_type.as_deref().is_some_and(|t| config.accepts(t));
            if accepted {
                let (sha, _) = store.put_object(&resp.body, clock.now())?;
                rec.stored_path = Some(store.object_path(&sha));
                rec.sha256 = Some(sha);
            } else {
                rec.status = DownloadStatus::TypeMismatch;
            }
        }
    }
    store.put_download(&rec)?;
    Ok(rec)
}

/// Downloads all hits with a pool of `config.workers` threads. Hits of one
/// query are handled in order by a single worker; queries are spread
/// across workers. Results come back in input order.
pub fn download_all(
    hits: &[StoredHit],
    config: &CrawlConfig,
    store: &Store,
    fetcher: &dyn Fetcher,
    clock: &dyn Clock,
) -> Result<Vec<DownloadRecord>, StoreError> {
    let mut by_query: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, h) in hits.iter().enumerate() {
        by_query.entry(&h.hit.query).or_default().push(i);
    }
    let queue: Mutex<VecDeque<Vec<usize>>> = Mutex::new(by_query.into_values().collect());
    let results: Mutex<Vec<Option<Result<DownloadRecord, StoreError>>>> =
        Mutex::new((0..hits.len()).map(|_| None).collect());
    let scheduler = HostScheduler::new(clock, config.search_delay);
    std::thread::scope(|s| {
        for _ in 0..config.workers.max(1) {
            s.spawn(|| loop {
                let Some(group) = queue.lock().expect("queue poisoned").pop_front() else {
                    break;
                };
                for i in group {
                    let r = download(&hits[i], config, store, fetcher, &scheduler, clock);
                    results.lock().expect("results poisoned")[i] = Some(r);
                }
            });
        }
    });
    results
        .into_inner()
        .expect("results poisoned")
        .into_iter()
        .map(|r| r.expect("every hit processed"))
        .collect()
}
