//! End-to-end scan: search, download, extract, validate, persist.

use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use nidscan_core::analytics::{classify_url, ExposureRecord, SourceRef, SuffixList, TagMap};
use nidscan_core::{find_candidates, validate, GeoRegistry, QueryPlan, Verdict};
use serde::Serialize;

use crate::clock::Clock;
use crate::config::CrawlConfig;
use crate::extract::{extract_text, ExtractError, ExtractorSpec};
use crate::fetch::Fetcher;
use crate::harvest::{download_all, execute_plan, QueryFailure};
use crate::provider::SearchProvider;
use crate::store::{Store, StoreError, StoreStats};

/// Counts for one run plus totals over the whole store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScanSummary {
    pub store: StoreStats,
    /// Hits returned during this run.
    pub run_hits: u64,
    pub candidates_rejected: u64,
    pub new_findings: u64,
    #[serde(skip)]
    pub failures: Vec<QueryFailure>,
}

impl ScanSummary {
    /// True when no query produced any result page.
    pub fn total_failure(&self, plan: &QueryPlan) -> bool {
        let attempted = plan.queries.len() * plan.engines.len();
        let failed: std::collections::BTreeSet<_> = self
            .failures
            .iter()
            .filter(|f| f.page == 1)
            .map(|f| (&f.query, f.engine))
            .collect();
        attempted > 0 && failed.len() == attempted
    }
}

impl fmt::Display for ScanSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.store;
        writeln!(
            f,
            "{} search queries returned {} unique URLs; {} downloads succeeded and yielded {} documents, \
             which exposed {} unique national ID numbers.",
            s.queries, s.unique_urls, s.downloads_ok, s.objects, s.unique_ids
        )?;
        write!(
            f,
            "hits {} | failed downloads {} | type mismatches {} | query errors {} | extraction failures {}",
            s.hits, s.downloads_failed, s.type_mismatch, s.query_errors, s.extraction_failures
        )
    }
}

/// Everything a scan needs besides the plan and I/O endpoints.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub crawl: CrawlConfig,
    pub extractors: Vec<ExtractorSpec>,
    pub registry: GeoRegistry,
}

/// Runs the plan and processes every object not yet extracted. Safe to
/// re-run on the same store: hits, objects and findings are deduplicated.
pub fn run_scan(
    plan: &QueryPlan,
    provider: &dyn SearchProvider,
    fetcher: &dyn Fetcher,
    clock: &dyn Clock,
    store: &Store,
    config: &ScanConfig,
) -> Result<ScanSummary, StoreError> {
    let harvest = execute_plan(plan, provider, &config.crawl, store, clock)?;
    download_all(&harvest.hits, &config.crawl, store, fetcher, clock)?;
    let (rejected, new_findings) = extract_pending(store, config, clock)?;
    Ok(ScanSummary {
        store: store.stats()?,
        run_hits: harvest.hits.len() as u64,
        candidates_rejected: rejected,
        new_findings,
        failures: harvest.failures,
    })
}

/// Extracts and validates every stored object without an extraction row.
/// Returns (rejected candidates, new findings).
pub fn extract_pending(store: &Store, config: &ScanConfig, clock: &dyn Clock) -> Result<(u64, u64), StoreError> {
    let mut rejected = 0;
    let mut found = 0;
    for (sha, declared) in store.pending_extractions()? {
        let bytes = store.object_bytes(&sha)?;
        match extract_text(&bytes, &declared, &sha, &config.extractors) {
            Ok(text) => {
                for cand in find_candidates(&text.merged) {
                    if validate(&cand.normalized, &config.registry).verdict == Verdict::Accepted {
                        found += u64::from(store.insert_finding(&cand.normalized, &sha, clock.now())?);
                    } else {
                        rejected += 1;
                    }
                }
                let failures = serde_json::to_string(&text.failures).expect("failures serialize");
                store.record_extraction(&sha, true, text.segments.len(), &failures, clock.now())?;
            }
            Err(e) => {
                warn!("extracting {sha}: {e}");
                let failures = match &e {
                    ExtractError::AllFailed(f) => serde_json::to_string(f).expect("failures serialize"),
                    ExtractError::Unsupported(_) => serde_json::to_string(&[e.to_string()]).expect("serialize"),
                };
                store.record_extraction(&sha, false, 0, &failures, clock.now())?;
            }
        }
    }
    Ok((rejected, found))
}

/// `(url, reason)` pairs for URLs that could not be classified.
pub type ClassifyFailures = Vec<(String, String)>;

/// Builds analytics records from the store, one per (ID, object, hit).
/// URLs that fail classification are returned as `(url, reason)`.
pub fn exposure_records(
    store: &Store,
    suffixes: &SuffixList,
    tags: &TagMap,
) -> Result<(Vec<ExposureRecord>, ClassifyFailures), StoreError> {
    let mut records = Vec::new();
    let mut failed: BTreeMap<String, String> = BTreeMap::new();
    for row in store.exposure_rows()? {
        match classify_url(&row.url, suffixes, tags) {
            Ok(domain) => records.push(ExposureRecord {
                nid: row.nid,
                source: SourceRef {
                    url: row.url,
                    sha256: row.sha256,
                    engine: row.engine,
                    page: row.page,
                    rank: row.rank,
                },
                domain,
                file_type: row.declared_type,
                query: row.query,
                first_seen: row.first_seen,
            }),
            Err(e) => {
                failed.insert(row.url, e.to_string());
            }
        }
    }
    Ok((records, failed.into_iter().collect()))
}
