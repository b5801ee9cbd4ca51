//! Harvesting, storage and text extraction.
//!
//! Search results come from a [`provider::SearchProvider`]; the fixture
//! provider is the default and the HTTP provider is off unless explicitly
//! enabled. Downloads are content-addressed in a SQLite-backed [`store`].
//! Extraction runs the configured extractors and merges their output.

pub mod clock;
pub mod config;
pub mod extract;
pub mod fetch;
pub mod fixture;
pub mod harvest;
pub mod provider;
pub mod scan;
pub mod store;

pub use clock::{Clock, SystemClock, VirtualClock};
pub use config::CrawlConfig;
pub use extract::{default_extractors, extract_text, parse_config, ExtractedText, ExtractorSpec};
pub use fetch::{FetchError, Fetcher, FixtureFetcher, HttpFetcher};
pub use harvest::{download, download_all, execute_plan, DownloadRecord, DownloadStatus, SearchHit};
pub use provider::{FixtureProvider, HttpSearchProvider, SearchProvider};
pub use scan::{exposure_records, run_scan, ScanConfig, ScanSummary};
pub use store::{Store, StoreError, StoreLock, StoreStats};
