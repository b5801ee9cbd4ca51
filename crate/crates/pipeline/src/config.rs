use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// File types the harvester keeps by default.
pub const DEFAULT_ACCEPTED: [&str; 8] = ["pdf", "xls", "xlsx", "doc", "docx", "txt", "csv", "html"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("{0} must be greater than zero")]
    NotPositive(&'static str),
    #[error("accepted_types is empty")]
    NoTypes,
}

/// Crawl parameters. Durations serialize as humantime strings in config
/// files; see the CLI for parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub search_delay: Duration,
    pub download_timeout: Duration,
    pub download_max_retry: u32,
    pub max_pages: u32,
    pub accepted_types: BTreeSet<String>,
    pub workers: usize,
    pub max_bytes: u64,
}

impl Default for CrawlConfig {
    fn default() -> Self {
        CrawlConfig {
            search_delay: Duration::from_secs(5),
            download_timeout: Duration::from_secs(30),
            download_max_retry: 3,
            max_pages: 10,
            accepted_types: DEFAULT_ACCEPTED.iter().map(|s| s.to_string()).collect(),
            workers: 4,
            max_bytes: 64 * 1024 * 1024,
        }
    }
}

impl CrawlConfig {
    pub fn check(&self) -> Result<(), ConfigError> {
        if self.search_delay.is_zero() {
            return Err(ConfigError::NotPositive("search_delay"));
        }
        if self.download_timeout.is_zero() {
            return Err(ConfigError::NotPositive("download_timeout"));
        }
        if self.max_pages == 0 {
            return Err(ConfigError::NotPositive("max_pages"));
        }
        if self.workers == 0 {
            return Err(ConfigError::NotPositive("workers"));
        }
        if self.max_bytes == 0 {
            return Err(ConfigError::NotPositive("max_bytes"));
        }
        if self.accepted_types.is_empty() {
            return Err(ConfigError::NoTypes);
        }
        Ok(())
    }

    pub fn accepts(&self, file_type: &str) -> bool {
        self.accepted_types.contains(&file_type.to_ascii_lowercase())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = CrawlConfig::default();
        c.check().unwrap();
        assert_eq!(c.max_pages, 10);
        assert_eq!(c.max_bytes, 64 << 20);
        assert!(c.accepts("XLSX"));
        assert!(!c.accepts("exe"));
    }

    #[test]
    fn rejects_zero_values() {
        let c = CrawlConfig {
            search_delay: Duration::ZERO,
            ..Default::default()
        };
        assert_eq!(c.check(), Err(ConfigError::NotPositive("search_delay")));
        let c = CrawlConfig {
            max_pages: 0,
            ..Default::default()
        };
        assert!(c.check().is_err());
        let mut c = CrawlConfig::default();
        c.accepted_types.clear();
        assert_eq!(c.check(), Err(ConfigError::NoTypes));
    }
}
