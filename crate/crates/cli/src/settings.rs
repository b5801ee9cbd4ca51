//! Config file schema and flag > env > file > default resolution.
//!
//! Environment variables are read by clap into the same fields as the
//! flags, so by the time values reach [`resolve_crawl`] a flag or env value
//! is `Some` and the file is only a fallback.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::Args;
use nidscan_core::GeoRegistry;
use nidscan_pipeline::config::CrawlConfig;
use serde::Deserialize;

/// Contents of `--config <file>`. Relative paths are relative to the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub registry: Option<PathBuf>,
    pub store: Option<PathBuf>,
    pub extractors: Option<PathBuf>,
    #[serde(default)]
    pub crawl: FileCrawl,
    #[serde(default)]
    pub provider: FileProvider,
    #[serde(default)]
    pub report: FileReport,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileCrawl {
    #[serde(default, with = "humantime_serde_opt")]
    pub search_delay: Option<Duration>,
    #[serde(default, with = "humantime_serde_opt")]
    pub download_timeout: Option<Duration>,
    pub download_max_retry: Option<u32>,
    pub max_pages: Option<u32>,
    pub accepted_types: Option<Vec<String>>,
    pub workers: Option<usize>,
    pub max_bytes: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileProvider {
    /// Fixture corpus index.
    pub fixture: Option<PathBuf>,
    /// JSON search endpoint for the live provider. Needed, together with
    /// `--unsafe-live-http`, before any live request is made.
    pub http_endpoint: Option<String>,
    #[serde(default, with = "humantime_serde_opt")]
    pub http_timeout: Option<Duration>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileReport {
    pub salt_file: Option<PathBuf>,
    pub tags: Option<PathBuf>,
    pub suffixes: Option<PathBuf>,
    pub tables: Option<Vec<String>>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,
}

mod humantime_serde_opt {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| humantime::parse_duration(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(p) = p {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        };
        fix(&mut cfg.registry);
        fix(&mut cfg.store);
        fix(&mut cfg.extractors);
        fix(&mut cfg.provider.fixture);
        fix(&mut cfg.report.salt_file);
        fix(&mut cfg.report.tags);
        fix(&mut cfg.report.suffixes);
        fix(&mut cfg.report.out);
        Ok(cfg)
    }

    pub fn load_opt(path: Option<&Path>) -> Result<Self> {
        path.map(Self::load).transpose().map(Option::unwrap_or_default)
    }
}

/// Loads `--registry`, else the config file's registry, else the bundled one.
pub fn registry(flag: Option<&Path>, file: &FileConfig) -> Result<GeoRegistry> {
    match flag.or(file.registry.as_deref()) {
        Some(p) => {
            let f = fs::File::open(p).with_context(|| format!("opening registry {}", p.display()))?;
            GeoRegistry::load(f).with_context(|| format!("loading registry {}", p.display()))
        }
        None => Ok(GeoRegistry::benchmark()),
    }
}

fn parse_duration(s: &str) -> Result<Duration, String> {
    humantime::parse_duration(s).map_err(|e| e.to_string())
}

/// One flag per crawl setting, each with an environment variable.
#[derive(Debug, Clone, Default, Args)]
pub struct CrawlArgs {
    /// Minimum gap between search requests, and between downloads from one host
    #[arg(long, env = "NIDSCAN_SEARCH_DELAY", value_parser = parse_duration)]
    pub search_delay: Option<Duration>,
    /// Per-attempt download timeout
    #[arg(long, env = "NIDSCAN_DOWNLOAD_TIMEOUT", value_parser = parse_duration)]
    pub download_timeout: Option<Duration>,
    /// Retries after a failed download attempt
    #[arg(long, env = "NIDSCAN_DOWNLOAD_MAX_RETRY")]
    pub download_max_retry: Option<u32>,
    /// Result pages fetched per query (capped by the plan's own limit)
    #[arg(long, env = "NIDSCAN_MAX_PAGES")]
    pub max_pages: Option<u32>,
    /// Comma-separated file extensions to keep
    #[arg(long, env = "NIDSCAN_ACCEPTED_TYPES", value_delimiter = ',')]
    pub accepted_types: Option<Vec<String>>,
    /// Concurrent download workers
    #[arg(long, env = "NIDSCAN_WORKERS")]
    pub workers: Option<usize>,
    /// Largest response body stored, in bytes
    #[arg(long, env = "NIDSCAN_MAX_BYTES")]
    pub max_bytes: Option<u64>,
}

pub fn resolve_crawl(args: &CrawlArgs, file: &FileCrawl) -> Result<CrawlConfig> {
    let d = CrawlConfig::default();
    let types: Option<BTreeSet<String>> =
        args.accepted_types
            .clone()
            .or_else(|| file.accepted_types.clone())
            .map(|v| {
                v.into_iter()
                    .map(|t| t.trim().trim_start_matches('.').to_ascii_lowercase())
                    .filter(|t| !t.is_empty())
                    .collect()
            });
    let cfg = CrawlConfig {
        search_delay: args.search_delay.or(file.search_delay).unwrap_or(d.search_delay),
        download_timeout: args
            .download_timeout
            .or(file.download_timeout)
            .unwrap_or(d.download_timeout),
        download_max_retry: args
            .download_max_retry
            .or(file.download_max_retry)
            .unwrap_or(d.download_max_retry),
        max_pages: args.max_pages.or(file.max_pages).unwrap_or(d.max_pages),
        accepted_types: types.unwrap_or(d.accepted_types),
        workers: args.workers.or(file.workers).unwrap_or(d.workers),
        max_bytes: args.max_bytes.or(file.max_bytes).unwrap_or(d.max_bytes),
    };
    if let Err(e) = cfg.check() {
        bail!("invalid crawl settings: {e}");
    }
    Ok(cfg)
}

/// Renders the effective crawl settings in config-file syntax.
pub fn crawl_toml(cfg: &CrawlConfig) -> String {
    let types: Vec<String> = cfg.accepted_types.iter().map(|t| format!("{t:?}")).collect();
    format!(
        "[crawl]\nsearch_delay = \"{}\"\ndownload_timeout = \"{}\"\ndownload_max_retry = {}\nmax_pages = {}\n\
         accepted_types = [{}]\nworkers = {}\nmax_bytes = {}\n",
        humantime::format_duration(cfg.search_delay),
        humantime::format_duration(cfg.download_timeout),
        cfg.download_max_retry,
        cfg.max_pages,
        types.join(", "),
        cfg.workers,
        cfg.max_bytes
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let file = FileCrawl {
            search_delay: Some(Duration::from_secs(9)),
            workers: Some(2),
            ..Default::default()
        };
        let args = CrawlArgs {
            search_delay: Some(Duration::from_secs(1)),
            ..Default::default()
        };
        let cfg = resolve_crawl(&args, &file).unwrap();
        assert_eq!(cfg.search_delay, Duration::from_secs(1));
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.max_pages, CrawlConfig::default().max_pages);
    }

    #[test]
    fn rejects_zero_workers() {
        let args = CrawlArgs {
            workers: Some(0),
            ..Default::default()
        };
        assert!(resolve_crawl(&args, &FileCrawl::default()).is_err());
    }

    #[test]
    fn crawl_toml_round_trips() {
        let cfg = CrawlConfig::default();
        #[derive(Deserialize)]
        struct Wrap {
            crawl: FileCrawl,
        }
        let back: Wrap = toml::from_str(&crawl_toml(&cfg)).unwrap();
        assert_eq!(resolve_crawl(&CrawlArgs::default(), &back.crawl).unwrap(), cfg);
    }

    #[test]
    fn config_paths_are_relative_to_the_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nidscan.toml");
        fs::write(&p, "store = \"data/s.db\"\n[crawl]\nsearch_delay = \"250ms\"\n").unwrap();
        let cfg = FileConfig::load(&p).unwrap();
        assert_eq!(cfg.store.unwrap(), dir.path().join("data/s.db"));
        assert_eq!(cfg.crawl.search_delay, Some(Duration::from_millis(250)));
        fs::write(&p, "stor = 1\n").unwrap();
        assert!(FileConfig::load(&p).is_err());
    }
}
