//! Downloading result URLs.

use std::collections::HashMap;
use std::fs;
use std::io::Read;
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use crate::provider::FixtureIndex;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    #[error("timeout")]
    Timeout,
    #[error("network: {0}")]
    Network(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("too_large")]
    TooLarge,
}

impl FetchError {
    /// Oversized bodies are not retried; everything else is.
    pub fn retryable(&self) -> bool {
        !matches!(self, FetchError::TooLarge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResponse {
    pub body: Vec<u8>,
    pub content_disposition: Option<String>,
}

pub trait Fetcher: Send + Sync {
    fn fetch(&self, url: &str, timeout: Duration, max_bytes: u64) -> Result<FetchResponse, FetchError>;
}

/// Filename from a Content-Disposition header value. `filename*` (RFC 5987)
/// wins over `filename`.
pub fn disposition_filename(header: &str) -> Option<String> {
    let mut plain = None;
    let mut extended = None;
    for part in header.split(';').map(str::trim) {
        let Some((key, value)) = part.split_once('=') else {
            continue;
        };
        let value = value.trim();
        match key.trim().to_ascii_lowercase().as_str() {
            "filename*" => {
                let encoded = value.rsplit('\'').next().unwrap_or(value);
                extended = Some(percent_decode(encoded));
            }
            "filename" => plain = Some(value.trim_matches('"').to_string()),
            _ => {}
        }
    }
    extended.or(plain).filter(|f| !f.is_empty())
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' && i + 2 < bytes.len() {
            if let Some(b) = std::str::from_utf8(&bytes[i + 1..i + 3])
                .ok()
                .and_then(|h| u8::from_str_radix(h, 16).ok())
            {
                out.push(b);
                i += 3;
                continue;
            }
        }
        out.push(bytes[i]);
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

/// Blocking HTTP(S) fetcher.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    client: reqwest::blocking::Client,
}

impl HttpFetcher {
    pub fn new() -> Result<Self, FetchError> {
        let client = reqwest::blocking::Client::builder()
            .user_agent(concat!("nidscan/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| FetchError::Network(e.to_string()))?;
        Ok(HttpFetcher { client })
    }
}

fn classify(e: reqwest::Error) -> FetchError {
    if e.is_timeout() {
        FetchError::Timeout
    } else {
        FetchError::Network(e.to_string())
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str, timeout: Duration, max_bytes: u64) -> Result<FetchResponse, FetchError> {
        let resp = self.client.get(url).timeout(timeout).send().map_err(classify)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(FetchError::Status(status.as_u16()));
        }
        if resp.content_length().is_some_and(|n| n > max_bytes) {
            return Err(FetchError::TooLarge);
        }
        let content_disposition = resp
            .headers()
            .get(reqwest::header::CONTENT_DISPOSITION)
            .map(|v| String::from_utf8_lossy(v.as_bytes()).into_owned());
        let mut body = Vec::new();
        resp.take(max_bytes + 1).read_to_end(&mut body).map_err(|e| {
            if e.kind() == std::io::ErrorKind::TimedOut {
                FetchError::Timeout
            } else {
                FetchError::Network(e.to_string())
            }
        })?;
        if body.len() as u64 > max_bytes {
            return Err(FetchError::TooLarge);
        }
        Ok(FetchResponse {
            body,
            content_disposition,
        })
    }
}

/// Serves bodies from a fixture index. `fail_first` and `delay_ms` on an
/// object simulate flaky and slow servers; unknown URLs answer 404.
#[derive(Debug)]
pub struct FixtureFetcher {
    index: FixtureIndex,
    attempts: Mutex<HashMap<String, u32>>,
}

impl FixtureFetcher {
    pub fn new(index: FixtureIndex) -> Self {
        FixtureFetcher {
            index,
            attempts: Mutex::new(HashMap::new()),
        }
    }

    /// Requests seen so far for `url`.
    pub fn attempts(&self, url: &str) -> u32 {
        self.attempts.lock().expect("poisoned").get(url).copied().unwrap_or(0)
    }
}

impl Fetcher for FixtureFetcher {
    fn fetch(&self, url: &str, timeout: Duration, max_bytes: u64) -> Result<FetchResponse, FetchError> {
        let attempt = {
            let mut map = self.attempts.lock().expect("poisoned");
            let n = map.entry(url.to_string()).or_default();
            *n += 1;
            *n
        };
        let obj = self.index.objects.get(url).ok_or(FetchError::Status(404))?;
        if attempt <= obj.fail_first.unwrap_or(0) {
            return Err(FetchError::Network(format!("simulated failure {attempt}")));
        }
        if obj.delay_ms.is_some_and(|ms| Duration::from_millis(ms) >= timeout) {
            return Err(FetchError::Timeout);
        }
        let path = self.index.object_path(obj);
        let body = fs::read(&path).map_err(|e| FetchError::Network(format!("{}: {e}", path.display())))?;
        if body.len() as u64 > max_bytes {
            return Err(FetchError::TooLarge);
        }
        Ok(FetchResponse {
            body,
            content_disposition: obj.content_disposition.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disposition_forms() {
        assert_eq!(
            disposition_filename("attachment; filename=\"list.xlsx\"").as_deref(),
            Some("list.xlsx")
        );
        assert_eq!(
            disposition_filename("attachment; filename=list.pdf").as_deref(),
            Some("list.pdf")
        );
        assert_eq!(
            disposition_filename("attachment; filename=\"a.bin\"; filename*=UTF-8''%E0%B8%A3.xls").as_deref(),
            Some("ร.xls")
        );
        assert_eq!(disposition_filename("inline"), None);
        assert_eq!(disposition_filename("attachment; filename=\"\""), None);
    }

    #[test]
    fn percent_decode_keeps_malformed_escapes() {
        assert_eq!(percent_decode("a%2"), "a%2");
        assert_eq!(percent_decode("a%zz"), "a%zz");
        assert_eq!(percent_decode("%41b"), "Ab");
    }
}
