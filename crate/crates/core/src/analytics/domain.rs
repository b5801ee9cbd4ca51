use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::{Host, Url};

const BUNDLED_SUFFIXES: &str = include_str!("../../data/public_suffixes.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("unparsable URL: {0}")]
    Parse(String),
    #[error("URL has no host")]
    NoHost,
}

/// Top-level classification of a source host.
///
/// `.th` hosts are classified by their second-level label when it is one of
/// the seven reserved SLDs. Other hosts are classified by their final
/// label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TldClass {
    GoTh,
    AcTh,
    CoTh,
    MiTh,
    OrTh,
    InTh,
    NetTh,
    Com,
    Org,
    Net,
    Other(String),
    IpAddress,
}

const TH_SLDS: [(&str, TldClass); 7] = [
    ("go", TldClass::GoTh),
    ("ac", TldClass::AcTh),
    ("co", TldClass::CoTh),
    ("mi", TldClass::MiTh),
    ("or", TldClass::OrTh),
    ("in", TldClass::InTh),
    ("net", TldClass::NetTh),
];

impl TldClass {
    pub fn as_str(&self) -> &str {
        match self {
            TldClass::GoTh => "go.th",
            TldClass::AcTh => "ac.th",
            TldClass::CoTh => "co.th",
            TldClass::MiTh => "mi.th",
            TldClass::OrTh => "or.th",
            TldClass::InTh => "in.th",
            TldClass::NetTh => "net.th",
            TldClass::Com => "com",
            TldClass::Org => "org",
            TldClass::Net => "net",
            TldClass::Other(label) => label,
            TldClass::IpAddress => "ip_address",
        }
    }

    pub fn parse(s: &str) -> TldClass {
        match s {
            "go.th" => TldClass::GoTh,
            "ac.th" => TldClass::AcTh,
            "co.th" => TldClass::CoTh,
            "mi.th" => TldClass::MiTh,
            "or.th" => TldClass::OrTh,
            "in.th" => TldClass::InTh,
            "net.th" => TldClass::NetTh,
            "com" => TldClass::Com,
            "org" => TldClass::Org,
            "net" => TldClass::Net,
            "ip_address" => TldClass::IpAddress,
            other => TldClass::Other(other.to_string()),
        }
    }

    fn of_labels(labels: &[&str]) -> TldClass {
        let last = labels.last().copied().unwrap_or_default();
        if last == "th" && labels.len() >= 2 {
            let sld = labels[labels.len() - 2];
            if let Some((_, class)) = TH_SLDS.iter().find(|(l, _)| *l == sld) {
                return class.clone();
            }
        }
        match last {
            "com" => TldClass::Com,
            "org" => TldClass::Org,
            "net" => TldClass::Net,
            other => TldClass::Other(other.to_string()),
        }
    }
}

impl fmt::Display for TldClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for TldClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for TldClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(TldClass::parse(&String::deserialize(d)?))
    }
}

/// Effective-suffix list. A registered domain is the longest matching
/// suffix plus one more label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixList {
    suffixes: BTreeSet<String>,
}

impl Default for SuffixList {
    fn default() -> Self {
        Self::parse(BUNDLED_SUFFIXES)
    }
}

impl SuffixList {
    /// One suffix per line; `//` and `#` comment lines are skipped.
    pub fn parse(text: &str) -> Self {
        let suffixes = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//") && !l.starts_with('#'))
            .map(|l| l.trim_start_matches('.').to_ascii_lowercase())
            .collect();
        SuffixList { suffixes }
    }

    /// Registered domain of a hostname, or `None` when the host is itself
    /// a suffix. Unknown final labels are treated as one-label suffixes.
    pub fn registered_domain(&self, host: &str) -> Option<String> {
        let labels: Vec<&str> = host.split('.').collect();
        let mut suffix_len = 1;
        for n in 1..=labels.len() {
            let candidate = labels[labels.len() - n..].join(".");
            if self.suffixes.contains(&candidate) {
                suffix_len = n;
            }
        }
        (labels.len() > suffix_len).then(|| labels[labels.len() - suffix_len - 1..].join("."))
    }
}

/// Operator-maintained `domain,tag` mapping (e.g. owning ministry).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagMap {
    tags: BTreeMap<String, String>,
}

impl TagMap {
    /// Parses `domain,tag` lines. The tag is everything after the first
    /// comma; `#` lines and blanks are skipped.
    pub fn parse(text: &str) -> Self {
        let tags = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once(','))
            .map(|(d, t)| (d.trim().to_ascii_lowercase(), t.trim().to_string()))
            .collect();
        TagMap { tags }
    }

    pub fn get(&self, domain: &str) -> Option<&str> {
        self.tags.get(domain).map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainInfo {
    pub url: String,
    pub fqdn: String,
    pub registered_domain: Option<String>,
    pub tld_class: TldClass,
    pub owner_tag: Option<String>,
}

/// Classifies the host of `url`.
pub fn classify_url(url: &str, suffixes: &SuffixList, tags: &TagMap) -> Result<DomainInfo, ClassifyError> {
    let parsed = Url::parse(url).map_err(|e| ClassifyError::Parse(e.to_string()))?;
    let (fqdn, registered_domain, tld_class) = match parsed.host() {
        None => return Err(ClassifyError::NoHost),
        Some(Host::Ipv4(ip)) => (ip.to_string(), None, TldClass::IpAddress),
        Some(Host::Ipv6(ip)) => (ip.to_string(), None, TldClass::IpAddress),
        Some(Host::Domain(d)) => {
            let host = d.trim_end_matches('.').to_ascii_lowercase();
            if host.is_empty() {
                return Err(ClassifyError::NoHost);
            }
            let labels: Vec<&str> = host.split('.').collect();
            let class = TldClass::of_labels(&labels);
            let registered = suffixes.registered_domain(&host);
            (host, registered, class)
        }
    };
    let owner_tag = registered_domain
        .as_deref()
        .and_then(|r| tags.get(r))
        .or_else(|| tags.get(&fqdn))
        .map(str::to_string);
    Ok(DomainInfo {
        url: url.to_string(),
        fqdn,
        registered_domain,
        tld_class,
        owner_tag,
    })
}
