//! Aggregation of validated exposures into report tables.

mod domain;
mod percent;
mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use domain::{classify_url, ClassifyError, DomainInfo, SuffixList, TagMap, TldClass};
pub use percent::Percent;
pub use report::{
    emit_report, redact_table, render_table, scrub_text, Redaction, ReportError, ReportFormat, UnsafeAck,
};

use crate::geo::GeoRegistry;
use crate::id::category_description;

/// Where an exposure was found: one search hit and the object it led to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRef {
    pub url: String,
    pub sha256: String,
    pub engine: String,
    pub page: u32,
    pub rank: u32,
}

/// One validated ID occurrence joined with its source and domain.
///
/// `nid` holds the 13 digits, or a pseudonym token once redacted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExposureRecord {
    pub nid: String,
    pub source: SourceRef,
    pub domain: DomainInfo,
    pub file_type: String,
    pub query: String,
    pub first_seen: String,
}

/// Classifies every URL, returning the successes and a diagnostics list of
/// `(url, reason)` for the rest.
pub fn classify_all<'a>(
    urls: impl IntoIterator<Item = &'a str>,
    suffixes: &SuffixList,
    tags: &TagMap,
) -> (BTreeMap<String, DomainInfo>, Vec<(String, String)>) {
    let mut ok = BTreeMap::new();
    let mut failed = Vec::new();
    for url in urls {
        if ok.contains_key(url) || failed.iter().any(|(u, _): &(String, String)| u == url) {
            continue;
        }
        match classify_url(url, suffixes, tags) {
            Ok(info) => {
                ok.insert(url.to_string(), info);
            }
            Err(e) => failed.push((url.to_string(), e.to_string())),
        }
    }
    (ok, failed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    FileType,
    FileFamily,
    Tld,
    RegisteredDomain,
    OwnerTag,
    Query,
    Engine,
    CategoryDigit,
    Page,
    NationalId,
    Province,
    District,
    Multiplicity,
    Diagnostics,
}

impl Dimension {
    pub const AGGREGATABLE: [Dimension; 10] = [
        Dimension::FileType,
        Dimension::FileFamily,
        Dimension::Tld,
        Dimension::RegisteredDomain,
        Dimension::OwnerTag,
        Dimension::Query,
        Dimension::Engine,
        Dimension::CategoryDigit,
        Dimension::Page,
        Dimension::NationalId,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::FileType => "file_type",
            Dimension::FileFamily => "file_family",
            Dimension::Tld => "tld",
            Dimension::RegisteredDomain => "registered_domain",
            Dimension::OwnerTag => "owner_tag",
            Dimension::Query => "query",
            Dimension::Engine => "engine",
            Dimension::CategoryDigit => "category_digit",
            Dimension::Page => "page",
            Dimension::NationalId => "national_id",
            Dimension::Province => "province",
            Dimension::District => "district",
            Dimension::Multiplicity => "multiplicity",
            Dimension::Diagnostics => "diagnostics",
        }
    }

    fn key_header(self) -> &'static str {
        match self {
            Dimension::FileType => "File type",
            Dimension::FileFamily => "File family",
            Dimension::Tld => "TLD",
            Dimension::RegisteredDomain => "Registered domain",
            Dimension::OwnerTag => "Owner",
            Dimension::Query => "Query",
            Dimension::Engine => "Engine",
            Dimension::CategoryDigit => "Category",
            Dimension::Page => "Result page",
            Dimension::NationalId => "National ID",
            Dimension::Province => "Province code",
            Dimension::District => "District code",
            Dimension::Multiplicity => "Source URLs",
            Dimension::Diagnostics => "URL",
        }
    }

    /// True when every record maps to exactly one key.
    pub fn partitions(self) -> bool {
        !matches!(self, Dimension::Diagnostics)
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::AGGREGATABLE
            .into_iter()
            .chain([
                Dimension::Province,
                Dimension::District,
                Dimension::Multiplicity,
                Dimension::Diagnostics,
            ])
            .find(|d| d.as_str() == s)
            .ok_or_else(|| format!("unknown dimension {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Key,
    Label,
    Urls,
    Files,
    Fqdns,
    RegisteredDomains,
    UniqueIds,
    Population,
    Percent,
}

impl Column {
    pub fn as_str(self) -> &'static str {
        match self {
            Column::Key => "key",
            Column::Label => "label",
            Column::Urls => "urls",
            Column::Files => "files",
            Column::Fqdns => "fqdns",
            Column::RegisteredDomains => "registered_domains",
            Column::UniqueIds => "unique_ids",
            Column::Population => "population",
            Column::Percent => "percent",
        }
    }

    fn title(self, dimension: Dimension) -> &'static str {
        match self {
            Column::Key => dimension.key_header(),
            Column::Label => "Name",
            Column::Urls => "URLs",
            Column::Files => "Files",
            Column::Fqdns => "FQDNs",
            Column::RegisteredDomains => "Registered domains",
            Column::UniqueIds => "Unique IDs",
            Column::Population => "Population",
            Column::Percent => "%",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub key: String,
    pub label: Option<String>,
    pub urls: u64,
    pub files: u64,
    pub fqdns: u64,
    pub registered_domains: u64,
    pub unique_ids: u64,
    pub population: Option<u64>,
    pub percent: Option<Percent>,
}

impl AggregateRow {
    fn empty(key: String) -> Self {
        AggregateRow {
            key,
            label: None,
            urls: 0,
            files: 0,
            fqdns: 0,
            registered_domains: 0,
            unique_ids: 0,
            population: None,
            percent: None,
        }
    }
}

/// A report table. `name` is the file stem used when emitting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateTable {
    pub name: String,
    pub title: String,
    pub dimension: Dimension,
    pub columns: Vec<Column>,
    pub rows: Vec<AggregateRow>,
}

impl AggregateTable {
    /// Keeps the first `k` rows.
    pub fn top(mut self, k: usize) -> Self {
        self.rows.truncate(k);
        self
    }

    /// Re-sorts by percent descending (rows without a percent last), then
    /// by count and key.
    pub fn sorted_by_percent(mut self) -> Self {
        self.rows.sort_by(|a, b| {
            b.percent
                .cmp(&a.percent)
                .then(b.unique_ids.cmp(&a.unique_ids))
                .then(a.key.cmp(&b.key))
        });
        self
    }

    pub fn total_unique_ids(&self) -> u64 {
        self.rows.iter().map(|r| r.unique_ids).sum()
    }
}

fn sort_by_count(rows: &mut [AggregateRow]) {
    rows.sort_by(|a, b| b.unique_ids.cmp(&a.unique_ids).then(a.key.cmp(&b.key)));
}

/// Spreadsheet, PDF, word-processor, text or HTML.
pub fn file_family(file_type: &str) -> &'static str {
    match file_type.to_ascii_lowercase().as_str() {
        "xls" | "xlsx" | "csv" | "ods" => "spreadsheet",
        "pdf" => "pdf",
        "doc" | "docx" | "odt" | "rtf" => "word",
        "html" | "htm" => "html",
        "txt" => "text",
        _ => "other",
    }
}

fn key_of(record: &ExposureRecord, dimension: Dimension) -> String {
    match dimension {
        Dimension::FileType => record.file_type.to_ascii_lowercase(),
        Dimension::FileFamily => file_family(&record.file_type).to_string(),
        Dimension::Tld => record.domain.tld_class.as_str().to_string(),
        Dimension::RegisteredDomain => record
            .domain
            .registered_domain
            .clone()
            .unwrap_or_else(|| record.domain.fqdn.clone()),
        Dimension::OwnerTag => record
            .domain
            .owner_tag
            .clone()
            .unwrap_or_else(|| "(untagged)".to_string()),
        Dimension::Query => record.query.clone(),
        Dimension::Engine => record.source.engine.clone(),
        Dimension::CategoryDigit => record.nid.chars().next().map(String::from).unwrap_or_default(),
        Dimension::Page => record.source.page.to_string(),
        Dimension::NationalId => record.nid.clone(),
        Dimension::Province => record.nid.get(1..3).unwrap_or_default().to_string(),
        Dimension::District => record.nid.get(1..5).unwrap_or_default().to_string(),
        Dimension::Multiplicity | Dimension::Diagnostics => String::new(),
    }
}

#[derive(Default)]
struct Acc<'a> {
    urls: BTreeSet<&'a str>,
    files: BTreeSet<&'a str>,
    fqdns: BTreeSet<&'a str>,
    registered: BTreeSet<&'a str>,
    ids: BTreeSet<&'a str>,
}

fn fold<'a>(records: &'a [ExposureRecord], dimension: Dimension) -> BTreeMap<String, Acc<'a>> {
    let mut groups: BTreeMap<String, Acc<'a>> = BTreeMap::new();
    for r in records {
        let acc = groups.entry(key_of(r, dimension)).or_default();
        acc.urls.insert(&r.source.url);
        acc.files.insert(&r.source.sha256);
        acc.fqdns.insert(&r.domain.fqdn);
        if let Some(reg) = &r.domain.registered_domain {
            acc.registered.insert(reg);
        }
        acc.ids.insert(&r.nid);
    }
    groups
}

fn row_of(key: String, acc: &Acc<'_>) -> AggregateRow {
    AggregateRow {
        urls: acc.urls.len() as u64,
        files: acc.files.len() as u64,
        fqdns: acc.fqdns.len() as u64,
        registered_domains: acc.registered.len() as u64,
        unique_ids: acc.ids.len() as u64,
        ..AggregateRow::empty(key)
    }
}

fn default_title(dimension: Dimension) -> &'static str {
    match dimension {
        Dimension::FileType => "Exposure by file type",
        Dimension::FileFamily => "Exposure by file family",
        Dimension::Tld => "Exposure by TLD",
        Dimension::RegisteredDomain => "Exposure by registered domain",
        Dimension::OwnerTag => "Exposure by owner",
        Dimension::Query => "Exposure by query",
        Dimension::Engine => "Exposure by search engine",
        Dimension::CategoryDigit => "Exposure by ID category",
        Dimension::Page => "Exposure by result page",
        Dimension::NationalId => "Exposed IDs",
        Dimension::Province => "Exposure by province",
        Dimension::District => "Exposure by district",
        Dimension::Multiplicity => "IDs by number of source URLs",
        Dimension::Diagnostics => "Unclassified URLs",
    }
}

/// Groups records by `dimension`, counting distinct URLs, objects, hosts,
/// registered domains and IDs per key. Rows are sorted by unique IDs
/// descending, ties broken by key.
pub fn aggregate(records: &[ExposureRecord], dimension: Dimension) -> AggregateTable {
    let total_ids: BTreeSet<&str> = records.iter().map(|r| r.nid.as_str()).collect();
    let mut rows: Vec<AggregateRow> = fold(records, dimension)
        .iter()
        .map(|(k, acc)| {
            let mut row = row_of(k.clone(), acc);
            match dimension {
                Dimension::CategoryDigit => {
                    row.label = k.parse::<u8>().ok().and_then(category_description).map(str::to_string);
                    row.percent = Percent::ratio(row.unique_ids, total_ids.len() as u64, 2);
                }
                Dimension::RegisteredDomain | Dimension::Tld => {
                    let tags: BTreeSet<&str> = records
                        .iter()
                        .filter(|r| key_of(r, dimension) == *k)
                        .filter_map(|r| r.domain.owner_tag.as_deref())
                        .collect();
                    if dimension == Dimension::RegisteredDomain && !tags.is_empty() {
                        row.label = Some(tags.into_iter().collect::<Vec<_>>().join("; "));
                    }
                }
                _ => {}
            }
            row
        })
        .collect();
    sort_by_count(&mut rows);

    let mut columns = vec![Column::Key];
    if rows.iter().any(|r| r.label.is_some()) {
        columns.push(Column::Label);
    }
    columns.extend([
        Column::Urls,
        Column::Files,
        Column::Fqdns,
        Column::RegisteredDomains,
        Column::UniqueIds,
    ]);
    if rows.iter().any(|r| r.percent.is_some()) {
        columns.push(Column::Percent);
    }
    AggregateTable {
        name: dimension.as_str().to_string(),
        title: default_title(dimension).to_string(),
        dimension,
        columns,
        rows,
    }
}

/// Province and district tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoTables {
    pub province: AggregateTable,
    pub district: AggregateTable,
}

fn geo_table(records: &[ExposureRecord], registry: &GeoRegistry, dimension: Dimension) -> AggregateTable {
    let mut rows: Vec<AggregateRow> = fold(records, dimension)
        .iter()
        .filter(|(_, acc)| !acc.ids.is_empty())
        .map(|(code, acc)| {
            let mut row = row_of(code.clone(), acc);
            row.label = match dimension {
                Dimension::Province => registry.lookup_province(code).map(|p| p.name.clone()),
                _ => registry
                    .lookup_district(code)
                    .map(|d| match registry.lookup_province(&d.province_code) {
                        Some(p) => format!("{} / {}", d.name, p.name),
                        None => d.name.clone(),
                    }),
            };
            row.population = registry.population_of(code);
            row.percent = row.population.and_then(|pop| Percent::ratio(row.unique_ids, pop, 2));
            row
        })
        .collect();
    sort_by_count(&mut rows);
    AggregateTable {
        name: dimension.as_str().to_string(),
        title: default_title(dimension).to_string(),
        dimension,
        columns: vec![
            Column::Key,
            Column::Label,
            Column::Urls,
            Column::Files,
            Column::UniqueIds,
            Column::Population,
            Column::Percent,
        ],
        rows,
    }
}

/// Distinct IDs per province (digits 2-3) and district (digits 2-5), with
/// per-capita percentages where the registry has a population figure.
/// Both tables are sorted by count; use
/// [`AggregateTable::sorted_by_percent`] for the rate ordering.
pub fn geographic_report(records: &[ExposureRecord], registry: &GeoRegistry) -> GeoTables {
    GeoTables {
        province: geo_table(records, registry, Dimension::Province),
        district: geo_table(records, registry, Dimension::District),
    }
}

/// Distribution of IDs by how many distinct source URLs expose them.
/// Rows are ordered by multiplicity, largest first; percentages are of all
/// unique IDs at four decimals.
pub fn repeat_exposure(records: &[ExposureRecord]) -> AggregateTable {
    let mut per_id: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        per_id.entry(&r.nid).or_default().insert(&r.source.url);
    }
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for urls in per_id.values() {
        *counts.entry(urls.len() as u64).or_default() += 1;
    }
    repeat_table(&counts)
}

/// Builds the repeat-exposure table from a `multiplicity -> id count` map.
pub fn repeat_table(counts: &BTreeMap<u64, u64>) -> AggregateTable {
    let total: u64 = counts.values().sum();
    let rows = counts
        .iter()
        .rev()
        .map(|(&m, &n)| AggregateRow {
            unique_ids: n,
            percent: Percent::ratio(n, total, 4),
            ..AggregateRow::empty(m.to_string())
        })
        .collect();
    AggregateTable {
        name: "repeat".to_string(),
        title: default_title(Dimension::Multiplicity).to_string(),
        dimension: Dimension::Multiplicity,
        columns: vec![Column::Key, Column::UniqueIds, Column::Percent],
        rows,
    }
}

/// Number of search hits per result page, over all hits whether or not
/// they led to a finding.
pub fn page_histogram(pages: &[u32]) -> AggregateTable {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for &p in pages {
        *counts.entry(p).or_default() += 1;
    }
    AggregateTable {
        name: "hits".to_string(),
        title: "Search hits by result page".to_string(),
        dimension: Dimension::Page,
        columns: vec![Column::Key, Column::Urls],
        rows: counts
            .into_iter()
            .map(|(page, n)| AggregateRow {
                urls: n,
                ..AggregateRow::empty(page.to_string())
            })
            .collect(),
    }
}

/// URLs that could not be classified, with the reason as the label.
pub fn diagnostics_table(failures: &[(String, String)]) -> AggregateTable {
    let rows = failures
        .iter()
        .map(|(url, reason)| AggregateRow {
            label: Some(reason.clone()),
            urls: 1,
            ..AggregateRow::empty(url.clone())
        })
        .collect();
    AggregateTable {
        name: "diagnostics".to_string(),
        title: default_title(Dimension::Diagnostics).to_string(),
        dimension: Dimension::Diagnostics,
        columns: vec![Column::Key, Column::Label],
        rows,
    }
}
