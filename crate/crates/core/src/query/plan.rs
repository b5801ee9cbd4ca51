use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::{render_with, Engine, QueryError, QueryExpr};
use crate::geo::GeoRegistry;

/// An ordered batch of rendered queries plus execution parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPlan {
    pub queries: Vec<String>,
    pub engines: Vec<Engine>,
    pub max_pages: u32,
    #[serde(default)]
    pub tags: Vec<String>,
}

impl QueryPlan {
    pub fn new(queries: Vec<String>, engines: Vec<Engine>, max_pages: u32) -> Result<Self, QueryError> {
        let plan = QueryPlan {
            queries,
            engines,
            max_pages,
            tags: Vec::new(),
        };
        plan.check()?;
        Ok(plan)
    }

    pub fn with_tags(mut self, tags: impl IntoIterator<Item = String>) -> Self {
        self.tags = tags.into_iter().collect();
        self
    }

    /// Checks the plan invariants; used after deserializing a plan file.
    pub fn check(&self) -> Result<(), QueryError> {
        if self.queries.is_empty() {
            return Err(QueryError::NoQueries);
        }
        if self.engines.is_empty() {
            return Err(QueryError::NoEngines);
        }
        if self.max_pages == 0 {
            return Err(QueryError::ZeroPages);
        }
        Ok(())
    }
}

/// Quoted prefix phrases `"c-dddd-"` for every category × district,
/// ordered by category then district code.
pub fn prefix_dorks(registry: &GeoRegistry, categories: &BTreeSet<u8>) -> Result<Vec<String>, QueryError> {
    if let Some(&bad) = categories.iter().find(|c| !(1..=8).contains(*c)) {
        return Err(QueryError::BadCategory(bad));
    }
    Ok(categories
        .iter()
        .flat_map(|c| registry.districts().map(move |d| format!("\"{c}-{}-\"", d.code)))
        .collect())
}

/// Renders `template` once per binding map, in order.
pub fn build_plan(
    template: &QueryExpr,
    bindings: &[BTreeMap<String, String>],
    engines: Vec<Engine>,
    max_pages: u32,
) -> Result<QueryPlan, QueryError> {
    let queries = bindings
        .iter()
        .map(|b| render_with(template, b))
        .collect::<Result<Vec<_>, _>>()?;
    QueryPlan::new(queries, engines, max_pages)
}

/// Reads a bindings file: CSV whose header names the placeholders, one
/// binding map per row.
pub fn parse_bindings<R: Read>(source: R) -> Result<Vec<BTreeMap<String, String>>, QueryError> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| QueryError::Bindings(e.to_string()))?
        .clone();
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| QueryError::Bindings(e.to_string()))?;
            Ok(headers
                .iter()
                .zip(r.iter())
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Keyword {
    pub en: String,
    pub th: String,
}

/// Thai search vocabulary grouped by purpose (`id_terms`, `name_prefixes`,
/// ...). Loaded from TOML; see `data/keywords.toml`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordCatalog {
    #[serde(flatten)]
    pub groups: BTreeMap<String, Vec<Keyword>>,
}

const BUNDLED_KEYWORDS: &str = include_str!("../../data/keywords.toml");

impl KeywordCatalog {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_KEYWORDS).expect("bundled keyword catalog is valid")
    }

    pub fn parse(text: &str) -> Result<Self, QueryError> {
        toml::from_str(text).map_err(|e| QueryError::Catalog(e.to_string()))
    }

    /// Thai terms of one group, each rendered as a quoted phrase.
    pub fn quoted(&self, group: &str) -> Vec<String> {
        self.groups
            .get(group)
            .map(|ks| ks.iter().map(|k| format!("\"{}\"", k.th)).collect())
            .unwrap_or_default()
    }
}
