//! Advanced-search query construction.
//!
//! [`QueryExpr`] is a small algebra over the operators most engines share:
//! quoted phrases, exclusion, `filetype:`, `site:`, `AND`, `OR` and
//! parentheses. Rendering is deterministic so that a rendered string can be
//! used as a stable key for provenance and analytics.
//!
//! Two conjunctions exist on purpose. [`QueryExpr::All`] is the implicit
//! space-separated form engines apply by default; [`QueryExpr::And`] emits
//! the explicit `AND` token. Real dorks mix both.

mod parse;
mod plan;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use parse::{parse_template, parse_templates, tokenize, Token, BUNDLED_TEMPLATES};
pub use plan::{build_plan, parse_bindings, prefix_dorks, Keyword, KeywordCatalog, QueryPlan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("{0} node has no children")]
    EmptyNode(&'static str),
    #[error("placeholder {{{0}}} is not bound")]
    UnboundPlaceholder(String),
    #[error("phrase {0:?} contains a double quote")]
    UnquotablePhrase(String),
    #[error("site operand {0:?} is empty or contains whitespace, quotes or parentheses")]
    BadSite(String),
    #[error("unsupported file type {0:?} (expected pdf, xls, xlsx, doc or docx)")]
    UnsupportedFileType(String),
    #[error("unknown search engine {0:?}")]
    UnknownEngine(String),
    #[error("category digit {0} is outside 1-8")]
    BadCategory(u8),
    #[error("a query plan needs at least one query")]
    NoQueries,
    #[error("a query plan needs at least one engine")]
    NoEngines,
    #[error("max_pages must be at least 1")]
    ZeroPages,
    #[error("template syntax: {0}")]
    Syntax(String),
    #[error("bindings: {0}")]
    Bindings(String),
    #[error("keyword catalog: {0}")]
    Catalog(String),
}

/// File types the `filetype:` operator is allowed to target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileType {
    Pdf,
    Xls,
    Xlsx,
    Doc,
    Docx,
}

impl FileType {
    pub const ALL: [FileType; 5] = [
        FileType::Pdf,
        FileType::Xls,
        FileType::Xlsx,
        FileType::Doc,
        FileType::Docx,
    ];

    pub fn extension(self) -> &'static str {
        match self {
            FileType::Pdf => "pdf",
            FileType::Xls => "xls",
            FileType::Xlsx => "xlsx",
            FileType::Doc => "doc",
            FileType::Docx => "docx",
        }
    }
}

impl FromStr for FileType {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FileType::ALL
            .into_iter()
            .find(|t| t.extension() == s.to_ascii_lowercase())
            .ok_or_else(|| QueryError::UnsupportedFileType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Google,
    Bing,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Google => "google",
            Engine::Bing => "bing",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = QueryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "google" => Ok(Engine::Google),
            "bing" => Ok(Engine::Bing),
            _ => Err(QueryError::UnknownEngine(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryExpr {
    Phrase {
        text: String,
        quoted: bool,
    },
    Exclude(String),
    FileType(FileType),
    Site(String),
    /// Substituted verbatim by [`build_plan`].
    Placeholder(String),
    /// Implicit conjunction: children separated by spaces.
    All(Vec<QueryExpr>),
    And(Vec<QueryExpr>),
    Or(Vec<QueryExpr>),
    Group(Box<QueryExpr>),
}

impl QueryExpr {
    pub fn quoted(text: impl Into<String>) -> Self {
        QueryExpr::Phrase {
            text: text.into(),
            quoted: true,
        }
    }

    pub fn word(text: impl Into<String>) -> Self {
        QueryExpr::Phrase {
            text: text.into(),
            quoted: false,
        }
    }

    pub fn exclude(term: impl Into<String>) -> Self {
        QueryExpr::Exclude(term.into())
    }

    pub fn site(suffix: impl Into<String>) -> Self {
        QueryExpr::Site(suffix.into())
    }

    pub fn placeholder(name: impl Into<String>) -> Self {
        QueryExpr::Placeholder(name.into())
    }

    pub fn all(children: impl IntoIterator<Item = QueryExpr>) -> Self {
        QueryExpr::All(children.into_iter().collect())
    }

    pub fn and(children: impl IntoIterator<Item = QueryExpr>) -> Self {
        QueryExpr::And(children.into_iter().collect())
    }

    pub fn or(children: impl IntoIterator<Item = QueryExpr>) -> Self {
        QueryExpr::Or(children.into_iter().collect())
    }

    pub fn group(inner: QueryExpr) -> Self {
        QueryExpr::Group(Box::new(inner))
    }

    /// Names of all placeholders, in first-seen order.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit_placeholders(&mut out);
        out
    }

    fn visit_placeholders<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            QueryExpr::Placeholder(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            QueryExpr::All(c) | QueryExpr::And(c) | QueryExpr::Or(c) => {
                c.iter().for_each(|e| e.visit_placeholders(out))
            }
            QueryExpr::Group(inner) => inner.visit_placeholders(out),
            _ => {}
        }
    }
}

/// Renders `expr` into engine query syntax. Placeholders are an error.
pub fn render(expr: &QueryExpr) -> Result<String, QueryError> {
    let mut out = String::new();
    write_expr(expr, &Placeholders::Reject, &mut out)?;
    Ok(out)
}

/// Renders with placeholders substituted from `bindings`.
pub fn render_with(expr: &QueryExpr, bindings: &BTreeMap<String, String>) -> Result<String, QueryError> {
    let mut out = String::new();
    write_expr(expr, &Placeholders::Bind(bindings), &mut out)?;
    Ok(out)
}

/// Renders with placeholders kept as `{name}`, the template file syntax.
pub fn render_template(expr: &QueryExpr) -> Result<String, QueryError> {
    let mut out = String::new();
    write_expr(expr, &Placeholders::Keep, &mut out)?;
    Ok(out)
}

enum Placeholders<'a> {
    Reject,
    Keep,
    Bind(&'a BTreeMap<String, String>),
}

/// Bare words that would be read back as something other than a phrase.
fn needs_quotes(text: &str) -> bool {
    text.is_empty()
        || text == "AND"
        || text == "OR"
        || text.starts_with('-')
        || text.starts_with('{')
        || text.contains(':')
        || text.chars().any(|c| c.is_whitespace() || c == '(' || c == ')')
}

fn write_quoted(text: &str, out: &mut String) -> Result<(), QueryError> {
    if text.contains('"') {
        return Err(QueryError::UnquotablePhrase(text.to_string()));
    }
    out.push('"');
    out.push_str(text);
    out.push('"');
    Ok(())
}

fn write_joined(
    kind: &'static str,
    children: &[QueryExpr],
    sep: &str,
    ph: &Placeholders<'_>,
    out: &mut String,
) -> Result<(), QueryError> {
    if children.is_empty() {
        return Err(QueryError::EmptyNode(kind));
    }
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        write_expr(child, ph, out)?;
    }
    Ok(())
}

fn write_expr(expr: &QueryExpr, ph: &Placeholders<'_>, out: &mut String) -> Result<(), QueryError> {
    match expr {
        QueryExpr::Phrase { text, quoted } => {
            if *quoted || needs_quotes(text) {
                write_quoted(text, out)?;
            } else {
                if text.contains('"') {
                    return Err(QueryError::UnquotablePhrase(text.clone()));
                }
                out.push_str(text);
            }
        }
        QueryExpr::Exclude(term) => {
            out.push('-');
            if needs_quotes(term) {
                write_quoted(term, out)?;
            } else {
                if term.contains('"') {
                    return Err(QueryError::UnquotablePhrase(term.clone()));
                }
                out.push_str(term);
            }
        }
        QueryExpr::FileType(t) => {
            out.push_str("filetype:");
            out.push_str(t.extension());
        }
        QueryExpr::Site(suffix) => {
            if suffix.is_empty()
                || suffix
                    .chars()
                    .any(|c| c.is_whitespace() || matches!(c, '"' | '(' | ')'))
            {
                return Err(QueryError::BadSite(suffix.clone()));
            }
            out.push_str("site:");
            out.push_str(suffix);
        }
        QueryExpr::Placeholder(name) => match ph {
            Placeholders::Reject => return Err(QueryError::UnboundPlaceholder(name.clone())),
            Placeholders::Keep => {
                out.push('{');
                out.push_str(name);
                out.push('}');
            }
            Placeholders::Bind(map) => match map.get(name) {
                Some(v) => out.push_str(v),
                None => return Err(QueryError::UnboundPlaceholder(name.clone())),
            },
        },
        QueryExpr::All(c) => write_joined("implicit conjunction", c, " ", ph, out)?,
        QueryExpr::And(c) => write_joined("AND", c, " AND ", ph, out)?,
        QueryExpr::Or(c) => write_joined("OR", c, " OR ", ph, out)?,
        QueryExpr::Group(inner) => {
            out.push('(');
            write_expr(inner, ph, out)?;
            out.push(')');
        }
    }
    Ok(())
}
