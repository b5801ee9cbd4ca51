use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use super::{AggregateRow, AggregateTable, Column, Dimension};
use crate::id::{checksum_valid, find_candidates, pseudonymize, IdError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("redaction: {0}")]
    Redaction(#[from] IdError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "md",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format {s:?} (expected csv, json or markdown)")),
        }
    }
}

/// Proof that the operator asked for unredacted output. Only obtainable
/// through [`UnsafeAck::i_accept_risk`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnsafeAck(());

impl UnsafeAck {
    pub fn i_accept_risk() -> Self {
        UnsafeAck(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Redaction {
    /// Replace every ID with its keyed pseudonym.
    Pseudonymize {
        salt: Vec<u8>,
    },
    Off(UnsafeAck),
}

/// Replaces every checksum-valid ID candidate in `text` with its pseudonym.
pub fn scrub_text(text: &str, salt: &[u8]) -> Result<String, IdError> {
    let mut out = text.to_string();
    for cand in find_candidates(text).into_iter().rev() {
        if checksum_valid(&cand.normalized) {
            let token = pseudonymize(&cand.normalized, salt)?;
            out.replace_range(cand.source_span, &token.token);
        }
    }
    Ok(out)
}

/// Pseudonymizes ID keys and scrubs every text cell.
pub fn redact_table(table: &AggregateTable, salt: &[u8]) -> Result<AggregateTable, IdError> {
    if salt.is_empty() {
        return Err(IdError::EmptySalt);
    }
    let mut t = table.clone();
    t.name = scrub_text(&t.name, salt)?;
    t.title = scrub_text(&t.title, salt)?;
    for row in &mut t.rows {
        if t.dimension == Dimension::NationalId && row.key.len() == 13 {
            row.key = pseudonymize(&row.key, salt)?.token;
        }
        row.key = scrub_text(&row.key, salt)?;
        if let Some(label) = &row.label {
            row.label = Some(scrub_text(label, salt)?);
        }
    }
    Ok(t)
}

fn cell(row: &AggregateRow, col: Column) -> String {
    match col {
        Column::Key => row.key.clone(),
        Column::Label => row.label.clone().unwrap_or_default(),
        Column::Urls => row.urls.to_string(),
        Column::Files => row.files.to_string(),
        Column::Fqdns => row.fqdns.to_string(),
        Column::RegisteredDomains => row.registered_domains.to_string(),
        Column::UniqueIds => row.unique_ids.to_string(),
        Column::Population => row.population.map(|p| p.to_string()).unwrap_or_default(),
        Column::Percent => row.percent.map(|p| p.to_string()).unwrap_or_default(),
    }
}

fn render_csv(table: &AggregateTable) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(table.columns.iter().map(|c| c.as_str()))
        .expect("in-memory write");
    for row in &table.rows {
        w.write_record(table.columns.iter().map(|&c| cell(row, c)))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

fn md_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('|', "\\|").replace('\n', " ")
}

fn render_markdown(table: &AggregateTable) -> String {
    let mut out = format!("# {}\n\n", md_escape(&table.title));
    let headers: Vec<String> = table
        .columns
        .iter()
        .map(|c| md_escape(c.title(table.dimension)))
        .collect();
    let _ = writeln!(out, "| {} |", headers.join(" | "));
    let rule: Vec<&str> = table
        .columns
        .iter()
        .map(|c| match c {
            Column::Key | Column::Label => "---",
            _ => "---:",
        })
        .collect();
    let _ = writeln!(out, "| {} |", rule.join(" | "));
    for row in &table.rows {
        let cells: Vec<String> = table.columns.iter().map(|&c| md_escape(&cell(row, c))).collect();
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}

/// Renders one table. Output depends only on the table contents; integers
/// are printed without separators and percents at their stored precision.
pub fn render_table(table: &AggregateTable, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(table),
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(table).expect("tables serialize");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => render_markdown(table),
    }
}

/// Writes each table to `<dir>/<name>.<ext>` and returns the paths.
pub fn emit_report(
    tables: &[AggregateTable],
    dir: &Path,
    format: ReportFormat,
    redaction: &Redaction,
) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::with_capacity(tables.len());
    for table in tables {
        let table = match redaction {
            Redaction::Pseudonymize { salt } => redact_table(table, salt)?,
            Redaction::Off(_) => table.clone(),
        };
        let path = dir.join(format!("{}.{}", table.name, format.extension()));
        fs::write(&path, render_table(&table, format)).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        paths.push(path);
    }
    Ok(paths)
}
