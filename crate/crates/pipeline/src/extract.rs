//! Text extraction: several extractors per file type, merged by line.
//!
//! Configuration is TOML:
//!
//! ```toml
//! [[extractor]]
//! name = "pdftotext"
//! kind = "external"            # plain | csv | html | external
//! command = "pdftotext -layout {input} -"
//! types = ["pdf"]
//! timeout_secs = 60
//! ```

use std::collections::{BTreeSet, HashSet};
use std::io::{Read, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Builtin {
    Plain,
    Csv,
    Html,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractorKind {
    Builtin(Builtin),
    /// Command template; `{input}` is replaced with the staged file path.
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorSpec {
    pub name: String,
    pub kind: ExtractorKind,
    pub types: BTreeSet<String>,
    pub timeout: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("extractor config: {0}")]
    Parse(String),
    #[error("extractor {0}: {1}")]
    Invalid(String, String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    kind: String,
    command: Option<String>,
    types: Vec<String>,
    timeout_secs: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    extractor: Vec<RawSpec>,
}

const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

impl ExtractorSpec {
    pub fn builtin(name: &str, kind: Builtin, types: &[&str]) -> Self {
        ExtractorSpec {
            name: name.to_string(),
            kind: ExtractorKind::Builtin(kind),
            types: types.iter().map(|t| t.to_string()).collect(),
            timeout: DEFAULT_TIMEOUT,
        }
    }

    pub fn external(name: &str, command: &str, types: &[&str], timeout: Duration) -> Result<Self, ConfigError> {
        let spec = ExtractorSpec {
            name: name.to_string(),
            kind: ExtractorKind::External(command.to_string()),
            types: types.iter().map(|t| t.to_string()).collect(),
            timeout,
        };
        spec.check()?;
        Ok(spec)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: &str| Err(ConfigError::Invalid(self.name.clone(), m.to_string()));
        if self.types.is_empty() {
            return invalid("types is empty");
        }
        if self.timeout.is_zero() {
            return invalid("timeout must be positive");
        }
        if let ExtractorKind::External(cmd) = &self.kind {
            let Some(args) = shlex::split(cmd) else {
                return invalid("command has unbalanced quotes");
            };
            if args.is_empty() {
                return invalid("command is empty");
            }
            if !args.iter().any(|a| a.contains("{input}")) {
                return invalid("command has no {input} placeholder");
            }
        }
        Ok(())
    }

    pub fn applies_to(&self, file_type: &str) -> bool {
        self.types.contains(&file_type.to_ascii_lowercase())
    }
}

/// Built-ins for txt, csv and html. Plain text also runs on csv and html
/// so the merged text keeps anything the structured readers drop.
pub fn default_extractors() -> Vec<ExtractorSpec> {
    vec![
        ExtractorSpec::builtin("plain", Builtin::Plain, &["txt", "csv", "html", "htm"]),
        ExtractorSpec::builtin("csv", Builtin::Csv, &["csv"]),
        ExtractorSpec::builtin("html", Builtin::Html, &["html", "htm"]),
    ]
}

/// Parses an extractor config file.
pub fn parse_config(text: &str) -> Result<Vec<ExtractorSpec>, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut names = HashSet::new();
    raw.extractor
        .into_iter()
        .map(|r| {
            let kind = match (r.kind.as_str(), r.command) {
                ("plain", None) => ExtractorKind::Builtin(Builtin::Plain),
                ("csv", None) => ExtractorKind::Builtin(Builtin::Csv),
                ("html", None) => ExtractorKind::Builtin(Builtin::Html),
                ("external", Some(cmd)) => ExtractorKind::External(cmd),
                ("external", None) => {
                    return Err(ConfigError::Invalid(
                        r.name,
                        "external extractors need a command".into(),
                    ))
                }
                (k @ ("plain" | "csv" | "html"), Some(_)) => {
                    return Err(ConfigError::Invalid(r.name, format!("builtin {k} takes no command")))
                }
                (k, _) => return Err(ConfigError::Invalid(r.name, format!("unknown kind {k:?}"))),
            };
            if !names.insert(r.name.clone()) {
                return Err(ConfigError::Invalid(r.name, "duplicate name".into()));
            }
            let spec = ExtractorSpec {
                name: r.name,
                kind,
                types: r.types.iter().map(|t| t.to_ascii_lowercase()).collect(),
                timeout: r.timeout_secs.map_or(DEFAULT_TIMEOUT, Duration::from_secs),
            };
            spec.check()?;
            Ok(spec)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub extractor: String,
    pub text: String,
    /// Output was not valid UTF-8 and was repaired lossily.
    pub lossy: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorFailure {
    pub extractor: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedText {
    pub object_digest: String,
    pub segments: Vec<Segment>,
    pub failures: Vec<ExtractorFailure>,
    pub merged: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("no extractor handles type {0:?}")]
    Unsupported(String),
    #[error("every extractor failed: {}", summarize(.0))]
    AllFailed(Vec<ExtractorFailure>),
}

fn summarize(failures: &[ExtractorFailure]) -> String {
    failures
        .iter()
        .map(|f| format!("{}: {}", f.extractor, f.reason))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Line-level union of the segments in first-seen order. Blank lines are
/// dropped.
pub fn merge_lines<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut seen = HashSet::new();
    let mut out: Vec<&str> = Vec::new();
    for text in texts {
        for line in text.lines() {
            if !line.is_empty() && seen.insert(line) {
                out.push(line);
            }
        }
    }
    out.join("\n")
}

/// Runs every extractor that handles `declared_type`, in order.
pub fn extract_text(
    bytes: &[u8],
    declared_type: &str,
    object_digest: &str,
    extractors: &[ExtractorSpec],
) -> Result<ExtractedText, ExtractError> {
    let applicable: Vec<&ExtractorSpec> = extractors.iter().filter(|e| e.applies_to(declared_type)).collect();
    if applicable.is_empty() {
        return Err(ExtractError::Unsupported(declared_type.to_string()));
    }
    let mut segments = Vec::new();
    let mut failures = Vec::new();
    for spec in applicable {
        let result = match &spec.kind {
            ExtractorKind::Builtin(b) => Ok(run_builtin(b, bytes)),
            ExtractorKind::External(cmd) => run_external(cmd, bytes, declared_type, spec.timeout),
        };
        match result {
            Ok((text, lossy)) => segments.push(Segment {
                extractor: spec.name.clone(),
                text,
                lossy,
            }),
            Err(reason) => failures.push(ExtractorFailure {
                extractor: spec.name.clone(),
                reason,
            }),
        }
    }
    if segments.is_empty() {
        return Err(ExtractError::AllFailed(failures));
    }
    let merged = merge_lines(segments.iter().map(|s| s.text.as_str()));
    Ok(ExtractedText {
        object_digest: object_digest.to_string(),
        segments,
        failures,
        merged,
    })
}

fn lossy(bytes: &[u8]) -> (String, bool) {
    match std::str::from_utf8(bytes) {
        Ok(s) => (s.to_string(), false),
        Err(_) => (String::from_utf8_lossy(bytes).into_owned(), true),
    }
}

fn run_builtin(kind: &Builtin, bytes: &[u8]) -> (String, bool) {
    match kind {
        Builtin::Plain => lossy(bytes),
        Builtin::Csv => csv_cells(bytes),
        Builtin::Html => {
            let (text, flag) = lossy(bytes);
            (html_text(&text), flag)
        }
    }
}

/// One cell per line, row-major. Unparsable tails are kept as plain text.
fn csv_cells(bytes: &[u8]) -> (String, bool) {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(bytes);
    let mut lines = Vec::new();
    let mut any_lossy = false;
    let mut record = csv::ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut record) {
            Ok(true) => {
                for cell in record.iter() {
                    let (s, l) = lossy(cell);
                    any_lossy |= l;
                    let s = s.trim();
                    if !s.is_empty() {
                        lines.push(s.to_string());
                    }
                }
            }
            Ok(false) => break,
            Err(_) => {
                let offset = reader.position().byte() as usize;
                let (rest, l) = lossy(&bytes[offset.min(bytes.len())..]);
                any_lossy |= l;
                lines.extend(rest.lines().map(str::to_string));
                break;
            }
        }
    }
    (lines.join("\n"), any_lossy)
}

const BLOCK_TAGS: [&str; 24] = [
    "address", "article", "br", "caption", "dd", "div", "dl", "dt", "footer", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "li", "p", "section", "table", "td", "th", "tr",
];

fn decode_entity(name: &str) -> Option<char> {
    if let Some(num) = name.strip_prefix('#') {
        let code = match num.strip_prefix(['x', 'X']) {
            Some(hex) => u32::from_str_radix(hex, 16).ok()?,
            None => num.parse().ok()?,
        };
        return char::from_u32(code);
    }
    Some(match name {
        "amp" => '&',
        "lt" => '<',
        "gt" => '>',
        "quot" => '"',
        "apos" => '\'',
        "nbsp" => ' ',
        _ => return None,
    })
}

/// Strips markup: drops `script`/`style` bodies and comments, turns block
/// tags into line breaks, removes inline tags and decodes entities.
pub fn html_text(html: &str) -> String {
    let mut out = String::with_capacity(html.len());
    let lower = html.to_ascii_lowercase();
    let mut i = 0;
    while i < html.len() {
        let rest = &html[i..];
        if rest.starts_with("<!--") {
            i += rest.find("-->").map_or(rest.len(), |e| e + 3);
            continue;
        }
        if rest.starts_with('<') {
            let close_at = rest.find('>');
            let end = close_at.map_or(rest.len(), |e| e + 1);
            let tag = &lower[i + 1..i + close_at.unwrap_or(rest.len())];
            let name: String = tag
                .trim_start_matches('/')
                .chars()
                .take_while(|c| c.is_ascii_alphanumeric())
                .collect();
            i += end;
            if !tag.starts_with('/') && (name == "script" || name == "style") {
                let close = format!("</{name}");
                i = lower[i..].find(&close).map_or(html.len(), |p| {
                    let after = i + p;
                    after + lower[after..].find('>').map_or(lower.len() - after, |e| e + 1)
                });
                continue;
            }
            if BLOCK_TAGS.contains(&name.as_str()) {
                out.push('\n');
            }
            continue;
        }
        if rest.starts_with('&') {
            if let Some(semi) = rest.bytes().take(12).position(|b| b == b';') {
                if let Some(c) = decode_entity(&rest[1..semi]) {
                    out.push(c);
                    i += semi + 1;
                    continue;
                }
            }
        }
        let c = rest.chars().next().expect("non-empty");
        out.push(c);
        i += c.len_utf8();
    }
    out.lines()
        .map(|l| l.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Stages `bytes` to a temp file named with `file_type`, runs the command
/// with `{input}` substituted and returns its stdout.
pub fn run_external(command: &str, bytes: &[u8], file_type: &str, timeout: Duration) -> Result<(String, bool), String> {
    let mut staged = tempfile::Builder::new()
        .prefix("nidscan-")
        .suffix(&format!(".{file_type}"))
        .tempfile()
        .map_err(|e| format!("staging: {e}"))?;
    staged.write_all(bytes).map_err(|e| format!("staging: {e}"))?;
    staged.flush().map_err(|e| format!("staging: {e}"))?;
    run_command(command, staged.path(), timeout)
}

fn run_command(command: &str, input: &Path, timeout: Duration) -> Result<(String, bool), String> {
    let input = input.to_string_lossy();
    let args: Vec<String> = shlex::split(command)
        .ok_or("command has unbalanced quotes")?
        .into_iter()
        .map(|a| a.replace("{input}", &input))
        .collect();
    let (program, rest) = args.split_first().ok_or("empty command")?;
    let mut child = Command::new(program)
        .args(rest)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| format!("spawn {program}: {e}"))?;

    let mut stdout = child.stdout.take().expect("piped stdout");
    let mut stderr = child.stderr.take().expect("piped stderr");
    let out_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stdout.read_to_end(&mut buf);
        buf
    });
    let err_reader = std::thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let status = match child.wait_timeout(timeout).map_err(|e| format!("wait: {e}"))? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(format!("timeout after {}s", timeout.as_secs_f64()));
        }
    };
    let out = out_reader.join().unwrap_or_default();
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        let diag = String::from_utf8_lossy(&err);
        let diag: String = diag.trim().chars().take(500).collect();
        return Err(format!("exit {status}: {diag}"));
    }
    Ok(lossy(&out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_file() {
        let t = extract_text(b"1-1001-23456-78-9\n", "txt", "d", &default_extractors()).unwrap();
        assert_eq!(t.segments.len(), 1);
        assert_eq!(t.merged, "1-1001-23456-78-9");
    }

    #[test]
    fn csv_cells_row_major() {
        let src = "name,id\nSomchai,1100100000011\n\"Malee, K\",3100100000012\n";
        let (text, lossy) = csv_cells(src.as_bytes());
        assert!(!lossy);
        assert_eq!(text, "name\nid\nSomchai\n1100100000011\nMalee, K\n3100100000012");
        let t = extract_text(src.as_bytes(), "csv", "d", &default_extractors()).unwrap();
        // The raw row and the split cell are different lines, so both survive the union.
        assert!(t.merged.lines().any(|l| l == "Somchai,1100100000011"));
        assert!(t.merged.lines().any(|l| l == "1100100000011"));
    }

    #[test]
    fn union_in_first_seen_order() {
        assert_eq!(merge_lines(["a\nb\nc", "b\nd\na"]), "a\nb\nc\nd");
        assert_eq!(merge_lines(["", "x"]), "x");
    }

    #[test]
    fn html_stripping() {
        let html = "<html><head><style>td{color:red}</style><script>var id='1100100000011';</script></head>\
            <body><!-- 3100100000012 --><table><tr><td>Mr.&nbsp;A</td><td><b>1</b>100100000029</td></tr></table>\
            <p>a &amp; b &#x41;&#66;</p></body></html>";
        assert_eq!(html_text(html), "Mr. A\n1100100000029\na & b AB");
    }

    #[test]
    fn html_edge_cases() {
        assert_eq!(html_text("a < b"), "a");
        assert_eq!(html_text("x &bogus; y"), "x &bogus; y");
        assert_eq!(html_text("<SCRIPT>hidden</SCRIPT>shown"), "shown");
        assert_eq!(html_text("<script>never closed"), "");
        assert_eq!(html_text("ก<ข"), "ก");
        assert_eq!(html_text("&ก;ข"), "&ก;ข");
    }

    #[test]
    fn unsupported_type() {
        assert_eq!(
            extract_text(b"x", "pdf", "d", &default_extractors()),
            Err(ExtractError::Unsupported("pdf".into()))
        );
    }

    #[test]
    fn config_parsing() {
        let cfg = r#"
            [[extractor]]
            name = "plain"
            kind = "plain"
            types = ["txt"]

            [[extractor]]
            name = "stub"
            kind = "external"
            command = "cat {input}"
            types = ["PDF", "xlsx"]
            timeout_secs = 5
        "#;
        let specs = parse_config(cfg).unwrap();
        assert_eq!(specs.len(), 2);
        assert!(specs[1].applies_to("pdf"));
        assert_eq!(specs[1].timeout, Duration::from_secs(5));

        for bad in [
            "[[extractor]]\nname='x'\nkind='external'\ncommand='cat'\ntypes=['pdf']",
            "[[extractor]]\nname='x'\nkind='external'\ntypes=['pdf']",
            "[[extractor]]\nname='x'\nkind='plain'\ntypes=[]",
            "[[extractor]]\nname='x'\nkind='ocr'\ntypes=['pdf']",
            "[[extractor]]\nname='x'\nkind='plain'\ntypes=['a']\n[[extractor]]\nname='x'\nkind='csv'\ntypes=['b']",
            "[[extractor]]\nname='x'\nkind='plain'\ntypes=['a']\nbogus=1",
        ] {
            assert!(parse_config(bad).is_err(), "{bad}");
        }
    }
}
