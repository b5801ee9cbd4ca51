//! Deterministic synthetic corpora with known ground truth.
//!
//! A generated directory holds `index.json` (fixture provider index),
//! `plan.json`, `extractors.toml`, `truth.json` and the documents under
//! `docs/`. PDF and XLSX documents are plain text with a stub header and
//! are read by an external `cat {input}` extractor, which stands in for a
//! real converter.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nidscan_core::query::render;
use nidscan_core::{compute_checksum, generate_valid_id, Engine, FileType, GeoRegistry, QueryExpr, QueryPlan};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::provider::{FixtureIndex, FixtureObject, FixtureResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocFormat {
    Txt,
    Csv,
    Html,
    Pdf,
    Xlsx,
}

impl DocFormat {
    pub const ALL: [DocFormat; 5] = [
        DocFormat::Xlsx,
        DocFormat::Pdf,
        DocFormat::Csv,
        DocFormat::Txt,
        DocFormat::Html,
    ];

    pub fn extension(self) -> &'static str {
        match self {
            DocFormat::Txt => "txt",
            DocFormat::Csv => "csv",
            DocFormat::Html => "html",
            DocFormat::Pdf => "pdf",
            DocFormat::Xlsx => "xlsx",
        }
    }

    fn search_type(self) -> FileType {
        match self {
            DocFormat::Pdf => FileType::Pdf,
            DocFormat::Xlsx | DocFormat::Csv => FileType::Xlsx,
            DocFormat::Txt | DocFormat::Html => FileType::Xls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub queries: usize,
    pub documents: usize,
    pub ids: usize,
    pub decoys: usize,
    /// IDs that are planted in a second document as well.
    pub repeated_ids: usize,
    pub results_per_page: usize,
}

impl CorpusSpec {
    /// The small corpus shipped under `demo/`.
    pub fn demo() -> Self {
        CorpusSpec {
            seed: 2024,
            queries: 3,
            documents: 12,
            ids: 40,
            decoys: 10,
            repeated_ids: 6,
            results_per_page: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdForm {
    Contiguous,
    Hyphenated,
    Spaced,
    MixedSeparators,
    ThaiNumerals,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoyKind {
    BadChecksum,
    BadCategory,
    UnknownDistrict,
    TwelveDigits,
    FourteenDigits,
    EmbeddedInLongerRun,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoy {
    pub kind: DecoyKind,
    pub text: String,
    pub document: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedDocument {
    pub url: String,
    pub path: String,
    pub format: DocFormat,
    pub ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub spec: CorpusSpec,
    pub planted: BTreeSet<String>,
    pub decoys: Vec<Decoy>,
    pub documents: Vec<PlantedDocument>,
    /// URLs that answer 404, URLs with an unaccepted type, and the URL
    /// serving a mirror of the first document.
    pub dead_url: String,
    pub mismatch_url: String,
    pub mirror_url: String,
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub dir: PathBuf,
    pub index_path: PathBuf,
    pub plan_path: PathBuf,
    pub extractors_path: PathBuf,
    pub truth: GroundTruth,
}

const HOSTS: [&str; 10] = [
    "www.nfe.go.th",
    "cdd.go.th",
    "www.kku.ac.th",
    "baac.or.th",
    "chpao.org",
    "pokkrongnakhon.com",
    "edudev.in.th",
    "122.154.253.83",
    "www.rta.mi.th",
    "school.example.net",
];

const NAMES: [&str; 10] = [
    "Somchai Jaidee",
    "Malee Srisuk",
    "Anan Wongsa",
    "Kanya Boonmee",
    "Prasert Chaiyo",
    "Nittaya Kaewmanee",
    "Wichai Thongdee",
    "Suda Rattana",
    "สมชาย ใจดี",
    "มาลี ศรีสุข",
];

const TITLES: [&str; 4] = ["Mr.", "Mrs.", "Miss", "นาย"];

pub const EXTRACTORS_TOML: &str = r#"# Extractors for generated corpora. The pdf/xlsx stub documents are
# plain text, so `cat` stands in for a real converter.

[[extractor]]
name = "plain"
kind = "plain"
types = ["txt", "csv", "html"]

[[extractor]]
name = "csv"
kind = "csv"
types = ["csv"]

[[extractor]]
name = "html"
kind = "html"
types = ["html"]

[[extractor]]
name = "stub-converter"
kind = "external"
command = "cat {input}"
types = ["pdf", "xlsx"]
timeout_secs = 10
"#;

fn thai_digits(s: &str) -> String {
    s.chars()
        .map(|c| match c.to_digit(10) {
            Some(d) => char::from_u32(0x0E50 + d).expect("thai digit"),
            None => c,
        })
        .collect()
}

fn grouped(id: &str, seps: [char; 4]) -> String {
    format!(
        "{}{}{}{}{}{}{}{}{}",
        &id[..1],
        seps[0],
        &id[1..5],
        seps[1],
        &id[5..10],
        seps[2],
        &id[10..12],
        seps[3],
        &id[12..]
    )
}

/// Renders `id` in one of the accepted written forms.
pub fn show_id(id: &str, form: IdForm) -> String {
    match form {
        IdForm::Contiguous => id.to_string(),
        IdForm::Hyphenated => grouped(id, ['-'; 4]),
        IdForm::Spaced => grouped(id, [' '; 4]),
        IdForm::MixedSeparators => grouped(id, ['-', ' ', '-', ' ']),
        IdForm::ThaiNumerals => thai_digits(id),
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    registry: &'a GeoRegistry,
    districts: Vec<String>,
}

impl Gen<'_> {
    fn valid_id(&mut self) -> String {
        let d = self.districts[self.rng.gen_range(0..self.districts.len())].clone();
        let cat = *[1u8, 1, 1, 2, 3, 3, 4, 5, 6, 7, 8]
            .choose(&mut self.rng)
            .expect("non-empty");
        let seq: u32 = self.rng.gen_range(0..10_000_000);
        generate_valid_id(&format!("{cat}{d}"), &format!("{seq:07}"), self.registry).expect("registry district")
    }

    fn with_check(prefix: &str) -> String {
        format!("{prefix}{}", compute_checksum(prefix).expect("12 digits"))
    }

    fn decoy(&mut self, kind: DecoyKind) -> String {
        let base = self.valid_id();
        match kind {
            DecoyKind::BadChecksum => {
                let check = base.as_bytes()[12] - b'0';
                let bad = (check + self.rng.gen_range(1..10)) % 10;
                let s = format!("{}{bad}", &base[..12]);
                if self.rng.gen_bool(0.5) {
                    grouped(&s, ['-'; 4])
                } else {
                    s
                }
            }
            DecoyKind::BadCategory => {
                let cat = if self.rng.gen_bool(0.5) { '0' } else { '9' };
                Self::with_check(&format!("{cat}{}", &base[1..12]))
            }
            DecoyKind::UnknownDistrict => {
                let mut code;
                loop {
                    code = format!("{:04}", self.rng.gen_range(1000..10_000));
                    if self.registry.lookup_district(&code).is_none() {
                        break;
                    }
                }
                let s = Self::with_check(&format!("{}{code}{}", &base[..1], &base[5..12]));
                grouped(&s, ['-'; 4])
            }
            DecoyKind::TwelveDigits => base[..12].to_string(),
            DecoyKind::FourteenDigits => format!("{base}{}", self.rng.gen_range(0..10)),
            DecoyKind::EmbeddedInLongerRun => {
                format!("{}{base}{}", self.rng.gen_range(1..10), self.rng.gen_range(0..10))
            }
        }
    }

    fn name(&mut self) -> String {
        format!(
            "{} {}",
            TITLES.choose(&mut self.rng).expect("non-empty"),
            NAMES.choose(&mut self.rng).expect("non-empty")
        )
    }
}

#[derive(Default)]
struct DocContent {
    ids: Vec<(String, IdForm)>,
    decoys: Vec<String>,
}

fn render_document(format: DocFormat, content: &DocContent, g: &mut Gen<'_>) -> String {
    let mut lines: Vec<(String, String, String)> = Vec::new();
    for (id, form) in &content.ids {
        lines.push((g.name(), show_id(id, *form), "registered".to_string()));
    }
    for d in &content.decoys {
        lines.push((g.name(), "-".to_string(), format!("ref {d}")));
    }
    lines.shuffle(&mut g.rng);
    match format {
        DocFormat::Txt | DocFormat::Pdf | DocFormat::Xlsx => {
            let mut out = String::new();
            match format {
                DocFormat::Pdf => out.push_str("%PDF-stub\n"),
                DocFormat::Xlsx => out.push_str("[xlsx-stub]\n"),
                _ => {}
            }
            out.push_str("รายชื่อผู้มีสิทธิ์ / list of beneficiaries\n");
            for (n, (name, id, note)) in lines.iter().enumerate() {
                out.push_str(&format!("{}. {name} | {id} | {note}\n", n + 1));
            }
            out
        }
        DocFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["no", "name", "national_id", "note"])
                .expect("in-memory");
            for (n, (name, id, note)) in lines.iter().enumerate() {
                w.write_record([&(n + 1).to_string(), name, id, note])
                    .expect("in-memory");
            }
            String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8")
        }
        DocFormat::Html => {
            let mut out =
                String::from("<html><head><title>รายชื่อ</title><style>td{padding:2px}</style></head><body>\n<table>\n");
            out.push_str("<tr><th>No.</th><th>Name</th><th>ID</th><th>Note</th></tr>\n");
            for (n, (name, id, note)) in lines.iter().enumerate() {
                out.push_str(&format!(
                    "<tr><td>{}</td><td>{name}</td><td>{id}</td><td>{note}</td></tr>\n",
                    n + 1
                ));
            }
            out.push_str("</table>\n</body></html>\n");
            out
        }
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)
}

/// Generates a corpus into `dir`. Output is a pure function of `spec` and
/// the registry.
pub fn generate(spec: &CorpusSpec, registry: &GeoRegistry, dir: &Path) -> io::Result<GeneratedCorpus> {
    assert!(
        spec.queries > 0 && spec.documents > 0,
        "corpus needs queries and documents"
    );
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        registry,
        districts: registry.districts().map(|d| d.code.clone()).collect(),
    };

    let mut planted = BTreeSet::new();
    while planted.len() < spec.ids {
        let id = g.valid_id();
        planted.insert(id);
    }
    let mut ids: Vec<String> = planted.iter().cloned().collect();
    ids.shuffle(&mut g.rng);

    let forms = [
        IdForm::Contiguous,
        IdForm::Hyphenated,
        IdForm::Spaced,
        IdForm::MixedSeparators,
        IdForm::ThaiNumerals,
    ];
    let mut contents: Vec<DocContent> = (0..spec.documents).map(|_| DocContent::default()).collect();
    for (j, id) in ids.iter().enumerate() {
        let form = *forms.choose(&mut g.rng).expect("non-empty");
        contents[j % spec.documents].ids.push((id.clone(), form));
        if j < spec.repeated_ids && spec.documents > 1 {
            let form = *forms.choose(&mut g.rng).expect("non-empty");
            contents[(j + 1) % spec.documents].ids.push((id.clone(), form));
        }
    }

    let kinds = [
        DecoyKind::BadChecksum,
        DecoyKind::BadCategory,
        DecoyKind::UnknownDistrict,
        DecoyKind::TwelveDigits,
        DecoyKind::FourteenDigits,
        DecoyKind::EmbeddedInLongerRun,
    ];
    let mut decoys = Vec::new();
    for k in 0..spec.decoys {
        let kind = kinds[k % kinds.len()];
        let text = g.decoy(kind);
        let doc = (k * 7 + 3) % spec.documents;
        contents[doc].decoys.push(text.clone());
        decoys.push((kind, text, doc));
    }

    // Queries built from prefix dorks of the documents' formats.
    let id_term = QueryExpr::quoted("เลขประจำตัวประชาชน");
    let mut queries = Vec::new();
    let mut dorks: Vec<String> = g.districts.clone();
    dorks.shuffle(&mut g.rng);
    for q in 0..spec.queries {
        let format = DocFormat::ALL[q % DocFormat::ALL.len()];
        let dork = format!("{}-{}-", 1 + q % 8, dorks[q % dorks.len()]);
        let expr = QueryExpr::all([
            QueryExpr::FileType(format.search_type()),
            QueryExpr::quoted(dork),
            id_term.clone(),
            QueryExpr::quoted(format!("list {}", q + 1)),
        ]);
        queries.push(render(&expr).expect("fixed expression renders"));
    }

    let mut index = FixtureIndex::default();
    let mut documents = Vec::new();
    let mut per_query: Vec<Vec<String>> = vec![Vec::new(); spec.queries];
    for (i, content) in contents.iter().enumerate() {
        let format = DocFormat::ALL[i % DocFormat::ALL.len()];
        let host = HOSTS[i % HOSTS.len()];
        let ext = format.extension();
        let path = format!("docs/doc{i:03}.{ext}");
        let (url, disposition) = if i % 4 == 3 {
            (
                format!("http://{host}/download.php?file={i}"),
                Some(format!("attachment; filename=\"doc{i:03}.{ext}\"")),
            )
        } else {
            (format!("http://{host}/files/doc{i:03}.{ext}"), None)
        };
        write(&dir.join(&path), render_document(format, content, &mut g))?;
        index.objects.insert(
            url.clone(),
            FixtureObject {
                path: path.clone(),
                content_disposition: disposition,
                fail_first: (i == 1).then_some(1),
                delay_ms: None,
            },
        );
        per_query[i % spec.queries].push(url.clone());
        let mut doc_ids: Vec<String> = content.ids.iter().map(|(id, _)| id.clone()).collect();
        doc_ids.sort();
        documents.push(PlantedDocument {
            url,
            path,
            format,
            ids: doc_ids,
        });
    }

    // A mirror of the first document, a dead link and an unaccepted type.
    let mirror_url = format!(
        "https://mirror.example.com/copy/{}",
        documents[0].path.trim_start_matches("docs/")
    );
    index.objects.insert(
        mirror_url.clone(),
        FixtureObject {
            path: documents[0].path.clone(),
            ..Default::default()
        },
    );
    per_query[1 % spec.queries].push(mirror_url.clone());
    let dead_url = "https://gone.go.th/files/removed.pdf".to_string();
    per_query[0].push(dead_url.clone());
    let mismatch_url = "https://files.example.org/archive.zip".to_string();
    write(&dir.join("docs/archive.zip"), b"PK\x03\x04 not a document")?;
    index.objects.insert(
        mismatch_url.clone(),
        FixtureObject {
            path: "docs/archive.zip".into(),
            ..Default::default()
        },
    );
    per_query[(2 % spec.queries).min(spec.queries - 1)].push(mismatch_url.clone());

    let per_page = spec.results_per_page.max(1);
    for (q, urls) in per_query.iter().enumerate() {
        let results = urls
            .iter()
            .enumerate()
            .map(|(k, url)| FixtureResult {
                url: url.clone(),
                page: (k / per_page) as u32 + 1,
                rank: (k % per_page) as u32 + 1,
            })
            .collect();
        index.queries.insert(queries[q].clone(), results);
    }

    let index_path = dir.join("index.json");
    write(
        &index_path,
        serde_json::to_string_pretty(&index).expect("serialize") + "\n",
    )?;
    let plan = QueryPlan::new(queries, vec![Engine::Google], 10).expect("non-empty plan");
    let plan_path = dir.join("plan.json");
    write(
        &plan_path,
        serde_json::to_string_pretty(&plan).expect("serialize") + "\n",
    )?;
    let extractors_path = dir.join("extractors.toml");
    write(&extractors_path, EXTRACTORS_TOML)?;

    let truth = GroundTruth {
        spec: spec.clone(),
        planted,
        decoys: decoys
            .into_iter()
            .map(|(kind, text, doc)| Decoy {
                kind,
                text,
                document: documents[doc].url.clone(),
            })
            .collect(),
        documents,
        dead_url,
        mismatch_url,
        mirror_url,
    };
    write(
        &dir.join("truth.json"),
        serde_json::to_string_pretty(&truth).expect("serialize") + "\n",
    )?;

    Ok(GeneratedCorpus {
        dir: dir.to_path_buf(),
        index_path,
        plan_path,
        extractors_path,
        truth,
    })
}
