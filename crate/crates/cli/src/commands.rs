use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use log::info;
use nidscan_core::analytics::{page_histogram, Redaction, SuffixList, TagMap, UnsafeAck};
use nidscan_core::query::{
    build_plan, parse_bindings, parse_template, parse_templates, prefix_dorks, BUNDLED_TEMPLATES,
};
use nidscan_core::{
    aggregate, decode, diagnostics_table, emit_report, find_candidates, generate_valid_id, geographic_report,
    repeat_exposure, validate, Dimension, Engine, GeoRegistry, QueryExpr, QueryPlan, ReportFormat, Stage, Verdict,
};
use nidscan_pipeline::clock::{Clock, SystemClock, VirtualClock};
use nidscan_pipeline::extract::{default_extractors, extract_text, parse_config, ExtractorSpec};
use nidscan_pipeline::fetch::Fetcher;
use nidscan_pipeline::fixture::{generate, CorpusSpec};
use nidscan_pipeline::provider::{FixtureIndex, HttpProviderConfig, SearchProvider};
use nidscan_pipeline::scan::{exposure_records, run_scan, ScanConfig};
use nidscan_pipeline::store::digest_hex;
use nidscan_pipeline::{FixtureFetcher, FixtureProvider, HttpFetcher, HttpSearchProvider, Store, StoreLock};

use crate::settings::{crawl_toml, registry, resolve_crawl, FileConfig};
use crate::{
    Cli, Command, ConfigCommand, ExtractCommand, FixtureArgs, FixtureCommand, IdCommand, Outcome, PlanBuildArgs,
    PlanCommand, ReportArgs, ScanCommand, ScanRunArgs,
};

pub const DEFAULT_STORE: &str = "nidscan.db";
pub const DEFAULT_TABLES: [&str; 4] = ["filetype", "tld", "geo", "repeat"];

/// Report table names accepted by `--tables`.
pub const TABLES: [(&str, &str); 15] = [
    ("filetype", "unique IDs per declared file type"),
    ("family", "unique IDs per file family (spreadsheet, pdf, word, ...)"),
    ("tld", "unique IDs per TLD class"),
    ("domain", "unique IDs per registered domain, with owner tags"),
    ("owner", "unique IDs per owner tag"),
    ("query", "unique IDs per search query"),
    ("engine", "unique IDs per search engine"),
    ("category", "unique IDs per category digit"),
    ("page", "unique IDs per search result page"),
    ("ids", "every exposed ID (pseudonymized unless unredacted)"),
    ("geo", "unique IDs and per-capita rate per province"),
    ("district", "unique IDs and per-capita rate per district"),
    ("repeat", "IDs by number of distinct source URLs"),
    ("diagnostics", "URLs that could not be classified"),
    ("hits", "all search hits per result page, with or without findings"),
];

pub fn run(cli: &Cli) -> Result<Outcome> {
    let file = FileConfig::load_opt(cli.config.as_deref())?;
    match &cli.command {
        Command::Id(cmd) => id(cmd, &registry(cli.registry.as_deref(), &file)?),
        Command::Plan(cmd) => plan(cmd, cli, &file),
        Command::Scan(ScanCommand::Run(args)) => scan(args, cli, &file),
        Command::Extract(ExtractCommand::File {
            path,
            file_type,
            extractors,
        }) => extract(path, file_type.as_deref(), extractors.as_deref(), &file),
        Command::Report(args) => report(args, cli, &file),
        Command::Fixture(FixtureCommand::Generate(args)) => fixture(args, cli, &file),
        Command::Config(ConfigCommand::Show { crawl }) => {
            print!("{}", crawl_toml(&resolve_crawl(crawl, &file.crawl)?));
            Ok(Outcome::Success)
        }
    }
}

fn stage_word(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "not run",
    }
}

fn id(cmd: &IdCommand, reg: &GeoRegistry) -> Result<Outcome> {
    match cmd {
        IdCommand::Validate { number, json } => {
            // Grouped and Thai-numeral forms are accepted when the whole
            // input is one candidate.
            let input = number.trim();
            let number = match find_candidates(input).as_slice() {
                [c] if c.raw_text == input => c.normalized.clone(),
                _ => input.to_string(),
            };
            let number = &number;
            let outcome = validate(number, reg);
            let decoded = decode(number, reg).ok();
            if *json {
                let v =
                    serde_json::json!({ "input": input, "normalized": number, "outcome": outcome, "decoded": decoded });
                println!("{}", serde_json::to_string_pretty(&v)?);
            } else {
                for stage in Stage::ALL {
                    println!("{:<9}{}", stage.as_str(), stage_word(outcome.stage(stage)));
                }
                match (&outcome.verdict, &decoded) {
                    (Verdict::Accepted, Some(d)) => {
                        println!("verdict  accepted");
                        println!("category {} ({})", d.category, d.category_description());
                        println!("district {} / {}", d.district_name, d.province_name);
                        println!("codes    province {} district {}", d.province_code, d.district_code);
                        println!("sequence {}", d.sequence);
                        println!("check    {}", d.check_digit);
                    }
                    (Verdict::Rejected(stage), _) => println!("verdict  rejected at {stage}"),
                    (Verdict::Accepted, None) => unreachable!("accepted ids decode"),
                }
            }
            Ok(if outcome.is_accepted() {
                Outcome::Success
            } else {
                Outcome::Negative
            })
        }
        IdCommand::Generate {
            prefix,
            sequence,
            count,
        } => {
            let start: u32 = sequence
                .parse()
                .ok()
                .filter(|_| sequence.len() == 7)
                .ok_or_else(|| anyhow!("--sequence must be 7 digits"))?;
            for i in 0..*count {
                let seq = start
                    .checked_add(i)
                    .filter(|s| *s < 10_000_000)
                    .ok_or_else(|| anyhow!("sequence overflow"))?;
                println!("{}", generate_valid_id(prefix, &format!("{seq:07}"), reg)?);
            }
            Ok(Outcome::Success)
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn plan(cmd: &PlanCommand, cli: &Cli, file: &FileConfig) -> Result<Outcome> {
    match cmd {
        PlanCommand::Build(args) => {
            let reg = registry(cli.registry.as_deref(), file)?;
            let plan = build_plan_from_args(args, &reg)?;
            let text = serde_json::to_string_pretty(&plan)? + "\n";
            write_out(args.out.as_deref(), &text)?;
            if let Some(p) = &args.out {
                eprintln!("wrote {} queries to {}", plan.queries.len(), p.display());
            }
            Ok(Outcome::Success)
        }
        PlanCommand::Prefixes { categories } => {
            let reg = registry(cli.registry.as_deref(), file)?;
            let cats: BTreeSet<u8> = categories.iter().copied().collect();
            for d in prefix_dorks(&reg, &cats)? {
                println!("{d}");
            }
            Ok(Outcome::Success)
        }
        PlanCommand::Templates => {
            for (i, t) in parse_templates(BUNDLED_TEMPLATES)?.iter().enumerate() {
                println!("{i}\t{}", nidscan_core::query::render_template(t)?);
            }
            Ok(Outcome::Success)
        }
    }
}

fn build_plan_from_args(args: &PlanBuildArgs, reg: &GeoRegistry) -> Result<QueryPlan> {
    let mut templates: Vec<QueryExpr> = match (&args.template, &args.template_file) {
        (Some(t), None) => vec![parse_template(t)?],
        (None, Some(p)) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_templates(&text)?
        }
        (None, None) => bail!("one of --template or --template-file is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    if let Some(i) = args.template_index {
        let n = templates.len();
        templates = vec![templates
            .into_iter()
            .nth(i)
            .ok_or_else(|| anyhow!("template index {i} out of range (0..{n})"))?];
    }
    let mut bindings: Vec<BTreeMap<String, String>> = match &args.bindings {
        Some(p) => parse_bindings(fs::File::open(p).with_context(|| format!("opening {}", p.display()))?)?,
        None => vec![BTreeMap::new()],
    };
    if args.prefixes {
        let cats: BTreeSet<u8> = args.categories.iter().copied().collect();
        let dorks = prefix_dorks(reg, &cats)?;
        bindings = bindings
            .iter()
            .flat_map(|b| {
                dorks.iter().map(move |d| {
                    let mut b = b.clone();
                    b.insert("prefix".into(), d.clone());
                    b
                })
            })
            .collect();
    }
    let engines = args
        .engines
        .iter()
        .map(|e| e.parse::<Engine>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut queries = Vec::new();
    let mut seen = BTreeSet::new();
    for t in &templates {
        // Templates without placeholders render once.
        let rows: &[BTreeMap<String, String>] = if t.placeholders().is_empty() {
            &bindings[..1.min(bindings.len())]
        } else {
            &bindings
        };
        for q in build_plan(t, rows, engines.clone(), args.max_pages)?.queries {
            if seen.insert(q.clone()) {
                queries.push(q);
            }
        }
    }
    Ok(QueryPlan::new(queries, engines, args.max_pages)?)
}

fn read_plan(path: &Path) -> Result<QueryPlan> {
    let text = fs::read_to_string(path).with_context(|| format!("reading plan {}", path.display()))?;
    let plan: QueryPlan = serde_json::from_str(&text).with_context(|| format!("parsing plan {}", path.display()))?;
    plan.check().with_context(|| format!("plan {}", path.display()))?;
    Ok(plan)
}

fn extractors(flag: Option<&Path>, file: &FileConfig) -> Result<Vec<ExtractorSpec>> {
    match flag.or(file.extractors.as_deref()) {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(parse_config(&text).with_context(|| format!("extractor config {}", p.display()))?)
        }
        None => Ok(default_extractors()),
    }
}

fn store_path(flag: Option<&Path>, file: &FileConfig) -> PathBuf {
    flag.or(file.store.as_deref())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
}

fn scan(args: &ScanRunArgs, cli: &Cli, file: &FileConfig) -> Result<Outcome> {
    let plan = read_plan(&args.plan)?;
    let reg = registry(cli.registry.as_deref(), file)?;
    let config = ScanConfig {
        crawl: resolve_crawl(&args.crawl, &file.crawl)?,
        extractors: extractors(args.extractors.as_deref(), file)?,
        registry: reg,
    };

    let (provider, fetcher, clock): (Box<dyn SearchProvider>, Box<dyn Fetcher>, Box<dyn Clock>) = if args.live {
        let http = HttpProviderConfig {
            endpoint: file.provider.http_endpoint.clone(),
            timeout_secs: file.provider.http_timeout.map(|d| d.as_secs().max(1)),
        };
        let provider = HttpSearchProvider::new(&http, args.unsafe_live_http)?;
        (Box::new(provider), Box::new(HttpFetcher::new()?), Box::new(SystemClock))
    } else {
        let index_path = args
            .fixture
            .as_deref()
            .or(file.provider.fixture.as_deref())
            .ok_or_else(|| anyhow!("no fixture corpus: pass --fixture or set provider.fixture in the config file"))?;
        let index = FixtureIndex::load(index_path)?;
        let clock: Box<dyn Clock> = if args.real_time {
            Box::new(SystemClock)
        } else {
            Box::new(VirtualClock::fixed())
        };
        (
            Box::new(FixtureProvider::new(index.clone())),
            Box::new(FixtureFetcher::new(index)),
            clock,
        )
    };

    let path = store_path(args.store.as_deref(), file);
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let _lock = StoreLock::acquire(&path)?;
    let store = Store::open(&path)?;
    info!("scanning {} queries into {}", plan.queries.len(), path.display());
    let summary = run_scan(
        &plan,
        provider.as_ref(),
        fetcher.as_ref(),
        clock.as_ref(),
        &store,
        &config,
    )?;
    for f in &summary.failures {
        eprintln!(
            "query failed: {} page {} of {:?}: {}",
            f.engine, f.page, f.query, f.message
        );
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&summary)?);
    } else {
        println!("{summary}");
    }
    Ok(if summary.total_failure(&plan) || summary.run_hits == 0 {
        Outcome::Negative
    } else {
        Outcome::Success
    })
}

fn extract(path: &Path, file_type: Option<&str>, flag: Option<&Path>, file: &FileConfig) -> Result<Outcome> {
    let specs = extractors(flag, file)?;
    let ty = match file_type {
        Some(t) => t.trim_start_matches('.').to_ascii_lowercase(),
        None => path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .ok_or_else(|| anyhow!("{} has no extension; pass --type", path.display()))?,
    };
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = extract_text(&bytes, &ty, &digest_hex(&bytes), &specs)?;
    for f in &text.failures {
        eprintln!("extractor {} failed: {}", f.extractor, f.reason);
    }
    println!("{}", text.merged);
    Ok(Outcome::Success)
}

fn read_salt_file(p: &Path) -> Result<Vec<u8>> {
    let mut s = fs::read(p).with_context(|| format!("reading salt file {}", p.display()))?;
    while s.last().is_some_and(|b| *b == b'\n' || *b == b'\r') {
        s.pop();
    }
    Ok(s)
}

fn redaction(args: &ReportArgs, file: &FileConfig) -> Result<Redaction> {
    if args.unredacted {
        if !args.i_accept_risk {
            bail!("--unredacted writes raw national ID numbers; it also requires --i-accept-risk");
        }
        return Ok(Redaction::Off(UnsafeAck::i_accept_risk()));
    }
    let salt = if let Some(s) = &args.salt {
        s.as_bytes().to_vec()
    } else if let Some(p) = &args.salt_file {
        read_salt_file(p)?
    } else if let Ok(s) = std::env::var("NIDSCAN_SALT") {
        s.into_bytes()
    } else if let Some(p) = std::env::var_os("NIDSCAN_SALT_FILE").map(PathBuf::from) {
        read_salt_file(&p)?
    } else if let Some(p) = &file.report.salt_file {
        read_salt_file(p)?
    } else {
        bail!("reports are pseudonymized and need a salt: pass --salt-file, --salt or set NIDSCAN_SALT");
    };
    if salt.is_empty() {
        bail!("the redaction salt is empty");
    }
    Ok(Redaction::Pseudonymize { salt })
}

fn table_list() -> String {
    TABLES
        .iter()
        .map(|(n, d)| format!("  {n:<12}{d}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn report(args: &ReportArgs, cli: &Cli, file: &FileConfig) -> Result<Outcome> {
    let names: Vec<String> = args
        .tables
        .clone()
        .or_else(|| file.report.tables.clone())
        .unwrap_or_else(|| DEFAULT_TABLES.iter().map(|s| s.to_string()).collect());
    if names.iter().any(|n| n == "help") {
        println!("available tables:\n{}", table_list());
        return Ok(Outcome::Success);
    }
    if let Some(bad) = names.iter().find(|n| !TABLES.iter().any(|(t, _)| t == n)) {
        bail!("unknown table {bad:?}; available tables:\n{}", table_list());
    }
    let format: ReportFormat = args
        .format
        .as_deref()
        .or(file.report.format.as_deref())
        .unwrap_or("markdown")
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    let redaction = redaction(args, file)?;
    let reg = registry(cli.registry.as_deref(), file)?;
    let suffixes = match args.suffixes.as_deref().or(file.report.suffixes.as_deref()) {
        Some(p) => SuffixList::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => SuffixList::default(),
    };
    let tags = match args.tags.as_deref().or(file.report.tags.as_deref()) {
        Some(p) => TagMap::parse(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?),
        None => TagMap::default(),
    };
    let out = args
        .out
        .clone()
        .or_else(|| file.report.out.clone())
        .unwrap_or_else(|| PathBuf::from("report"));

    let path = store_path(args.store.as_deref(), file);
    if !path.exists() {
        bail!("store {} does not exist", path.display());
    }
    let _lock = StoreLock::acquire(&path)?;
    let store = Store::open(&path)?;
    let (records, failures) = exposure_records(&store, &suffixes, &tags)?;
    let geo = if names.iter().any(|n| n == "geo" || n == "district") {
        Some(geographic_report(&records, &reg))
    } else {
        None
    };

    let mut tables = Vec::new();
    for name in &names {
        let mut t = match name.as_str() {
            "filetype" => aggregate(&records, Dimension::FileType),
            "family" => aggregate(&records, Dimension::FileFamily),
            "tld" => aggregate(&records, Dimension::Tld),
            "domain" => aggregate(&records, Dimension::RegisteredDomain),
            "owner" => aggregate(&records, Dimension::OwnerTag),
            "query" => aggregate(&records, Dimension::Query),
            "engine" => aggregate(&records, Dimension::Engine),
            "category" => aggregate(&records, Dimension::CategoryDigit),
            "page" => aggregate(&records, Dimension::Page),
            "ids" => aggregate(&records, Dimension::NationalId),
            "geo" => geo.as_ref().expect("computed above").province.clone(),
            "district" => geo.as_ref().expect("computed above").district.clone(),
            "repeat" => repeat_exposure(&records),
            "diagnostics" => diagnostics_table(&failures),
            "hits" => page_histogram(&store.hit_pages()?),
            _ => unreachable!("names checked above"),
        };
        t.name = name.clone();
        tables.push(t);
    }
    for p in emit_report(&tables, &out, format, &redaction)? {
        println!("{}", p.display());
    }
    Ok(Outcome::Success)
}

fn fixture(args: &FixtureArgs, cli: &Cli, file: &FileConfig) -> Result<Outcome> {
    let reg = registry(cli.registry.as_deref(), file)?;
    if args.queries == 0 || args.documents == 0 {
        bail!("--queries and --documents must be positive");
    }
    let spec = CorpusSpec {
        seed: args.seed,
        queries: args.queries,
        documents: args.documents,
        ids: args.ids,
        decoys: args.decoys,
        repeated_ids: args.repeated_ids,
        results_per_page: args.results_per_page,
    };
    let corpus =
        generate(&spec, &reg, &args.out).with_context(|| format!("writing corpus to {}", args.out.display()))?;
    println!(
        "{} documents, {} planted IDs, {} decoys",
        corpus.truth.documents.len(),
        corpus.truth.planted.len(),
        corpus.truth.decoys.len()
    );
    println!("index      {}", corpus.index_path.display());
    println!("plan       {}", corpus.plan_path.display());
    println!("extractors {}", corpus.extractors_path.display());
    Ok(Outcome::Success)
}
