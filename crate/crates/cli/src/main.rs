//! `nidscan`: validate IDs, build query plans, scan a search provider,
//! extract text and emit redacted exposure reports.
//!
//! Exit codes: 0 success, 1 domain-negative (rejected ID, scan with no
//! results), 2 usage, configuration or I/O error.

mod commands;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use settings::CrawlArgs;

#[derive(Debug, Parser)]
#[command(
    name = "nidscan",
    version,
    about = "Find and report exposed Thai National ID numbers"
)]
pub struct Cli {
    /// Config file (TOML); flags and environment variables override it
    #[arg(long, global = true, env = "NIDSCAN_CONFIG")]
    pub config: Option<PathBuf>,
    /// Province / district registry file; defaults to the bundled registry
    #[arg(long, global = true, env = "NIDSCAN_REGISTRY")]
    pub registry: Option<PathBuf>,
    /// More logging (-v info, -vv debug)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate, decode and generate identifiers
    #[command(subcommand)]
    Id(IdCommand),
    /// Build search query plans
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Run a query plan against a search provider
    #[command(subcommand)]
    Scan(ScanCommand),
    /// Extract text from a local file
    #[command(subcommand)]
    Extract(ExtractCommand),
    /// Emit aggregate tables from a store
    Report(ReportArgs),
    /// Generate synthetic fixture corpora
    #[command(subcommand)]
    Fixture(FixtureCommand),
    /// Show effective settings
    #[command(subcommand)]
    Config(ConfigCommand),
}

#[derive(Debug, Subcommand)]
pub enum IdCommand {
    /// Run the format, checksum and prefix checks on one number
    Validate {
        number: String,
        /// Print the outcome as JSON
        #[arg(long)]
        json: bool,
    },
    /// Generate registry-consistent valid numbers
    Generate {
        /// Category digit followed by a 4-digit district code
        #[arg(long, default_value = "11001")]
        prefix: String,
        /// First 7-digit sequence number
        #[arg(long, default_value = "0000001")]
        sequence: String,
        #[arg(long, default_value_t = 1)]
        count: u32,
    },
}

#[derive(Debug, Subcommand)]
pub enum PlanCommand {
    /// Render a template over bindings into a plan file
    Build(PlanBuildArgs),
    /// Print the quoted prefix phrases for the given categories
    Prefixes {
        #[arg(long, value_delimiter = ',', default_value = "1,3")]
        categories: Vec<u8>,
    },
    /// List the bundled templates
    Templates,
}

#[derive(Debug, Args)]
pub struct PlanBuildArgs {
    /// Template expression, e.g. 'filetype:pdf {prefix} "citizen"'
    #[arg(long, conflicts_with = "template_file")]
    pub template: Option<String>,
    /// File of templates, one per line
    #[arg(long)]
    pub template_file: Option<PathBuf>,
    /// Use only this template (0-based) from the template file; all by default
    #[arg(long)]
    pub template_index: Option<usize>,
    /// CSV bindings file; header row names the placeholders
    #[arg(long)]
    pub bindings: Option<PathBuf>,
    /// Bind {prefix} to every category × district prefix phrase
    #[arg(long)]
    pub prefixes: bool,
    #[arg(long, value_delimiter = ',', default_value = "1,3")]
    pub categories: Vec<u8>,
    #[arg(long, value_delimiter = ',', default_value = "google")]
    pub engines: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub max_pages: u32,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ScanCommand {
    /// Search, download, extract and record findings
    Run(ScanRunArgs),
}

#[derive(Debug, Args)]
pub struct ScanRunArgs {
    /// Plan file (JSON)
    #[arg(long)]
    pub plan: PathBuf,
    /// Fixture corpus index (the default provider)
    #[arg(long, env = "NIDSCAN_FIXTURE")]
    pub fixture: Option<PathBuf>,
    /// Result store (SQLite); objects go in <store>.objects
    #[arg(long, env = "NIDSCAN_STORE")]
    pub store: Option<PathBuf>,
    /// Extractor config (TOML); built-in extractors when absent
    #[arg(long, env = "NIDSCAN_EXTRACTORS")]
    pub extractors: Option<PathBuf>,
    /// Use the live HTTP provider configured by `provider.http_endpoint`
    #[arg(long, requires = "unsafe_live_http")]
    pub live: bool,
    /// Acknowledge that live mode sends real search and download requests
    #[arg(long)]
    pub unsafe_live_http: bool,
    /// Sleep in wall-clock time for fixture scans too
    #[arg(long)]
    pub real_time: bool,
    /// Print the summary as JSON
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub crawl: CrawlArgs,
}

#[derive(Debug, Subcommand)]
pub enum ExtractCommand {
    /// Print the merged text of one file
    File {
        path: PathBuf,
        /// File type; taken from the extension when absent
        #[arg(long = "type")]
        file_type: Option<String>,
        #[arg(long, env = "NIDSCAN_EXTRACTORS")]
        extractors: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, env = "NIDSCAN_STORE")]
    pub store: Option<PathBuf>,
    /// Comma-separated table names; see `--tables help`
    #[arg(long, value_delimiter = ',')]
    pub tables: Option<Vec<String>>,
    /// csv, json or markdown
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pseudonymization salt (visible in process listings; prefer --salt-file)
    #[arg(long)]
    pub salt: Option<String>,
    /// File whose contents (trailing newline removed) are the salt
    #[arg(long)]
    pub salt_file: Option<PathBuf>,
    /// Owner tag file, `registered_domain,tag` per line
    #[arg(long)]
    pub tags: Option<PathBuf>,
    /// Public suffix list, one suffix per line
    #[arg(long)]
    pub suffixes: Option<PathBuf>,
    /// Write raw IDs; also requires --i-accept-risk
    #[arg(long)]
    pub unredacted: bool,
    /// Acknowledge that unredacted reports contain personal data
    #[arg(long)]
    pub i_accept_risk: bool,
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    /// Write a corpus, plan, extractor config and ground truth
    Generate(FixtureArgs),
}

#[derive(Debug, Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub queries: usize,
    #[arg(long, default_value_t = 12)]
    pub documents: usize,
    #[arg(long, default_value_t = 40)]
    pub ids: usize,
    #[arg(long, default_value_t = 10)]
    pub decoys: usize,
    #[arg(long, default_value_t = 6)]
    pub repeated_ids: usize,
    #[arg(long, default_value_t = 2)]
    pub results_per_page: usize,
}

#[derive(Debug, Subcommand)]
pub enum ConfigCommand {
    /// Print the effective crawl settings in config-file syntax
    Show {
        #[command(flatten)]
        crawl: CrawlArgs,
    },
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Negative,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(&cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Negative) => ExitCode::from(1),
        Err(e) => {
            // Library errors often repeat their source in their own message.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
