//! Detection, validation and exposure analytics for Thai National
//! Identification Numbers.
//!
//! The crate is split along the pipeline:
//!
//! - [`id`]: numeral normalization, candidate extraction, the mod-11 check
//!   digit, three-stage validation, decoding and pseudonymization.
//! - [`geo`]: province / district code tables with population counts.
//! - [`query`]: advanced-search query algebra, prefix dorks and query plans.
//! - [`analytics`]: URL classification, aggregation, per-capita geography,
//!   repeat-exposure distribution and report emission.

pub mod analytics;
pub mod geo;
pub mod id;
pub mod query;

pub use analytics::{
    aggregate, classify_url, diagnostics_table, emit_report, geographic_report, page_histogram, repeat_exposure,
    AggregateTable, Dimension, DomainInfo, ExposureRecord, Percent, Redaction, ReportFormat, TldClass,
};
pub use geo::{District, GeoRegistry, PopulationTable, Province, RegistryError};
pub use id::{
    compute_checksum, decode, find_candidates, generate_valid_id, normalize_numerals, pseudonymize, validate, IdError,
    NationalId, PseudonymToken, RawCandidate, Stage, ValidationOutcome, Verdict,
};
pub use query::{Engine, FileType, QueryError, QueryExpr, QueryPlan};
