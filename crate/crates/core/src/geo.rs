//! Province and district code tables with population counts.
//!
//! The on-disk format is line-oriented CSV (see
//! `data/benchmark_registry.csv` for a documented example):
//!
//! ```text
//! P,<2-digit code>,<name>
//! D,<4-digit code>,<name>
//! ASOF,<label>
//! POP,<code>,<count>
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. Records may appear
//! in any order; referential integrity is checked once the whole file is
//! read.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const BENCHMARK: &str = include_str!("../data/benchmark_registry.csv");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("registry has no provinces or no districts")]
    Empty,
    #[error("reading registry: {0}")]
    Csv(#[from] csv::Error),
}

fn row_error(line: u64, message: impl Into<String>) -> RegistryError {
    RegistryError::Row {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Province {
    pub code: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct District {
    pub code: String,
    pub name: String,
    pub province_code: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PopulationTable {
    pub entries: BTreeMap<String, u64>,
    pub as_of: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeoRegistry {
    provinces: BTreeMap<String, Province>,
    districts: BTreeMap<String, District>,
    population: Option<PopulationTable>,
}

fn is_code(s: &str, width: usize) -> bool {
    s.len() == width && s.bytes().all(|b| b.is_ascii_digit())
}

impl GeoRegistry {
    /// The registry bundled with the crate.
    pub fn benchmark() -> Self {
        Self::load(BENCHMARK.as_bytes()).expect("bundled registry is valid")
    }

    /// Parses the registry format. Duplicate codes, malformed rows and
    /// orphan districts or population rows are errors naming the line.
    pub fn load<R: Read>(source: R) -> Result<Self, RegistryError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(source);

        let mut provinces = BTreeMap::new();
        let mut districts: BTreeMap<String, (District, u64)> = BTreeMap::new();
        let mut population: BTreeMap<String, (u64, u64)> = BTreeMap::new();
        let mut as_of = None;

        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let fields: Vec<&str> = record.iter().collect();
            if fields.iter().all(|f| f.is_empty()) {
                continue;
            }
            match fields[0] {
                "P" => {
                    let [_, code, name] = fields[..] else {
                        return Err(row_error(line, "province rows have 3 columns"));
                    };
                    if !is_code(code, 2) {
                        return Err(row_error(line, format!("bad province code {code:?}")));
                    }
                    if name.is_empty() {
                        return Err(row_error(line, "empty province name"));
                    }
                    let province = Province {
                        code: code.to_string(),
                        name: name.to_string(),
                    };
                    if provinces.insert(code.to_string(), province).is_some() {
                        return Err(row_error(line, format!("duplicate province {code}")));
                    }
                }
                "D" => {
                    let [_, code, name] = fields[..] else {
                        return Err(row_error(line, "district rows have 3 columns"));
                    };
                    if !is_code(code, 4) {
                        return Err(row_error(line, format!("bad district code {code:?}")));
                    }
                    if name.is_empty() {
                        return Err(row_error(line, "empty district name"));
                    }
                    let district = District {
                        code: code.to_string(),
                        name: name.to_string(),
                        province_code: code[..2].to_string(),
                    };
                    if districts.insert(code.to_string(), (district, line)).is_some() {
                        return Err(row_error(line, format!("duplicate district {code}")));
                    }
                }
                "POP" => {
                    let [_, code, count] = fields[..] else {
                        return Err(row_error(line, "population rows have 3 columns"));
                    };
                    let count: u64 = count
                        .parse()
                        .map_err(|_| row_error(line, format!("bad population count {count:?}")))?;
                    if population.insert(code.to_string(), (count, line)).is_some() {
                        return Err(row_error(line, format!("duplicate population for {code}")));
                    }
                }
                "ASOF" => {
                    let [_, label] = fields[..] else {
                        return Err(row_error(line, "ASOF rows have 2 columns"));
                    };
                    as_of = Some(label.to_string());
                }
                other => return Err(row_error(line, format!("unknown record type {other:?}"))),
            }
        }

        if provinces.is_empty() || districts.is_empty() {
            return Err(RegistryError::Empty);
        }
        for (district, line) in districts.values() {
            if !provinces.contains_key(&district.province_code) {
                return Err(row_error(
                    *line,
                    format!(
                        "district {} refers to missing province {}",
                        district.code, district.province_code
                    ),
                ));
            }
        }
        for (code, (_, line)) in &population {
            if !provinces.contains_key(code) && !districts.contains_key(code) {
                return Err(row_error(*line, format!("population for unknown code {code}")));
            }
        }

        let population = (!population.is_empty() || as_of.is_some()).then(|| PopulationTable {
            entries: population.into_iter().map(|(k, (v, _))| (k, v)).collect(),
            as_of,
        });
        Ok(GeoRegistry {
            provinces,
            districts: districts.into_iter().map(|(k, (d, _))| (k, d)).collect(),
            population,
        })
    }

    /// Writes the registry back out in the load format, sorted by code.
    pub fn to_registry_text(&self) -> String {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        for p in self.provinces.values() {
            w.write_record(["P", &p.code, &p.name]).expect("in-memory write");
        }
        for d in self.districts.values() {
            w.write_record(["D", &d.code, &d.name]).expect("in-memory write");
        }
        if let Some(pop) = &self.population {
            if let Some(as_of) = &pop.as_of {
                w.write_record(["ASOF", as_of]).expect("in-memory write");
            }
            for (code, count) in &pop.entries {
                w.write_record(["POP", code, &count.to_string()])
                    .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn lookup_district(&self, code4: &str) -> Option<&District> {
        self.districts.get(code4)
    }

    pub fn lookup_province(&self, code2: &str) -> Option<&Province> {
        self.provinces.get(code2)
    }

    pub fn provinces(&self) -> impl Iterator<Item = &Province> {
        self.provinces.values()
    }

    /// Districts in ascending code order.
    pub fn districts(&self) -> impl Iterator<Item = &District> {
        self.districts.values()
    }

    pub fn population(&self) -> Option<&PopulationTable> {
        self.population.as_ref()
    }

    pub fn population_of(&self, code: &str) -> Option<u64> {
        self.population.as_ref()?.entries.get(code).copied()
    }
}
