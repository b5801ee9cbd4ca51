//! Thai National Identification Number handling.
//!
//! Layout of the 13 digits:
//!
//! ```text
//! 1   2 3 4 5   6 7 8 9 10 11 12   13
//! |   |_____|   |______________|    |
//! |   district  sequence           check digit
//! category (province = digits 2-3)
//! ```

mod checksum;
mod pseudonym;
mod scan;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoRegistry;

pub use checksum::{compute_checksum, weighted_sum, POSITION_MULTIPLIERS};
pub use pseudonym::{pseudonymize, PseudonymToken};
pub use scan::{find_candidates, normalize_numerals, RawCandidate};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdError {
    #[error("checksum input must be exactly 12 ASCII digits, got {0:?}")]
    BadPrefixLength(String),
    #[error("identifier must be exactly 13 ASCII digits, got {0:?}")]
    BadIdLength(String),
    #[error("category digit {0} is outside 1-8")]
    BadCategory(u8),
    #[error("district code {0} is not in the registry")]
    UnknownDistrict(String),
    #[error("sequence must be exactly 7 ASCII digits, got {0:?}")]
    BadSequence(String),
    #[error("identifier {digits} is not valid: failed {stage} stage")]
    NotAccepted { digits: String, stage: Stage },
    #[error("pseudonymization salt must not be empty")]
    EmptySalt,
}

/// The three validation stages, in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Format,
    Checksum,
    Prefix,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Format, Stage::Checksum, Stage::Prefix];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Format => "format",
            Stage::Checksum => "checksum",
            Stage::Prefix => "prefix",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "verdict", content = "stage")]
pub enum Verdict {
    Accepted,
    Rejected(Stage),
}

/// Per-stage results of [`validate`].
///
/// Checksum and prefix are judged independently once the format stage
/// passes; they are `None` only when the format stage failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub format: bool,
    pub checksum: Option<bool>,
    pub prefix: Option<bool>,
    pub verdict: Verdict,
}

impl ValidationOutcome {
    pub fn is_accepted(&self) -> bool {
        self.verdict == Verdict::Accepted
    }

    pub fn stage(&self, stage: Stage) -> Option<bool> {
        match stage {
            Stage::Format => Some(self.format),
            Stage::Checksum => self.checksum,
            Stage::Prefix => self.prefix,
        }
    }
}

fn is_13_digits(s: &str) -> bool {
    s.len() == 13 && s.bytes().all(|b| b.is_ascii_digit())
}

fn prefix_ok(digits: &str, registry: &GeoRegistry) -> bool {
    let category = digits.as_bytes()[0] - b'0';
    (1..=8).contains(&category) && registry.lookup_district(&digits[1..5]).is_some()
}

/// Runs the format, checksum and prefix stages against `candidate`.
pub fn validate(candidate: &str, registry: &GeoRegistry) -> ValidationOutcome {
    if !is_13_digits(candidate) {
        return ValidationOutcome {
            format: false,
            checksum: None,
            prefix: None,
            verdict: Verdict::Rejected(Stage::Format),
        };
    }
    let expected = compute_checksum(&candidate[..12]).expect("prefix is 12 digits");
    let checksum = candidate.as_bytes()[12] - b'0' == expected;
    let prefix = prefix_ok(candidate, registry);
    let verdict = if !checksum {
        Verdict::Rejected(Stage::Checksum)
    } else if !prefix {
        Verdict::Rejected(Stage::Prefix)
    } else {
        Verdict::Accepted
    };
    ValidationOutcome {
        format: true,
        checksum: Some(checksum),
        prefix: Some(prefix),
        verdict,
    }
}

/// True when `candidate` is 13 digits with a correct check digit,
/// regardless of registry membership.
pub fn checksum_valid(candidate: &str) -> bool {
    is_13_digits(candidate) && compute_checksum(&candidate[..12]).ok() == Some(candidate.as_bytes()[12] - b'0')
}

/// Short description of a category digit.
pub fn category_description(category: u8) -> Option<&'static str> {
    Some(match category {
        1 => "Thai national born on or after 1 Jan 1984, birth registered within 15 days",
        2 => "Thai national born on or after 1 Jan 1984, birth registered late",
        3 => "Thai nationals/foreigners in the household registry prior to May 31, 1984",
        4 => "Thai national or foreigner resident before first ID assignment",
        5 => "Added later after an omission or special circumstance",
        6 => "Temporary resident, illegal entrant or group awaiting citizenship",
        7 => "Child born in Thailand to category 6 parents",
        8 => "Legal foreign resident or naturalised after 31 May 1984",
        _ => return None,
    })
}

/// A validated identifier with its decoded fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NationalId {
    pub digits: String,
    pub category: u8,
    pub province_code: String,
    pub province_name: String,
    pub district_code: String,
    pub district_name: String,
    pub sequence: String,
    pub check_digit: u8,
}

impl NationalId {
    pub fn category_description(&self) -> &'static str {
        category_description(self.category).expect("accepted ids have category 1-8")
    }
}

/// Decodes an accepted identifier. Anything that does not pass
/// [`validate`] is an error.
pub fn decode(id: &str, registry: &GeoRegistry) -> Result<NationalId, IdError> {
    let outcome = validate(id, registry);
    if let Verdict::Rejected(stage) = outcome.verdict {
        return Err(IdError::NotAccepted {
            digits: id.to_string(),
            stage,
        });
    }
    let district = registry
        .lookup_district(&id[1..5])
        .expect("prefix stage guarantees the district");
    let province = registry
        .lookup_province(&district.province_code)
        .expect("registry integrity guarantees the province");
    Ok(NationalId {
        digits: id.to_string(),
        category: id.as_bytes()[0] - b'0',
        province_code: province.code.clone(),
        province_name: province.name.clone(),
        district_code: district.code.clone(),
        district_name: district.name.clone(),
        sequence: id[5..12].to_string(),
        check_digit: id.as_bytes()[12] - b'0',
    })
}

/// Builds a registry-consistent identifier from a category+district prefix
/// and a 7-digit sequence, appending the check digit.
pub fn generate_valid_id(prefix5: &str, sequence7: &str, registry: &GeoRegistry) -> Result<String, IdError> {
    if prefix5.len() != 5 || !prefix5.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IdError::BadIdLength(prefix5.to_string()));
    }
    if sequence7.len() != 7 || !sequence7.bytes().all(|b| b.is_ascii_digit()) {
        return Err(IdError::BadSequence(sequence7.to_string()));
    }
    let category = prefix5.as_bytes()[0] - b'0';
    if !(1..=8).contains(&category) {
        return Err(IdError::BadCategory(category));
    }
    if registry.lookup_district(&prefix5[1..]).is_none() {
        return Err(IdError::UnknownDistrict(prefix5[1..].to_string()));
    }
    let mut id = format!("{prefix5}{sequence7}");
    let check = compute_checksum(&id)?;
    id.push(char::from(b'0' + check));
    Ok(id)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn registry() -> GeoRegistry {
        GeoRegistry::benchmark()
    }

    #[test]
    fn generated_id_is_accepted() {
        let reg = registry();
        let id = generate_valid_id("11001", "2345678", &reg).unwrap();
        assert!(validate(&id, &reg).is_accepted());
    }

    #[test]
    fn checksum_pass_prefix_fail() {
        let reg = registry();
        assert!(reg.lookup_district("2345").is_none());
        let out = validate("1234567891011", &reg);
        assert_eq!(out.checksum, Some(true));
        assert_eq!(out.prefix, Some(false));
        assert_eq!(out.verdict, Verdict::Rejected(Stage::Prefix));
    }

    #[test]
    fn wrong_check_digit_rejected_at_checksum() {
        let reg = registry();
        let good = compute_checksum("110012345678").unwrap();
        assert_ne!(good, 0);
        let out = validate("1100123456780", &reg);
        assert_eq!(out.verdict, Verdict::Rejected(Stage::Checksum));
        assert_eq!(out.prefix, Some(true));
    }

    #[test]
    fn malformed_input_fails_format() {
        let reg = registry();
        for s in ["12345", "", "12345678910111", "12345678910a1", "๑๒๓๔๕๖๗๘๙๑๐๑๑"] {
            let out = validate(s, &reg);
            assert_eq!(out.verdict, Verdict::Rejected(Stage::Format), "{s}");
            assert_eq!(out.checksum, None);
        }
    }

    #[test]
    fn categories_zero_and_nine_fail_prefix() {
        let reg = registry();
        for cat in ['0', '9'] {
            let prefix = format!("{cat}10010000001");
            let id = format!("{prefix}{}", compute_checksum(&prefix).unwrap());
            assert_eq!(validate(&id, &reg).verdict, Verdict::Rejected(Stage::Prefix));
        }
    }

    #[test]
    fn decode_named_districts() {
        let reg = registry();
        let id = generate_valid_id("11001", "0000000", &reg).unwrap();
        let n = decode(&id, &reg).unwrap();
        assert_eq!(n.province_code, "10");
        assert_eq!(n.province_name, "Bangkok");
        assert_eq!(n.district_code, "1001");
        assert_eq!(n.district_name, "Phra Nakhon");
        assert_eq!(n.sequence, "0000000");

        let id = generate_valid_id("32007", "1234567", &reg).unwrap();
        let n = decode(&id, &reg).unwrap();
        assert_eq!(n.province_code, "20");
        assert_eq!(n.district_name, "Si Racha");
        assert_eq!(n.category, 3);
        assert_eq!(
            n.category_description(),
            "Thai nationals/foreigners in the household registry prior to May 31, 1984"
        );
    }

    #[test]
    fn decode_refuses_rejected_ids() {
        let reg = registry();
        assert!(matches!(
            decode("1234567891011", &reg),
            Err(IdError::NotAccepted {
                stage: Stage::Prefix,
                ..
            })
        ));
    }

    #[test]
    fn generate_rejects_bad_prefixes() {
        let reg = registry();
        assert_eq!(
            generate_valid_id("93095", "1234567", &reg),
            Err(IdError::BadCategory(9))
        );
        assert!(reg.lookup_district("3095").is_none());
        assert_eq!(
            generate_valid_id("13095", "1234567", &reg),
            Err(IdError::UnknownDistrict("3095".into()))
        );
        assert!(generate_valid_id("11001", "123456", &reg).is_err());
        assert!(generate_valid_id("1100", "1234567", &reg).is_err());
    }
}
