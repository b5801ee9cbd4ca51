use super::IdError;

/// Multipliers for digits 1..=12, from 13 down to 2.
pub const POSITION_MULTIPLIERS: [u32; 12] = [13, 12, 11, 10, 9, 8, 7, 6, 5, 4, 3, 2];

fn parse_prefix(prefix12: &str) -> Result<[u8; 12], IdError> {
    let bytes = prefix12.as_bytes();
    if bytes.len() != 12 || !bytes.iter().all(u8::is_ascii_digit) {
        return Err(IdError::BadPrefixLength(prefix12.to_string()));
    }
    let mut digits = [0u8; 12];
    for (d, b) in digits.iter_mut().zip(bytes) {
        *d = b - b'0';
    }
    Ok(digits)
}

/// Weighted digit sum of the first twelve digits.
pub fn weighted_sum(prefix12: &str) -> Result<u32, IdError> {
    let digits = parse_prefix(prefix12)?;
    Ok(digits
        .iter()
        .zip(POSITION_MULTIPLIERS)
        .map(|(&d, m)| u32::from(d) * m)
        .sum())
}

/// Check digit for a 12-digit prefix: `(11 - sum mod 11) mod 10`.
pub fn compute_checksum(prefix12: &str) -> Result<u8, IdError> {
    let sum = weighted_sum(prefix12)?;
    Ok(((11 - sum % 11) % 10) as u8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_example_from_card_format() {
        assert_eq!(weighted_sum("123456789101").unwrap(), 351);
        assert_eq!(compute_checksum("123456789101").unwrap(), 1);
    }

    #[test]
    fn all_zero_prefix_wraps_to_one() {
        assert_eq!(compute_checksum("000000000000").unwrap(), 1);
    }

    #[test]
    fn rejects_malformed_prefix() {
        assert!(compute_checksum("12345678910").is_err());
        assert!(compute_checksum("1234567891011").is_err());
        assert!(compute_checksum("12345678910a").is_err());
        assert!(compute_checksum("๑๒๓๔๕๖๗๘๙๑๐๑").is_err());
    }
}
