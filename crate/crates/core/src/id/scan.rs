use std::ops::Range;

use serde::{Deserialize, Serialize};

/// A 13-digit number found in text, before any checksum or prefix check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCandidate {
    /// Byte range of the match in the source text.
    pub source_span: Range<usize>,
    pub raw_text: String,
    /// Exactly 13 ASCII digits.
    pub normalized: String,
}

const THAI_ZERO: u32 = 0x0E50;

/// Digit value of an Arabic or Thai numeral.
pub(crate) fn digit_value(c: char) -> Option<u8> {
    match c {
        '0'..='9' => Some(c as u8 - b'0'),
        '\u{0E50}'..='\u{0E59}' => Some((c as u32 - THAI_ZERO) as u8),
        _ => None,
    }
}

/// Replaces Thai numerals (U+0E50..U+0E59) with their ASCII equivalents.
/// Every other character is left untouched.
pub fn normalize_numerals(text: &str) -> String {
    text.chars()
        .map(|c| match c {
            '\u{0E50}'..='\u{0E59}' => char::from(b'0' + (c as u32 - THAI_ZERO) as u8),
            other => other,
        })
        .collect()
}

fn is_separator(c: char) -> bool {
    c == '-' || c == ' '
}

/// Group widths of the printed card format `D-DDDD-DDDDD-DD-D`.
const GROUPS: [usize; 5] = [1, 4, 5, 2, 1];

/// Finds every 13-digit candidate in `text`.
///
/// Two shapes are recognised: 13 contiguous digits, and the grouped card
/// layout `D-DDDD-DDDDD-DD-D` where each separator is a single hyphen or
/// space (mixing the two is allowed). Neither shape may touch another digit
/// on either side, so windows inside longer digit runs are never reported.
/// Thai numerals are treated exactly like ASCII digits.
pub fn find_candidates(text: &str) -> Vec<RawCandidate> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let is_digit = |i: usize| chars.get(i).is_some_and(|&(_, c)| digit_value(c).is_some());
    let run_len = |start: usize| {
        let mut end = start;
        while is_digit(end) {
            end += 1;
        }
        end - start
    };

    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !is_digit(i) || (i > 0 && is_digit(i - 1)) {
            i += 1;
            continue;
        }
        let first = run_len(i);

        if let Some(end) = match_grouped(&chars, i, &run_len) {
            out.push(candidate(text, &chars, i, end));
            i = end;
            continue;
        }
        if first == 13 {
            out.push(candidate(text, &chars, i, i + 13));
        }
        i += first;
    }
    out
}

/// Returns the exclusive char index where a grouped match starting at
/// `start` ends, if there is one.
fn match_grouped(chars: &[(usize, char)], start: usize, run_len: &impl Fn(usize) -> usize) -> Option<usize> {
    let mut pos = start;
    for (n, &width) in GROUPS.iter().enumerate() {
        if n > 0 {
            if !chars.get(pos).is_some_and(|&(_, c)| is_separator(c)) {
                return None;
            }
            pos += 1;
        }
        if run_len(pos) != width {
            return None;
        }
        pos += width;
    }
    Some(pos)
}

fn candidate(text: &str, chars: &[(usize, char)], start: usize, end: usize) -> RawCandidate {
    let byte_start = chars[start].0;
    let byte_end = chars.get(end).map_or(text.len(), |&(b, _)| b);
    let raw = &text[byte_start..byte_end];
    let normalized = raw
        .chars()
        .filter_map(digit_value)
        .map(|d| char::from(b'0' + d))
        .collect();
    RawCandidate {
        source_span: byte_start..byte_end,
        raw_text: raw.to_string(),
        normalized,
    }
}
