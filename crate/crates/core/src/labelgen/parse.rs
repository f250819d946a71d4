//! Extraction of goal numbers from free-form model output.

use thiserror::Error;

use crate::labels::{is_valid_goal, LabelSet};

/// Default upper bound on goals taken from one response.
pub const DEFAULT_MAX_LABELS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("response contains no usable goal number")]
pub struct EmptyLabelError;

/// Pulls goals out of a response.
///
/// Every maximal run of ASCII digits is a candidate. Values outside 1..=17,
/// goal 4 and repeats are dropped, the first `max_labels` distinct goals by
/// order of mention are kept, and the result is sorted.
pub fn parse_sdg_response(text: &str, max_labels: usize) -> Result<LabelSet, EmptyLabelError> {
    let mut picked: Vec<u8> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() && picked.len() < max_labels {
        if !bytes[i].is_ascii_digit() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let run = &text[start..i];
        // Runs longer than two digits can only be out of range; skip without
        // parsing so arbitrarily long numbers cannot overflow.
        let digits = run.trim_start_matches('0');
        if digits.len() > 2 {
            continue;
        }
        let value: i64 = digits.parse().unwrap_or(0);
        if is_valid_goal(value) && !picked.contains(&(value as u8)) {
            picked.push(value as u8);
        }
    }
    if picked.is_empty() {
        return Err(EmptyLabelError);
    }
    Ok(LabelSet::new(picked.into_iter().map(i64::from)).expect("validated goals"))
}

/// Byte-level entry point for untrusted payloads.
pub fn parse_sdg_response_bytes(
    bytes: &[u8],
    max_labels: usize,
) -> Result<LabelSet, EmptyLabelError> {
    parse_sdg_response(&String::from_utf8_lossy(bytes), max_labels)
}
