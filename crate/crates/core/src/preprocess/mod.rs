//! Cleaning rules that turn raw catalog records into training-ready courses.
//!
//! Filters run in a fixed order and each dropped record is attributed to the
//! first rule it fails: missing fields, year, combined length, language,
//! duplicate.

mod language;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ingest::{RawCourse, YearRange};

pub use language::{detect_language, english_stopwords, finnish_stopwords, words, Language};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub year_min: u16,
    pub year_max: u16,
    pub min_combined_chars: usize,
    pub max_combined_chars: usize,
    pub required_language: Language,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            year_min: 2021,
            year_max: 2023,
            min_combined_chars: 500,
            max_combined_chars: 2000,
            required_language: Language::English,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.year_min > self.year_max {
            return Err(format!(
                "year_min {} exceeds year_max {}",
                self.year_min, self.year_max
            ));
        }
        if self.min_combined_chars == 0 || self.min_combined_chars > self.max_combined_chars {
            return Err(format!(
                "character band {}..{} is invalid",
                self.min_combined_chars, self.max_combined_chars
            ));
        }
        if self.required_language == Language::Unknown {
            return Err("required_language may not be unknown".into());
        }
        Ok(())
    }

    pub fn years(&self) -> YearRange {
        YearRange {
            start: self.year_min,
            end: self.year_max,
        }
    }
}

/// A filtered, deduplicated course in the required language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanCourse {
    pub id: String,
    pub name: String,
    pub description: String,
    pub objective: String,
    pub year: u16,
    pub degree: String,
    pub combined_text: String,
}

impl CleanCourse {
    /// `"{name}, the student learns: {description} {objective}"`
    pub fn render_combined(name: &str, description: &str, objective: &str) -> String {
        format!("{name}, the student learns: {description} {objective}")
    }
}

impl From<CleanCourse> for RawCourse {
    fn from(c: CleanCourse) -> Self {
        RawCourse {
            id: c.id,
            name: c.name,
            description: Some(c.description),
            objective: Some(c.objective),
            year: c.year,
            degree: c.degree,
            source_language_hint: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub input: usize,
    pub missing_fields: usize,
    pub year: usize,
    pub length: usize,
    pub language: usize,
    pub duplicate: usize,
    pub retained: usize,
}

impl FilterStats {
    pub fn dropped(&self) -> usize {
        self.missing_fields + self.year + self.length + self.language + self.duplicate
    }

    pub fn is_conserved(&self) -> bool {
        self.retained + self.dropped() == self.input
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("course {id}: {field} is missing or empty")]
pub struct MissingFieldError {
    pub id: String,
    pub field: &'static str,
}

fn present(field: &Option<String>) -> Option<&str> {
    field.as_deref().filter(|s| !s.trim().is_empty())
}

/// Characters (Unicode scalar values) in description plus objective.
pub fn combined_length(course: &RawCourse) -> Result<usize, MissingFieldError> {
    let missing = |field| MissingFieldError {
        id: course.id.clone(),
        field,
    };
    let d = present(&course.description).ok_or_else(|| missing("description"))?;
    let o = present(&course.objective).ok_or_else(|| missing("objective"))?;
    Ok(d.chars().count() + o.chars().count())
}

fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// SHA-256 over lowercased name and whitespace-normalized description and
/// objective. The year is not part of the key.
pub fn dedup_key(course: &RawCourse) -> String {
    let mut h = Sha256::new();
    h.update(course.name.to_lowercase().as_bytes());
    h.update([0x1f]);
    h.update(normalize_whitespace(course.description.as_deref().unwrap_or("")).as_bytes());
    h.update([0x1f]);
    h.update(normalize_whitespace(course.objective.as_deref().unwrap_or("")).as_bytes());
    hex::encode(h.finalize())
}

/// Applies the cleaning rules. Output is sorted by (degree, name, id).
///
/// Among duplicates the offering with the greatest year survives; equal
/// years keep the first one in input order.
pub fn clean(raw: &[RawCourse], config: &FilterConfig) -> (Vec<CleanCourse>, FilterStats) {
    let mut stats = FilterStats {
        input: raw.len(),
        ..FilterStats::default()
    };
    let mut survivors: Vec<(String, &RawCourse, String)> = Vec::new();
    for course in raw {
        let Ok(len) = combined_length(course) else {
            stats.missing_fields += 1;
            continue;
        };
        if !(config.year_min..=config.year_max).contains(&course.year) {
            stats.year += 1;
            continue;
        }
        if !(config.min_combined_chars..=config.max_combined_chars).contains(&len) {
            stats.length += 1;
            continue;
        }
        let combined = CleanCourse::render_combined(
            &course.name,
            course.description.as_deref().unwrap_or_default(),
            course.objective.as_deref().unwrap_or_default(),
        );
        if detect_language(&combined) != config.required_language {
            stats.language += 1;
            continue;
        }
        survivors.push((dedup_key(course), course, combined));
    }

    let mut best: HashMap<&str, usize> = HashMap::new();
    for (i, (key, course, _)) in survivors.iter().enumerate() {
        match best.get(key.as_str()) {
            Some(&j) if survivors[j].1.year >= course.year => {}
            _ => {
                best.insert(key, i);
            }
        }
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    stats.duplicate = survivors.len() - keep.len();

    let mut out: Vec<CleanCourse> = keep
        .into_iter()
        .map(|i| {
            let (_, c, combined) = &survivors[i];
            CleanCourse {
                id: c.id.clone(),
                name: c.name.clone(),
                description: c.description.clone().unwrap_or_default(),
                objective: c.objective.clone().unwrap_or_default(),
                year: c.year,
                degree: c.degree.clone(),
                combined_text: combined.clone(),
            }
        })
        .collect();
    out.sort_by(|a, b| (&a.degree, &a.name, &a.id).cmp(&(&b.degree, &b.name, &b.id)));
    stats.retained = out.len();
    debug_assert!(stats.is_conserved());
    (out, stats)
}

/// Course counts per degree, descending, ties alphabetical, first `top_n`.
pub fn degree_distribution(courses: &[CleanCourse], top_n: usize) -> Vec<(String, usize)> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for c in courses {
        *counts.entry(c.degree.as_str()).or_default() += 1;
    }
    let mut rows: Vec<(String, usize)> = counts
        .into_iter()
        .map(|(d, n)| (d.to_string(), n))
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    rows.truncate(top_n);
    rows
}

pub fn degree_distribution_csv(rows: &[(String, usize)]) -> String {
    let mut out = String::from("degree,count\n");
    for (degree, count) in rows {
        out.push_str(&format!("{},{count}\n", csv_field(degree)));
    }
    out
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
