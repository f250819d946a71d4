//! Human corrections overlay.
//!
//! One JSON record per line: `{"course_id": "C1", "labels": [3, 8]}`, with an
//! optional `"source"` naming the reviewer or ticket. Without it the source
//! id defaults to `<file>:<line>`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{LabeledCourse, Provenance};
use crate::io::IoError;
use crate::labels::{LabelError, LabelSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub course_id: String,
    pub labels: Vec<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
}

/// A validated overlay entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Correction {
    pub course_id: String,
    pub labels: LabelSet,
    pub source: String,
}

#[derive(Debug, Error)]
pub enum CorrectionError {
    #[error("corrections reference unknown course ids: {}", .0.join(", "))]
    UnknownCourse(Vec<String>),
    #[error("correction for {course_id}: {reason}")]
    InvalidLabel { course_id: String, reason: String },
    #[error("course {0} is corrected more than once")]
    Duplicate(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl Correction {
    pub fn from_record(record: CorrectionRecord, default_source: String) -> Result<Self, CorrectionError> {
        let invalid = |reason: String| CorrectionError::InvalidLabel {
            course_id: record.course_id.clone(),
            reason,
        };
        let labels = LabelSet::new(record.labels.iter().copied()).map_err(|e: LabelError| invalid(e.to_string()))?;
        if labels.is_empty() {
            return Err(invalid("label set is empty".into()));
        }
        Ok(Correction {
            source: record.source.clone().unwrap_or(default_source),
            course_id: record.course_id,
            labels,
        })
    }
}

pub fn read_corrections(path: &Path) -> Result<Vec<Correction>, CorrectionError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: CorrectionRecord = serde_json::from_str(line).map_err(|source| IoError::Json {
            path: path.to_path_buf(),
            line: idx + 1,
            source,
        })?;
        out.push(Correction::from_record(record, format!("{name}:{}", idx + 1))?);
    }
    Ok(out)
}

/// Replaces labels of every course named in `overlay`. Untouched entries are
/// returned as they were.
pub fn apply_corrections(
    labeled: &[LabeledCourse],
    overlay: &[Correction],
) -> Result<Vec<LabeledCourse>, CorrectionError> {
    let mut by_id: HashMap<&str, &Correction> = HashMap::new();
    for c in overlay {
        if by_id.insert(&c.course_id, c).is_some() {
            return Err(CorrectionError::Duplicate(c.course_id.clone()));
        }
    }
    let known: HashSet<&str> = labeled.iter().map(|l| l.course.id.as_str()).collect();
    let mut unknown: Vec<String> = overlay
        .iter()
        .filter(|c| !known.contains(c.course_id.as_str()))
        .map(|c| c.course_id.clone())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        return Err(CorrectionError::UnknownCourse(unknown));
    }
    Ok(labeled
        .iter()
        .map(|entry| match by_id.get(entry.course.id.as_str()) {
            Some(c) => LabeledCourse {
                labels: c.labels.encode(),
                provenance: Provenance::Corrected,
                correction_source: Some(c.source.clone()),
                needs_review: false,
                ..entry.clone()
            },
            None => entry.clone(),
        })
        .collect())
}
