//! Wire format of one catalog page.
//!
//! The upstream catalog's real schema is not public, so this is a stand-in
//! documented in the README:
//!
//! ```json
//! {"courses": [{"id": "C1", "name": "...", "description": "...",
//!               "objective": null, "year": 2022, "degree": "...",
//!               "language": "en"}],
//!  "next_page_token": "opaque"}
//! ```
//!
//! `description`, `objective`, `language` and `next_page_token` may be
//! missing or null. `id` may be a string or an integer.

use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use super::RawCourse;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("malformed catalog page: {reason}")]
pub struct PageFormatError {
    pub reason: String,
}

impl PageFormatError {
    fn new(reason: impl Into<String>) -> Self {
        PageFormatError {
            reason: reason.into(),
        }
    }
}

#[derive(Deserialize)]
struct WirePage {
    courses: Vec<WireCourse>,
    #[serde(default)]
    next_page_token: Option<String>,
}

#[derive(Deserialize)]
struct WireCourse {
    id: Value,
    name: String,
    #[serde(default)]
    description: Option<String>,
    #[serde(default)]
    objective: Option<String>,
    year: i64,
    degree: String,
    #[serde(default)]
    language: Option<String>,
}

/// Records of one page plus the continuation token, if the server sent one.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogPage {
    pub courses: Vec<RawCourse>,
    pub next_page_token: Option<String>,
}

pub fn parse_catalog_page(payload: &[u8]) -> Result<CatalogPage, PageFormatError> {
    let page: WirePage =
        serde_json::from_slice(payload).map_err(|e| PageFormatError::new(e.to_string()))?;
    let mut courses = Vec::with_capacity(page.courses.len());
    for (i, c) in page.courses.into_iter().enumerate() {
        let id = match c.id {
            Value::String(s) => s,
            Value::Number(n) => n.to_string(),
            other => {
                return Err(PageFormatError::new(format!(
                    "record {i}: id must be a string or integer, got {other}"
                )))
            }
        };
        if id.is_empty() {
            return Err(PageFormatError::new(format!("record {i}: empty id")));
        }
        if !(1000..=9999).contains(&c.year) {
            return Err(PageFormatError::new(format!(
                "record {i} ({id}): year {} is not a four-digit year",
                c.year
            )));
        }
        courses.push(RawCourse {
            id,
            name: c.name,
            description: c.description,
            objective: c.objective,
            year: c.year as u16,
            degree: c.degree,
            source_language_hint: c.language,
        });
    }
    Ok(CatalogPage {
        courses,
        next_page_token: page.next_page_token.filter(|t| !t.is_empty()),
    })
}

/// Serializes records in the page wire format. Used by the local-file source
/// and by test servers.
pub fn render_catalog_page(courses: &[RawCourse], next_page_token: Option<&str>) -> Vec<u8> {
    let courses: Vec<Value> = courses
        .iter()
        .map(|c| {
            serde_json::json!({
                "id": c.id,
                "name": c.name,
                "description": c.description,
                "objective": c.objective,
                "year": c.year,
                "degree": c.degree,
                "language": c.source_language_hint,
            })
        })
        .collect();
    let mut page = serde_json::json!({ "courses": courses });
    if let Some(token) = next_page_token {
        page["next_page_token"] = Value::String(token.to_string());
    }
    serde_json::to_vec(&page).expect("in-memory serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_objective_is_absent_not_empty() {
        let body = br#"{"courses":[{"id":"C1","name":"N","description":"d","year":2022,"degree":"ICT"}]}"#;
        let page = parse_catalog_page(body).unwrap();
        assert_eq!(page.courses.len(), 1);
        assert_eq!(page.courses[0].objective, None);
        assert_eq!(page.courses[0].description.as_deref(), Some("d"));
        assert_eq!(page.next_page_token, None);
    }

    #[test]
    fn null_and_empty_are_distinct() {
        let body = br#"{"courses":[{"id":7,"name":"N","description":null,"objective":"","year":2022,"degree":"ICT"}]}"#;
        let page = parse_catalog_page(body).unwrap();
        assert_eq!(page.courses[0].id, "7");
        assert_eq!(page.courses[0].description, None);
        assert_eq!(page.courses[0].objective.as_deref(), Some(""));
    }

    #[test]
    fn token_returned_verbatim() {
        let body = br#"{"courses":[],"next_page_token":"abc==/+"}"#;
        let page = parse_catalog_page(body).unwrap();
        assert_eq!(page.next_page_token.as_deref(), Some("abc==/+"));
    }

    #[test]
    fn truncated_body_is_malformed() {
        let body = br#"{"courses":[{"id":"C1","name":"N""#;
        assert!(parse_catalog_page(body).is_err());
    }

    #[test]
    fn bad_year_is_malformed() {
        let body = br#"{"courses":[{"id":"C1","name":"N","year":21,"degree":"D"}]}"#;
        let err = parse_catalog_page(body).unwrap_err();
        assert!(err.reason.contains("four-digit"), "{err}");
    }

    #[test]
    fn render_then_parse() {
        let c = RawCourse {
            id: "X".into(),
            name: "Name".into(),
            description: None,
            objective: Some(String::new()),
            year: 2023,
            degree: "D".into(),
            source_language_hint: Some("en".into()),
        };
        let page = parse_catalog_page(&render_catalog_page(std::slice::from_ref(&c), Some("t"))).unwrap();
        assert_eq!(page.courses, vec![c]);
        assert_eq!(page.next_page_token.as_deref(), Some("t"));
    }
}
