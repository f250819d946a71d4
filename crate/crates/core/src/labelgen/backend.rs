//! Label backends: a live HTTP completion endpoint and an offline keyword
//! oracle.

use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

use serde_json::Value;
use thiserror::Error;

use super::{LlmParams, Provenance};
use crate::labels::{is_valid_goal, NUM_GOALS};
use crate::preprocess::{words, CleanCourse};

/// Environment variable holding the live backend bearer token.
pub const LLM_TOKEN_ENV: &str = "SDG_LLM_TOKEN";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    /// This request failed; retrying may help.
    #[error("transient backend failure: {0}")]
    Transient(String),
    /// The run cannot proceed (bad credentials, unusable endpoint).
    #[error("backend unavailable: {0}")]
    Fatal(String),
}

/// Produces a free-text response listing goals for one course.
pub trait LabelBackend: Sync {
    fn provenance(&self) -> Provenance;

    /// Deterministic backends are not retried on unusable answers.
    fn is_deterministic(&self) -> bool {
        false
    }

    fn complete(
        &self,
        course: &CleanCourse,
        prompt: &str,
        params: &LlmParams,
    ) -> Result<String, BackendError>;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("keyword table line {line}: {reason}")]
pub struct KeywordTableError {
    pub line: usize,
    pub reason: String,
}

const DEFAULT_KEYWORDS: &str = include_str!("../../data/sdg_keywords.tsv");

/// Offline stand-in for the LLM: goals whose terms occur in the course text,
/// ranked by number of occurrences (ties to the lower goal), capped.
#[derive(Debug, Clone)]
pub struct KeywordOracle {
    terms: HashMap<String, u8>,
    /// Terms in table order.
    listed: Vec<(u8, String)>,
    max_labels: usize,
}

impl KeywordOracle {
    /// Parses `goal<TAB>term,term,...` lines. `#` starts a comment line.
    pub fn from_table(table: &str, max_labels: usize) -> Result<Self, KeywordTableError> {
        let mut terms = HashMap::new();
        let mut listed = Vec::new();
        for (idx, line) in table.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: String| KeywordTableError {
                line: line_no,
                reason,
            };
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (goal, list) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| err("expected goal and term list".into()))?;
            let goal: i64 = goal
                .parse()
                .map_err(|_| err(format!("invalid goal {goal:?}")))?;
            if !is_valid_goal(goal) {
                return Err(err(format!("goal {goal} may not be used as a label")));
            }
            for term in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                let term = term.to_lowercase();
                if let Some(prev) = terms.insert(term.clone(), goal as u8) {
                    return Err(err(format!("term {term:?} already mapped to goal {prev}")));
                }
                listed.push((goal as u8, term));
            }
        }
        Ok(KeywordOracle {
            terms,
            listed,
            max_labels,
        })
    }

    pub fn shipped(max_labels: usize) -> Self {
        Self::from_table(DEFAULT_KEYWORDS, max_labels).expect("shipped keyword table is valid")
    }

    /// Goals ranked by match count, strongest first.
    pub fn rank(&self, text: &str) -> Vec<(u8, usize)> {
        let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
        for w in words(text) {
            if let Some(&g) = self.terms.get(&w) {
                *counts.entry(g).or_default() += 1;
            }
        }
        let mut ranked: Vec<(u8, usize)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(self.max_labels);
        ranked
    }

    /// A goal's terms in table order.
    pub fn terms_for(&self, goal: u8) -> Vec<&str> {
        self.listed
            .iter()
            .filter(|(g, _)| *g == goal)
            .map(|(_, t)| t.as_str())
            .collect()
    }

    pub fn term_goal(&self, term: &str) -> Option<u8> {
        self.terms.get(term).copied()
    }
}

impl LabelBackend for KeywordOracle {
    fn provenance(&self) -> Provenance {
        Provenance::Oracle
    }

    fn is_deterministic(&self) -> bool {
        true
    }

    fn complete(&self, course: &CleanCourse, _: &str, _: &LlmParams) -> Result<String, BackendError> {
        Ok(self
            .rank(&course.combined_text)
            .iter()
            .map(|(g, _)| g.to_string())
            .collect::<Vec<_>>()
            .join(", "))
    }
}

/// Single POST per course to a completion endpoint.
///
/// Request body:
/// `{"model": .., "prompt": .., "temperature": .., "max_output_tokens": ..}`.
/// The response text is found by walking `response_path`, a dot-separated
/// list of object keys and array indices (e.g. `predictions.0.content`).
pub struct LiveBackend {
    endpoint: String,
    auth_token: Option<String>,
    response_path: Vec<String>,
    agent: ureq::Agent,
}

impl LiveBackend {
    pub fn new(
        endpoint: &str,
        auth_token: Option<String>,
        response_path: &str,
        timeout: Duration,
    ) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        LiveBackend {
            endpoint: endpoint.to_string(),
            auth_token,
            response_path: response_path
                .split('.')
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
            agent,
        }
    }

    pub fn request_body(prompt: &str, params: &LlmParams) -> Value {
        serde_json::json!({
            "model": params.model_name,
            "prompt": prompt,
            "temperature": params.temperature,
            "max_output_tokens": params.token_limit,
        })
    }
}

/// Walks a dotted path through nested objects and arrays.
pub fn extract_field<'a>(value: &'a Value, path: &[String]) -> Option<&'a str> {
    let mut cur = value;
    for seg in path {
        cur = match cur {
            Value::Array(items) => items.get(seg.parse::<usize>().ok()?)?,
            Value::Object(map) => map.get(seg)?,
            _ => return None,
        };
    }
    cur.as_str()
}

impl LabelBackend for LiveBackend {
    fn provenance(&self) -> Provenance {
        Provenance::Generated
    }

    fn complete(
        &self,
        _: &CleanCourse,
        prompt: &str,
        params: &LlmParams,
    ) -> Result<String, BackendError> {
        let mut req = self.agent.post(&self.endpoint);
        if let Some(token) = &self.auth_token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .send_json(Self::request_body(prompt, params))
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 401 || status == 403 {
            return Err(BackendError::Fatal(format!("HTTP {status}: check credentials")));
        }
        if status >= 400 {
            return Err(BackendError::Transient(format!("HTTP {status}")));
        }
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| BackendError::Transient(e.to_string()))?;
        let json: Value = serde_json::from_str(&body)
            .map_err(|e| BackendError::Transient(format!("undecodable response: {e}")))?;
        extract_field(&json, &self.response_path)
            .map(str::to_string)
            .ok_or_else(|| {
                BackendError::Transient(format!(
                    "response has no text at {:?}",
                    self.response_path.join(".")
                ))
            })
    }
}

/// Sanity bound for a keyword table: at least one term per selectable goal.
pub fn covers_all_goals(oracle: &KeywordOracle) -> bool {
    (1..=NUM_GOALS as u8)
        .filter(|&g| is_valid_goal(g as i64))
        .all(|g| !oracle.terms_for(g).is_empty())
}
