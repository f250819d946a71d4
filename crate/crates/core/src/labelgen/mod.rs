//! Weak labeling: prompt each course, parse the answer into goals, queue the
//! failures for human review.

mod backend;
mod corrections;
mod parse;
mod prompt;

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::labels::LabelVector;
use crate::preprocess::CleanCourse;

pub use backend::{
    covers_all_goals, extract_field, BackendError, KeywordOracle, KeywordTableError, LabelBackend,
    LiveBackend, LLM_TOKEN_ENV,
};
pub use corrections::{
    apply_corrections, read_corrections, Correction, CorrectionError, CorrectionRecord,
};
pub use parse::{parse_sdg_response, parse_sdg_response_bytes, EmptyLabelError, DEFAULT_MAX_LABELS};
pub use prompt::render_prompt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmParams {
    pub temperature: f64,
    pub token_limit: u32,
    pub model_name: String,
}

impl Default for LlmParams {
    fn default() -> Self {
        LlmParams {
            temperature: 0.2,
            token_limit: 500,
            model_name: "text-bison-32k".into(),
        }
    }
}

impl LlmParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 1]", self.temperature));
        }
        if self.token_limit == 0 {
            return Err("token_limit must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Generated,
    Corrected,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCourse {
    #[serde(flatten)]
    pub course: CleanCourse,
    pub labels: LabelVector,
    pub provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction_source: Option<String>,
    #[serde(default)]
    pub attempts: u32,
    /// No usable labels after all attempts; routed to the corrections queue.
    #[serde(default)]
    pub needs_review: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOptions {
    pub max_labels: usize,
    pub max_retries: u32,
    pub retry_delay: Duration,
    pub max_in_flight: usize,
}

impl Default for GenerationOptions {
    fn default() -> Self {
        GenerationOptions {
            max_labels: DEFAULT_MAX_LABELS,
            max_retries: 2,
            retry_delay: Duration::from_millis(500),
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutcome {
    /// One entry per input course, in input order.
    pub labeled: Vec<LabeledCourse>,
    /// Every response received, per course, in attempt order.
    pub responses: Vec<Vec<String>>,
}

impl GenerationOutcome {
    pub fn review_queue(&self) -> impl Iterator<Item = &LabeledCourse> {
        self.labeled.iter().filter(|l| l.needs_review)
    }
}

/// A labeled course with the raw text of every attempt.
type Labeled = (LabeledCourse, Vec<String>);

fn label_one(
    course: &CleanCourse,
    backend: &dyn LabelBackend,
    params: &LlmParams,
    options: &GenerationOptions,
) -> Result<Labeled, BackendError> {
    let prompt = render_prompt(course);
    let max_attempts = if backend.is_deterministic() {
        1
    } else {
        options.max_retries + 1
    };
    let mut responses = Vec::new();
    let mut attempts = 0;
    let mut labels = None;
    while attempts < max_attempts {
        attempts += 1;
        match backend.complete(course, &prompt, params) {
            Ok(text) => {
                let parsed = parse_sdg_response(&text, options.max_labels);
                responses.push(text);
                if let Ok(set) = parsed {
                    labels = Some(set);
                    break;
                }
                log::debug!("course {}: attempt {attempts} had no usable goals", course.id);
            }
            Err(BackendError::Transient(msg)) => {
                log::warn!("course {}: attempt {attempts} failed: {msg}", course.id);
            }
            Err(fatal) => return Err(fatal),
        }
        if attempts < max_attempts {
            thread::sleep(options.retry_delay);
        }
    }
    let needs_review = labels.is_none();
    Ok((
        LabeledCourse {
            course: course.clone(),
            labels: labels.map(|s| s.encode()).unwrap_or_default(),
            provenance: backend.provenance(),
            raw_response: responses.last().cloned(),
            correction_source: None,
            attempts,
            needs_review,
        },
        responses,
    ))
}

/// Labels every course with up to `max_in_flight` concurrent backend calls.
///
/// Output order matches input order. Courses without a usable answer after
/// all retries come back with `needs_review` set and an all-zero vector. A
/// fatal backend error stops the whole run.
pub fn generate_labels(
    courses: &[CleanCourse],
    backend: &dyn LabelBackend,
    params: &LlmParams,
    options: &GenerationOptions,
) -> Result<GenerationOutcome, BackendError> {
    params.validate().map_err(BackendError::Fatal)?;
    if options.max_labels == 0 {
        return Err(BackendError::Fatal("max_labels must be at least 1".into()));
    }
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let fatal: Mutex<Option<BackendError>> = Mutex::new(None);
    let slots: Vec<Mutex<Option<Labeled>>> = courses.iter().map(|_| Mutex::new(None)).collect();
    let workers = options.max_in_flight.clamp(1, courses.len().max(1));

    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    return;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(course) = courses.get(i) else { return };
                match label_one(course, backend, params, options) {
                    Ok(done) => *slots[i].lock().unwrap() = Some(done),
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        fatal.lock().unwrap().get_or_insert(e);
                        return;
                    }
                }
            });
        }
    });

    if let Some(e) = fatal.into_inner().unwrap() {
        return Err(e);
    }
    let (labeled, responses) = slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every course processed"))
        .unzip();
    Ok(GenerationOutcome { labeled, responses })
}

/// File-system-safe name for a course's archived responses.
pub fn response_file_name(course_id: &str) -> String {
    let safe: String = course_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.') { c } else { '_' })
        .collect();
    format!("{safe}.txt")
}

/// Archive text for one course: every attempt's response, separated.
pub fn render_response_archive(responses: &[String]) -> String {
    let mut out = String::new();
    for (i, r) in responses.iter().enumerate() {
        out.push_str(&format!("--- attempt {} ---\n{r}\n", i + 1));
    }
    out
}
