//! Catalog ingestion: paginated fetch with retry, and the raw record store.

mod page;
mod source;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, IoError};

pub use page::{parse_catalog_page, render_catalog_page, CatalogPage, PageFormatError};
pub use source::{Cursor, FetchError, FileSource, HttpSource, PageRequest, PageSource};

/// Environment variable holding the catalog API bearer token.
pub const API_TOKEN_ENV: &str = "SDG_API_TOKEN";

/// Guards against servers that never stop handing out tokens.
const MAX_PAGES: usize = 100_000;

/// One catalog record as fetched. `None` and `Some("")` are distinct.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCourse {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    pub year: u16,
    pub degree: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_language_hint: Option<String>,
}

/// Inclusive range of academic years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: u16,
    pub end: u16,
}

impl YearRange {
    pub fn new(start: u16, end: u16) -> Result<Self, String> {
        if start > end {
            return Err(format!("empty year range {start}..{end}"));
        }
        Ok(YearRange { start, end })
    }

    pub fn contains(&self, year: u16) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for YearRange {
    type Err = String;

    /// Accepts `2021..2023`, `2021..=2023` or a single year.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u16>()
                .map_err(|_| format!("invalid year {t:?} in {s:?}"))
        };
        match s.split_once("..") {
            Some((a, b)) => YearRange::new(parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let y = parse(s)?;
                YearRange::new(y, y)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiConfig {
    pub base_url: String,
    pub page_size: usize,
    pub max_retries: u32,
    #[serde(with = "millis")]
    pub backoff_base: Duration,
    /// Never serialized; comes from the environment.
    #[serde(skip)]
    pub auth_token: Option<String>,
    /// Maximum page requests in flight when offset paging.
    pub max_in_flight: usize,
    #[serde(with = "millis")]
    pub timeout: Duration,
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_millis(u64::deserialize(d)?))
    }
}

impl Default for ApiConfig {
    fn default() -> Self {
        ApiConfig {
            base_url: String::new(),
            page_size: 100,
            max_retries: 3,
            backoff_base: Duration::from_millis(200),
            auth_token: None,
            max_in_flight: 4,
            timeout: Duration::from_secs(30),
        }
    }
}

impl ApiConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.page_size == 0 {
            return Err(IngestError::Config("page_size must be at least 1".into()));
        }
        if self.max_retries > 0 && self.backoff_base.is_zero() {
            return Err(IngestError::Config(
                "backoff_base must be positive when retries are enabled".into(),
            ));
        }
        if self.max_in_flight == 0 {
            return Err(IngestError::Config("max_in_flight must be at least 1".into()));
        }
        Ok(())
    }

    fn backoff(&self, failed_attempt: u32) -> Duration {
        self.backoff_base
            .saturating_mul(1u32 << failed_attempt.saturating_sub(1).min(16))
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("invalid ingest configuration: {0}")]
    Config(String),
    #[error("page {page}: network failure after {attempts} attempt(s): {message}")]
    Network {
        page: usize,
        attempts: u32,
        message: String,
    },
    #[error("page {page}: {source}")]
    MalformedPage {
        page: usize,
        #[source]
        source: PageFormatError,
    },
    #[error("duplicate course id {0:?} in catalog")]
    DuplicateId(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Per-page bookkeeping written to the ingest sidecar log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageLog {
    pub page: usize,
    pub cursor: String,
    pub received: usize,
    pub kept: usize,
    pub attempts: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestLog {
    pub pages: Vec<PageLog>,
}

impl IngestLog {
    pub fn total_attempts(&self) -> u32 {
        self.pages.iter().map(|p| p.attempts).sum()
    }

    pub fn total_kept(&self) -> usize {
        self.pages.iter().map(|p| p.kept).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for p in &self.pages {
            out.push_str(&format!(
                "page={} cursor={} received={} kept={} attempts={}\n",
                p.page, p.cursor, p.received, p.kept, p.attempts
            ));
        }
        out.push_str(&format!(
            "total pages={} kept={} attempts={}\n",
            self.pages.len(),
            self.total_kept(),
            self.total_attempts()
        ));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestOutcome {
    /// Records in page order, then record order within a page.
    pub courses: Vec<RawCourse>,
    pub log: IngestLog,
}

struct FetchedPage {
    page: CatalogPage,
    attempts: u32,
}

fn fetch_with_retry(
    source: &dyn PageSource,
    config: &ApiConfig,
    index: usize,
    request: &PageRequest,
) -> Result<FetchedPage, IngestError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match source.fetch_page(request) {
            Ok(body) => {
                let page = parse_catalog_page(&body)
                    .map_err(|source| IngestError::MalformedPage { page: index, source })?;
                return Ok(FetchedPage { page, attempts });
            }
            Err(FetchError::Transient(message)) if attempts <= config.max_retries => {
                log::warn!("page {index} attempt {attempts} failed: {message}; retrying");
                thread::sleep(config.backoff(attempts));
            }
            Err(FetchError::Transient(message)) | Err(FetchError::Fatal(message)) => {
                return Err(IngestError::Network {
                    page: index,
                    attempts,
                    message,
                })
            }
        }
    }
}

/// Fetches every record in `years` from `source`.
///
/// The first page is requested at offset 0. If the server answers with a
/// continuation token, paging follows tokens sequentially. Otherwise pages
/// are requested by offset, up to `max_in_flight` at a time, until a short
/// page is seen. Results are reassembled in page order either way.
pub fn fetch_courses(
    source: &dyn PageSource,
    config: &ApiConfig,
    years: YearRange,
) -> Result<IngestOutcome, IngestError> {
    config.validate()?;
    let mut courses = Vec::new();
    let mut log = IngestLog::default();
    let mut seen = std::collections::HashSet::new();

    let mut accept = |index: usize, cursor: &Cursor, fetched: FetchedPage| {
        let received = fetched.page.courses.len();
        let mut kept = 0;
        for c in fetched.page.courses {
            if !years.contains(c.year) {
                continue;
            }
            if !seen.insert(c.id.clone()) {
                return Err(IngestError::DuplicateId(c.id));
            }
            kept += 1;
            courses.push(c);
        }
        log.pages.push(PageLog {
            page: index,
            cursor: match cursor {
                Cursor::Offset(o) => format!("offset:{o}"),
                Cursor::Token(t) => format!("token:{t}"),
            },
            received,
            kept,
            attempts: fetched.attempts,
        });
        Ok(received)
    };

    let request = |cursor: Cursor| PageRequest {
        cursor,
        limit: config.page_size,
        years,
    };

    let first_cursor = Cursor::Offset(0);
    let first = fetch_with_retry(source, config, 0, &request(first_cursor.clone()))?;
    let mut token = first.page.next_page_token.clone();
    let first_len = accept(0, &first_cursor, first)?;

    if token.is_some() {
        let mut index = 1;
        let mut used = std::collections::HashSet::new();
        while let Some(t) = token.take() {
            if !used.insert(t.clone()) || index >= MAX_PAGES {
                return Err(IngestError::MalformedPage {
                    page: index,
                    source: PageFormatError {
                        reason: format!("continuation token {t:?} repeats"),
                    },
                });
            }
            let cursor = Cursor::Token(t);
            let fetched = fetch_with_retry(source, config, index, &request(cursor.clone()))?;
            token = fetched.page.next_page_token.clone();
            accept(index, &cursor, fetched)?;
            index += 1;
        }
        return Ok(IngestOutcome { courses, log });
    }

    if first_len < config.page_size {
        return Ok(IngestOutcome { courses, log });
    }

    let mut next = 1;
    'windows: while next < MAX_PAGES {
        let window: Vec<usize> = (next..next + config.max_in_flight).collect();
        let results: Vec<Result<FetchedPage, IngestError>> = thread::scope(|s| {
            let handles: Vec<_> = window
                .iter()
                .map(|&index| {
                    let req = request(Cursor::Offset(index * config.page_size));
                    s.spawn(move || fetch_with_retry(source, config, index, &req))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("page worker panicked"))
                .collect()
        });
        // Reorder buffer: pages are consumed strictly in index order.
        for (&index, result) in window.iter().zip(results) {
            let fetched = result?;
            let len = accept(index, &Cursor::Offset(index * config.page_size), fetched)?;
            if len < config.page_size {
                break 'windows;
            }
        }
        next += config.max_in_flight;
    }
    Ok(IngestOutcome { courses, log })
}

/// Sorts by (year, id) and writes one JSON record per line.
pub fn write_raw_store(path: &Path, courses: &[RawCourse]) -> Result<(), IoError> {
    let mut sorted: Vec<&RawCourse> = courses.iter().collect();
    sorted.sort_by(|a, b| (a.year, &a.id).cmp(&(b.year, &b.id)));
    io::write_jsonl(path, &sorted)
}

pub fn read_raw_store(path: &Path) -> Result<Vec<RawCourse>, IoError> {
    io::read_jsonl(path)
}

/// Sidecar log path: `raw.jsonl` → `raw.log`.
pub fn log_path_for(store: &Path) -> std::path::PathBuf {
    store.with_extension("log")
}
