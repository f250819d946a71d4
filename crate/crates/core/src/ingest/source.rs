//! Where catalog pages come from: a REST endpoint or a local record file.

use std::path::{Path, PathBuf};
use std::time::Duration;

use super::page::render_catalog_page;
use super::{RawCourse, YearRange};

/// Position of a page request in the catalog.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cursor {
    Offset(usize),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageRequest {
    pub cursor: Cursor,
    pub limit: usize,
    pub years: YearRange,
}

/// Transport-level failure of a single attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FetchError {
    /// Worth retrying: connection errors, 5xx, 429.
    Transient(String),
    /// Not worth retrying: 4xx other than 429, unreadable local file.
    Fatal(String),
}

impl std::fmt::Display for FetchError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FetchError::Transient(m) => write!(f, "transient: {m}"),
            FetchError::Fatal(m) => write!(f, "fatal: {m}"),
        }
    }
}

/// Returns the raw body of one catalog page.
pub trait PageSource: Sync {
    fn fetch_page(&self, request: &PageRequest) -> Result<Vec<u8>, FetchError>;
}

/// `GET {base_url}/courses?year_from=..&year_to=..&limit=..&(offset=..|page_token=..)`
pub struct HttpSource {
    base_url: String,
    auth_token: Option<String>,
    agent: ureq::Agent,
}

impl HttpSource {
    pub fn new(base_url: &str, auth_token: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build()
            .into();
        HttpSource {
            base_url: base_url.trim_end_matches('/').to_string(),
            auth_token,
            agent,
        }
    }

    fn url(&self, request: &PageRequest) -> String {
        let mut url = format!(
            "{}/courses?year_from={}&year_to={}&limit={}",
            self.base_url, request.years.start, request.years.end, request.limit
        );
        match &request.cursor {
            Cursor::Offset(o) => url.push_str(&format!("&offset={o}")),
            Cursor::Token(t) => {
                url.push_str("&page_token=");
                url.push_str(&percent_encode(t));
            }
        }
        url
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.' | b'~') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

impl PageSource for HttpSource {
    fn fetch_page(&self, request: &PageRequest) -> Result<Vec<u8>, FetchError> {
        let mut req = self.agent.get(&self.url(request));
        if let Some(token) = &self.auth_token {
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req
            .call()
            .map_err(|e| FetchError::Transient(e.to_string()))?;
        let status = resp.status().as_u16();
        if status == 429 || status >= 500 {
            return Err(FetchError::Transient(format!("HTTP {status}")));
        }
        if status >= 400 {
            return Err(FetchError::Fatal(format!("HTTP {status}")));
        }
        resp.body_mut()
            .read_to_vec()
            .map_err(|e| FetchError::Transient(e.to_string()))
    }
}

/// Serves a local line-delimited file of raw records through the same page
/// protocol, with offset paging. Lets the pipeline run fully offline.
pub struct FileSource {
    path: PathBuf,
    records: Vec<RawCourse>,
}

impl FileSource {
    pub fn open(path: &Path) -> Result<Self, crate::io::IoError> {
        let records = crate::io::read_jsonl(path)?;
        Ok(FileSource {
            path: path.to_path_buf(),
            records,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl PageSource for FileSource {
    fn fetch_page(&self, request: &PageRequest) -> Result<Vec<u8>, FetchError> {
        let offset = match request.cursor {
            Cursor::Offset(o) => o,
            Cursor::Token(_) => {
                return Err(FetchError::Fatal(
                    "local catalogs do not issue page tokens".into(),
                ))
            }
        };
        let in_range: Vec<&RawCourse> = self
            .records
            .iter()
            .filter(|r| request.years.contains(r.year))
            .collect();
        let page: Vec<RawCourse> = in_range
            .iter()
            .skip(offset)
            .take(request.limit)
            .map(|r| (*r).clone())
            .collect();
        Ok(render_catalog_page(&page, None))
    }
}
