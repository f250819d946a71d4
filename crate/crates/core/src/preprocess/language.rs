//! Stopword-count language identification for English and Finnish.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const ENGLISH_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");
const FINNISH_STOPWORDS: &str = include_str!("../../data/stopwords_fi.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    English,
    Finnish,
    Unknown,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::English => "english",
            Language::Finnish => "finnish",
            Language::Unknown => "unknown",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Language::English),
            "finnish" | "fi" => Ok(Language::Finnish),
            "unknown" => Ok(Language::Unknown),
            other => Err(format!("unknown language {other:?}")),
        }
    }
}

fn parse_list(text: &'static str) -> HashSet<&'static str> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

pub fn english_stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| parse_list(ENGLISH_STOPWORDS))
}

pub fn finnish_stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| parse_list(FINNISH_STOPWORDS))
}

/// Lowercase runs of alphabetic characters.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphabetic())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// The language whose stopword list has strictly more hits; `Unknown` on a
/// tie (including zero hits).
pub fn detect_language(text: &str) -> Language {
    let (en, fi) = (english_stopwords(), finnish_stopwords());
    let (mut en_hits, mut fi_hits) = (0usize, 0usize);
    for w in words(text) {
        en_hits += usize::from(en.contains(w.as_str()));
        fi_hits += usize::from(fi.contains(w.as_str()));
    }
    match en_hits.cmp(&fi_hits) {
        std::cmp::Ordering::Greater => Language::English,
        std::cmp::Ordering::Less => Language::Finnish,
        std::cmp::Ordering::Equal => Language::Unknown,
    }
}
