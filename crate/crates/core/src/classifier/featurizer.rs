//! TF-IDF featurization with document-frequency pruning.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Sparse vector as (column, value) pairs with strictly increasing columns.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub min_token_len: usize,
    pub min_df: usize,
    pub bigrams: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig {
            min_token_len: 2,
            min_df: 2,
            bigrams: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FeaturizerError {
    #[error("cannot fit a featurizer on an empty corpus")]
    EmptyCorpus,
    #[error("no token reaches the minimum document frequency of {0}")]
    EmptyVocabulary(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Featurizer {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    document_frequencies: Vec<u64>,
    idf: Vec<f64>,
    corpus_size: u64,
    config: FeaturizerConfig,
}

/// Lowercased alphabetic runs of at least `min_len` characters, plus adjacent
/// pairs when `bigrams` is set.
pub fn tokenize(text: &str, config: &FeaturizerConfig) -> Vec<String> {
    let unigrams: Vec<String> = text
        .split(|c: char| !c.is_alphabetic())
        .filter(|w| w.chars().count() >= config.min_token_len)
        .map(str::to_lowercase)
        .collect();
    if !config.bigrams {
        return unigrams;
    }
    let pairs: Vec<String> = unigrams.windows(2).map(|w| format!("{} {}", w[0], w[1])).collect();
    let mut all = unigrams;
    all.extend(pairs);
    all
}

/// `ln((1 + n) / (1 + df)) + 1`
pub fn smooth_idf(corpus_size: u64, df: u64) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl Featurizer {
    pub fn fit<S: AsRef<str>>(corpus: &[S], config: FeaturizerConfig) -> Result<Self, FeaturizerError> {
        if corpus.is_empty() {
            return Err(FeaturizerError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, u64> = BTreeMap::new();
        for doc in corpus {
            let unique: HashSet<String> = tokenize(doc.as_ref(), &config).into_iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let kept: Vec<(String, u64)> = df
            .into_iter()
            .filter(|(_, n)| *n as usize >= config.min_df)
            .collect();
        if kept.is_empty() {
            return Err(FeaturizerError::EmptyVocabulary(config.min_df));
        }
        let (tokens, dfs) = kept.into_iter().unzip();
        Ok(Self::from_parts(tokens, dfs, corpus.len() as u64, config))
    }

    /// Rebuilds a fitted featurizer from its stored vocabulary. `tokens` must
    /// be sorted and unique.
    pub fn from_parts(tokens: Vec<String>, document_frequencies: Vec<u64>, corpus_size: u64, config: FeaturizerConfig) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let idf = document_frequencies
            .iter()
            .map(|&d| smooth_idf(corpus_size, d))
            .collect();
        Featurizer {
            tokens,
            index,
            document_frequencies,
            idf,
            corpus_size,
            config,
        }
    }

    pub fn vocabulary_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn column(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn document_frequencies(&self) -> &[u64] {
        &self.document_frequencies
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn config(&self) -> &FeaturizerConfig {
        &self.config
    }

    /// Term frequency times idf, scaled to unit L2 norm. Unknown tokens are
    /// ignored; a text with none of the vocabulary maps to the empty vector.
    pub fn transform(&self, text: &str) -> SparseVec {
        let mut tf: BTreeMap<u32, f64> = BTreeMap::new();
        for t in tokenize(text, &self.config) {
            if let Some(&col) = self.index.get(&t) {
                *tf.entry(col).or_default() += 1.0;
            }
        }
        let mut v: SparseVec = tf
            .into_iter()
            .map(|(col, n)| (col, n * self.idf[col as usize]))
            .collect();
        let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, x) in &mut v {
                *x /= norm;
            }
        }
        v
    }
}
