//! Binary model file.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic        8 bytes  "SDGCLF\0\0"
//! version      u32      = 1
//! corpus_size  u64
//! min_df       u64
//! min_tok_len  u32
//! bigrams      u8
//! vocab_len    u64
//!   token      u32 byte length + UTF-8 bytes
//!   df         u64
//! rows         u32      = 17
//! columns      u64      = vocab_len + 1
//! weights      rows * columns f64, row-major, bias last
//! epochs       u32
//! lr           f64
//! l2           f64
//! seed         u64
//! final_loss   f64
//! history_len  u64
//! history      history_len f64 (validation micro-F1 per epoch)
//! ```

use thiserror::Error;

use super::featurizer::{Featurizer, FeaturizerConfig};
use super::model::{Model, TrainingMeta};
use crate::labels::NUM_GOALS;

pub const MAGIC: &[u8; 8] = b"SDGCLF\0\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelFormatError {
    #[error("not a model file (bad magic)")]
    BadMagic,
    #[error("unsupported model file version {0}")]
    UnsupportedVersion(u32),
    #[error("model file truncated at byte {0}")]
    Truncated(usize),
    #[error("model file is inconsistent: {0}")]
    Invalid(String),
}

pub fn encode_model(featurizer: &Featurizer, model: &Model) -> Vec<u8> {
    let mut b = Vec::new();
    b.extend_from_slice(MAGIC);
    b.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let cfg = featurizer.config();
    b.extend_from_slice(&featurizer.corpus_size().to_le_bytes());
    b.extend_from_slice(&(cfg.min_df as u64).to_le_bytes());
    b.extend_from_slice(&(cfg.min_token_len as u32).to_le_bytes());
    b.push(u8::from(cfg.bigrams));
    b.extend_from_slice(&(featurizer.vocabulary_size() as u64).to_le_bytes());
    for (token, df) in featurizer.tokens().iter().zip(featurizer.document_frequencies()) {
        b.extend_from_slice(&(token.len() as u32).to_le_bytes());
        b.extend_from_slice(token.as_bytes());
        b.extend_from_slice(&df.to_le_bytes());
    }
    b.extend_from_slice(&(NUM_GOALS as u32).to_le_bytes());
    b.extend_from_slice(&(model.columns() as u64).to_le_bytes());
    for w in model.weights() {
        b.extend_from_slice(&w.to_le_bytes());
    }
    let m = &model.meta;
    b.extend_from_slice(&m.epochs.to_le_bytes());
    b.extend_from_slice(&m.learning_rate.to_le_bytes());
    b.extend_from_slice(&m.l2.to_le_bytes());
    b.extend_from_slice(&m.seed.to_le_bytes());
    b.extend_from_slice(&m.final_loss.to_le_bytes());
    b.extend_from_slice(&(m.validation_micro_f1.len() as u64).to_le_bytes());
    for f in &m.validation_micro_f1 {
        b.extend_from_slice(&f.to_le_bytes());
    }
    b
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelFormatError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or(ModelFormatError::Truncated(self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ModelFormatError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, ModelFormatError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, ModelFormatError> {
        self.array().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, ModelFormatError> {
        self.array().map(u64::from_le_bytes)
    }

    fn f64(&mut self) -> Result<f64, ModelFormatError> {
        self.array().map(f64::from_le_bytes)
    }

    /// A count that must fit in the bytes left, given `unit` bytes per item.
    fn count(&mut self, unit: usize) -> Result<usize, ModelFormatError> {
        let n = self.u64()?;
        let left = (self.bytes.len() - self.pos) as u64;
        if n.saturating_mul(unit as u64) > left {
            return Err(ModelFormatError::Truncated(self.pos));
        }
        Ok(n as usize)
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<(Featurizer, Model), ModelFormatError> {
    let invalid = |m: String| ModelFormatError::Invalid(m);
    let mut r = Reader { bytes, pos: 0 };
    if r.take(MAGIC.len()).map_err(|_| ModelFormatError::BadMagic)? != MAGIC {
        return Err(ModelFormatError::BadMagic);
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelFormatError::UnsupportedVersion(version));
    }
    let corpus_size = r.u64()?;
    let min_df = r.u64()? as usize;
    let min_token_len = r.u32()? as usize;
    let bigrams = match r.u8()? {
        0 => false,
        1 => true,
        other => return Err(invalid(format!("bigram flag {other}"))),
    };
    let vocab_len = r.count(12)?;
    let mut tokens = Vec::with_capacity(vocab_len);
    let mut dfs = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let len = r.u32()? as usize;
        let token = std::str::from_utf8(r.take(len)?)
            .map_err(|_| invalid("token is not UTF-8".into()))?
            .to_string();
        if tokens.last().is_some_and(|prev: &String| prev >= &token) {
            return Err(invalid("vocabulary is not sorted and unique".into()));
        }
        tokens.push(token);
        dfs.push(r.u64()?);
    }
    let rows = r.u32()? as usize;
    if rows != NUM_GOALS {
        return Err(invalid(format!("{rows} weight rows")));
    }
    let columns = r.u64()? as usize;
    if columns != vocab_len + 1 {
        return Err(invalid(format!("{columns} columns for {vocab_len} tokens")));
    }
    let n_weights = rows
        .checked_mul(columns)
        .filter(|n| n.saturating_mul(8) <= bytes.len())
        .ok_or(ModelFormatError::Truncated(r.pos))?;
    let weights = (0..n_weights).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    let epochs = r.u32()?;
    let learning_rate = r.f64()?;
    let l2 = r.f64()?;
    let seed = r.u64()?;
    let final_loss = r.f64()?;
    let history_len = r.count(8)?;
    let history = (0..history_len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
    if r.pos != bytes.len() {
        return Err(invalid(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    let featurizer = Featurizer::from_parts(
        tokens,
        dfs,
        corpus_size,
        FeaturizerConfig {
            min_token_len,
            min_df,
            bigrams,
        },
    );
    let meta = TrainingMeta {
        epochs,
        learning_rate,
        l2,
        seed,
        final_loss,
        validation_micro_f1: history,
    };
    let model = Model::from_weights(vocab_len, weights, meta).map_err(invalid)?;
    Ok((featurizer, model))
}
