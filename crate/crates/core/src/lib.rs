//! Weak-labeling pipeline that maps course descriptions to UN Sustainable
//! Development Goals (SDGs) and trains a multi-label classifier on the
//! result.
//!
//! Stages, in order: [`ingest`] fetches the course catalog, [`preprocess`]
//! filters and deduplicates it, [`labelgen`] asks a language model (or the
//! offline keyword oracle) for goal numbers, [`dataset`] splits the labeled
//! courses, [`classifier`] trains and applies the model and [`eval`] scores
//! predictions. [`pipeline`] ties the stages together.

pub mod classifier;
pub mod dataset;
pub mod eval;
pub mod ingest;
pub mod io;
pub mod labelgen;
pub mod labels;
pub mod pipeline;
pub mod preprocess;
pub mod synthetic;

pub use labels::{decode_labels, encode_labels, LabelSet, LabelVector};
