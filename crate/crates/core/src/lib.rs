//! Topic modeling for short-message corpora.
//!
//! The pipeline: [`corpus`] turns JSONL messages into a numeric corpus and
//! frequency statistics, [`lda`] fits topics with collapsed Gibbs sampling,
//! [`selection`] picks the topic count by held-out perplexity and
//! [`report`] writes keyword tables and per-day topic prevalence.

pub mod config;
pub mod corpus;
pub mod error;
pub mod lda;
pub mod report;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
