//! Unsupervised text style transfer by attention masking, LLM prompting,
//! and their combinations.
//!
//! Model roles (classifier, filler, generator, embedder, perplexity scorer)
//! sit behind the traits in [`backends`]; deterministic in-process mocks
//! and an HTTP client for a five-endpoint JSON protocol are provided. The
//! bundled [`toyvolt`] corpus and mocks run every pipeline end to end with
//! no models installed.

pub mod align;
pub mod backends;
pub mod datasets;
pub mod error;
pub mod harness;
pub mod masking;
pub mod metrics;
pub mod strategies;
pub mod text;
pub mod toyvolt;

pub use error::{Error, Result};
pub use text::{tokenize, Corpus, StyleLabel, TokenSeq, TransferDirection};
