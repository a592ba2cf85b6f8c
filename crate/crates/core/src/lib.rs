//! Unsupervised paradigm completion from raw text.
//!
//! The pipeline clusters corpus types into paradigms, abstracts each cluster
//! into affix patterns, assigns latent part-of-speech tags, aligns patterns
//! into paradigm slots, predicts slots for words in context, and inflects
//! them with edit trees. Generated paradigms are scored against gold data
//! with best-match accuracy and best-match F1.

pub mod abstraction;
pub mod align;
pub mod cluster;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod eval;
pub mod inflect;
pub mod lcs;
pub mod pipeline;
pub mod posem;
pub mod slotpred;
mod textio;

pub use error::{Error, Result};
pub use pipeline::{run_pipeline, Pipeline, PipelineConfig};
