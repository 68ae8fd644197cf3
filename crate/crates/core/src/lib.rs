//! Interpretable claim classification.
//!
//! The pipeline reads labeled claims ([`corpus`]), optionally doubles them by
//! back-translation ([`augment`]), turns text into TF-IDF vectors
//! ([`textprep`]), fits student models on hard labels or on an external
//! teacher's probabilities ([`teacher`], [`models`]), attributes predictions
//! to words with Shapley values ([`explain`]) and scores everything under
//! stratified cross-validation ([`eval`]).

pub mod augment;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod explain;
pub mod math;
pub mod models;
pub mod synth;
pub mod teacher;
pub mod textprep;

pub use error::{Error, Result};

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
