//! Feedback-augmented code editing pipeline.
//!
//! The crate covers the full workflow for training and evaluating
//! critic/editor model pairs on code repair:
//!
//! 1. **Dataset curation** ([`data`]): line-delimited problem/instance
//!    records, quality filters, corpus statistics, and train/benchmark
//!    line-overlap analysis.
//! 2. **Model gateway** ([`gateway`]): prompt templates for every model
//!    role and a backend abstraction (deterministic mock, HTTP
//!    completions API, toy policy) selected by name at runtime.
//! 3. **Sandboxed judging** ([`sandbox`]): run candidate programs against
//!    test cases under wall-time/memory/output limits and compute pass
//!    ratios.
//! 4. **Test synthesis** ([`testgen`]): parse model-proposed inputs and
//!    execute the golden solution to record input/output pairs.
//! 5. **Pipeline orchestration** ([`pipeline`]): SFT record export,
//!    preference-set construction from test-case pass ratios, and
//!    single-shot or iterative editing behind a strategy registry.
//! 6. **Alignment math** ([`alignment`]): sequence log-likelihoods, the
//!    preference-tuning loss and its exact gradient, verified on a toy
//!    order-1 policy small enough for finite-difference checks.
//! 7. **Feedback selection** ([`selector`]): binary-classifier scoring of
//!    feedback candidates and argmax selection.
//! 8. **Metrics** ([`metrics`]): pass@1, error-resolved rate, error
//!    detection rate, and error-type breakdowns.

pub mod alignment;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod gateway;
pub mod manifest;
pub mod metrics;
pub mod pipeline;
pub mod sandbox;
pub mod selector;
pub mod testgen;
pub mod textdiff;

pub use error::{Error, Result};
