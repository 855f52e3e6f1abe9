//! Toolkit for correcting text-to-SQL parses with natural-language feedback.
//!
//! - [`sql`]: schemas, the canonical query model, parsing, rendering and
//!   template abstraction.
//! - [`explain`]: renders a query as numbered natural-language steps.
//! - [`diff`]: token-level edit segments between two parses and corpus error reports.
//! - [`metrics`]: exact set match, correction accuracy and end-to-end accuracy.
//! - [`rerank`]: beam re-ranking baselines, including feedback matching.
//! - [`dataset`]: loading, validating, splitting and summarizing correction records.
//! - [`service`]: HTTP API and the annotation session store.
//! - [`cli`]: the `splashkit` command line.

pub mod cli;
pub mod dataset;
pub mod diff;
mod error;
pub mod explain;
pub mod metrics;
pub mod rerank;
pub mod service;
pub mod sql;

pub use error::{Error, Result};
