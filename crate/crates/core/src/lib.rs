//! Compliance harness for voice skills.
//!
//! Rosters are loaded by [`ingestion`], skills are reached through a
//! [`connector`] (in-process [`simulator`] or an external adapter process),
//! the [`crawler`] records sessions under fixed elicitation protocols, the
//! [`evaluator`] turns each skill's sessions into G1-G8 verdicts and
//! [`report`] aggregates them.

pub mod connector;
pub mod corpus;
pub mod crawler;
pub mod error;
pub mod evaluator;
pub mod ingestion;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod simulator;
pub mod text;

pub use error::{Error, Result};
