// SPDX-License-Identifier: MIT OR Apache-2.0

//! Error type shared by every stage of the pipeline.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// The first line of a log or snapshot could not be accepted. Always fatal.
    #[error("malformed header: {0}")]
    Header(String),

    /// A single record violated the schema or an invariant.
    #[error("line {line}: record `{sample_id}`: {reason}")]
    Record {
        line: usize,
        sample_id: String,
        reason: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("unknown culture `{0}`")]
    UnknownCulture(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(String),

    /// A masked run does not cover exactly the samples of the full run.
    #[error("run `{run}` culture `{culture}`: coverage mismatch (missing: [{}], unexpected: [{}])", missing.join(", "), unexpected.join(", "))]
    Coverage {
        run: String,
        culture: String,
        missing: Vec<String>,
        unexpected: Vec<String>,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn record(line: usize, sample_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Record {
            line,
            sample_id: sample_id.into(),
            reason: reason.into(),
        }
    }

    /// True for errors confined to one record, which a skip policy may tolerate.
    pub fn is_record_level(&self) -> bool {
        matches!(self, Error::Record { .. })
    }
}
