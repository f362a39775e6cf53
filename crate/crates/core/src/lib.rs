// SPDX-License-Identifier: MIT OR Apache-2.0

//! Identification and ablation of culture-sensitive MLP neurons.
//!
//! The pipeline reads per-sample activation logs, aggregates per-culture firing
//! statistics, ranks neurons with one of several selectors, turns selections into
//! keep-masks and measures how masked runs change accuracy and flip rates. A toy
//! decoder with planted culture neurons provides ground truth for every stage.

pub mod actlog;
pub mod error;
pub mod eval;
pub mod grouping;
pub mod layout;
pub mod mask;
pub mod predlog;
pub mod prompt;
pub mod selectors;
pub mod sim;
pub mod stats;

pub use actlog::{parse_activation_log, write_activation_log, ErrorPolicy, LogHeader, SampleRecord};
pub use error::{Error, Result};
pub use layout::{Layout, NeuronId};
pub use mask::{build_keep_mask, MaskMeta, NeuronMask, RunManifest, RunTarget};
pub use predlog::{parse_prediction_log, write_prediction_log, PredictionRecord, FULL_RUN};
pub use selectors::{Method, ScoreTable, ScoredNeuron, Selection, SelectorConfig};
pub use stats::{CultureStats, NormalizedStats};
