// SPDX-License-Identifier: MIT OR Apache-2.0

//! Answer normalization, ablation metrics, layer histograms and report output.

pub mod answer;
pub mod metrics;
pub mod report;
pub mod variance;

pub use answer::{grade, normalize_answer, normalize_text, score_correct, MatchKind, NormalizedAnswer};
pub use metrics::{compute_matrices, EvalReport, MaskedRun, MethodMatrices, SelfCrossSummary};
pub use report::layer_histogram;
pub use variance::{variance_diagnostics, VarianceSummary};
