// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation probability (LAP): rank by how often a neuron fires for a culture.

use super::{activity_threshold, layout_ids, p_margin, Method, ScoreTable, ScoredNeuron, SelectorConfig};
use crate::error::Result;
use crate::stats::NormalizedStats;

/// Score `P[c]` for triples passing `P[c] ≥ p_th`; ties broken by the P margin
/// over the strongest competing culture.
pub fn score_lap(stats: &NormalizedStats, cfg: &SelectorConfig) -> Result<ScoreTable> {
    let p_th = activity_threshold(stats, cfg.alpha_percentile)?;
    let rankings = (0..stats.num_cultures())
        .map(|c| {
            let p = stats.p(c);
            layout_ids(stats.layout())
                .filter(|&(i, _)| p[i] >= p_th)
                .map(|(i, id)| ScoredNeuron::new(id, p[i], p_margin(stats, c, i), 0.0))
                .collect()
        })
        .collect();
    Ok(ScoreTable::new(
        Method::Lap,
        stats.cultures().to_vec(),
        rankings,
        stats.layout().total(),
    ))
}
