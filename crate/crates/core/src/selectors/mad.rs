// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean activation difference (MAD) on unnormalized `M`, gated by `P[c] ≥ p_th`.

use super::{activity_threshold, layout_ids, require_cultures, Method, ScoreTable, ScoredNeuron, SelectorConfig};
use crate::error::Result;
use crate::stats::NormalizedStats;

pub fn score_mad(stats: &NormalizedStats, cfg: &SelectorConfig) -> Result<ScoreTable> {
    require_cultures(stats, Method::Mad, 2)?;
    let nc = stats.num_cultures();
    let p_th = activity_threshold(stats, cfg.alpha_percentile)?;
    let rankings = (0..nc)
        .map(|c| {
            layout_ids(stats.layout())
                .filter(|&(i, _)| stats.p(c)[i] >= p_th)
                .map(|(i, id)| {
                    let own = stats.m(c)[i];
                    let mut sum_others = 0.0;
                    let mut max_other = f64::NEG_INFINITY;
                    for o in (0..nc).filter(|&o| o != c) {
                        let v = stats.m(o)[i];
                        sum_others += v;
                        max_other = max_other.max(v);
                    }
                    let score = own - sum_others / (nc - 1) as f64;
                    ScoredNeuron::new(id, score, stats.p(c)[i], own - max_other)
                })
                .collect()
        })
        .collect();
    Ok(ScoreTable::new(
        Method::Mad,
        stats.cultures().to_vec(),
        rankings,
        stats.layout().total(),
    ))
}
