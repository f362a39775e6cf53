// SPDX-License-Identifier: MIT OR Apache-2.0

//! Contrastive activation selection (CAS).
//!
//! A neuron's score is the gap between its highest and second-highest activation
//! probability across cultures, credited only to the culture with the highest one.
//! Every other culture treats the neuron as ineligible, so per-culture tables are
//! disjoint. Exact ties for the top spot credit the lowest culture index with a
//! score of zero.

use super::lape::argmax;
use super::{layout_ids, require_cultures, Method, ScoreTable, ScoredNeuron, SelectorConfig};
use crate::error::Result;
use crate::stats::NormalizedStats;

pub fn score_cas(stats: &NormalizedStats, _cfg: &SelectorConfig) -> Result<ScoreTable> {
    require_cultures(stats, Method::Cas, 2)?;
    let nc = stats.num_cultures();
    let mut rankings = vec![Vec::new(); nc];
    for (i, id) in layout_ids(stats.layout()) {
        let (top, p1) = argmax((0..nc).map(|c| stats.p(c)[i])).expect("at least two cultures");
        let p2 = (0..nc)
            .filter(|&c| c != top)
            .map(|c| stats.p(c)[i])
            .fold(f64::NEG_INFINITY, f64::max);
        rankings[top].push(ScoredNeuron::new(id, p1 - p2, 0.0, 0.0));
    }
    Ok(ScoreTable::new(
        Method::Cas,
        stats.cultures().to_vec(),
        rankings,
        stats.layout().total(),
    ))
}
