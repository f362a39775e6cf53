// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation probability entropy (LAPE): prefer neurons whose firing is
//! concentrated on few cultures.
//!
//! 1. drop neurons whose largest `P` is below `p_th`;
//! 2. normalize `P` across cultures and compute the Shannon entropy `H`
//!    (natural log, `0 · ln 0 = 0`); keep the lowest-`ρ%` pool of survivors;
//! 3. assign each pooled neuron to its argmax culture if that `P` reaches `p_bar`.
//!
//! Within a culture, rank by `P` descending, then `H` ascending, then P margin.

use super::percentile::percent_count_ceil;
use super::{activity_threshold, layout_ids, p_margin, require_cultures, Method, ScoreTable, ScoredNeuron, SelectorConfig};
use crate::error::Result;
use crate::layout::NeuronId;
use crate::stats::NormalizedStats;

/// Shannon entropy of `weights` after normalizing them to sum to one.
/// `None` when the weights sum to zero.
pub fn entropy(weights: &[f64]) -> Option<f64> {
    // summing in sorted order makes the result independent of culture order
    let mut sorted: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let h = -sorted
        .iter()
        .map(|&w| {
            let p = w / total;
            p * p.ln()
        })
        .sum::<f64>();
    // a one-hot distribution sums to -0.0
    Some(if h > 0.0 { h } else { 0.0 })
}

/// Lowest index among the maximal entries.
pub(crate) fn argmax(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if v <= b => best,
        _ => Some((i, v)),
    })
}

pub fn score_lape(stats: &NormalizedStats, cfg: &SelectorConfig) -> Result<ScoreTable> {
    require_cultures(stats, Method::Lape, 2)?;
    let nc = stats.num_cultures();
    let p_th = activity_threshold(stats, cfg.alpha_percentile)?;
    let p_bar = activity_threshold(stats, cfg.beta_percentile)?;

    let mut survivors: Vec<(f64, usize, NeuronId)> = Vec::new();
    let mut column = vec![0.0; nc];
    for (i, id) in layout_ids(stats.layout()) {
        for (c, slot) in column.iter_mut().enumerate() {
            *slot = stats.p(c)[i];
        }
        let max = column.iter().copied().fold(0.0, f64::max);
        if max < p_th {
            continue;
        }
        if let Some(h) = entropy(&column) {
            survivors.push((h, i, id));
        }
    }

    survivors.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite entropy").then(a.2.cmp(&b.2)));
    let pool = percent_count_ceil(cfg.rho_percent, survivors.len()).min(survivors.len());

    let mut rankings = vec![Vec::new(); nc];
    for &(h, i, id) in &survivors[..pool] {
        let (top, p_top) = argmax((0..nc).map(|c| stats.p(c)[i])).expect("at least two cultures");
        if p_top >= p_bar {
            rankings[top].push(ScoredNeuron::new(id, p_top, -h, p_margin(stats, top, i)));
        }
    }
    Ok(ScoreTable::new(
        Method::Lape,
        stats.cultures().to_vec(),
        rankings,
        stats.layout().total(),
    ))
}
