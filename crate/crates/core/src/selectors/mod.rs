// SPDX-License-Identifier: MIT OR Apache-2.0

//! Neuron scoring and top-r% selection.
//!
//! Each selector turns [`NormalizedStats`] into a [`ScoreTable`]: for every culture, a
//! ranked list of eligible neurons with up to two tie-break values. Rankings are a
//! total order over `(score ↓, tiebreak_1 ↓, tiebreak_2 ↓, layer ↑, neuron ↑)`.
//!
//! | method | score                        | tiebreak_1      | tiebreak_2        | eligibility                  |
//! |--------|------------------------------|-----------------|-------------------|------------------------------|
//! | RND    | 0                            | 0               | 0                 | seeded global sample         |
//! | LAP    | `P[c]`                       | P margin        | 0                 | `P[c] ≥ p_th`                |
//! | LAPE   | `P[c*]`                      | `−H`            | P margin          | activity, entropy pool, bar  |
//! | MAD    | `M[c] − mean_{c'≠c} M[c']`   | `P[c]`          | M margin          | `P[c] ≥ p_th`                |
//! | CAS    | `P(1) − P(2)`                | 0               | 0                 | `c` is the argmax culture    |

mod cas;
mod lap;
mod lape;
mod mad;
pub mod percentile;
mod rnd;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Layout, NeuronId};
use crate::stats::NormalizedStats;

pub use cas::score_cas;
pub use lap::score_lap;
pub use lape::{entropy, score_lape};
pub use mad::score_mad;
pub use percentile::{percent_count_floor, percentile_threshold};
pub use rnd::score_rnd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Rnd,
    Lap,
    Lape,
    Mad,
    Cas,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Rnd, Method::Lap, Method::Lape, Method::Mad, Method::Cas];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Rnd => "RND",
            Method::Lap => "LAP",
            Method::Lape => "LAPE",
            Method::Mad => "MAD",
            Method::Cas => "CAS",
        }
    }

    /// RND draws one set shared by every culture.
    pub fn is_culture_independent(self) -> bool {
        self == Method::Rnd
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown method `{s}` (expected one of RND, LAP, LAPE, MAD, CAS)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectorConfig {
    pub method: Method,
    /// Percentage of all MLP neurons selected per culture.
    pub r_percent: f64,
    /// Percentile of all `P` values used as the activity threshold `p_th`.
    pub alpha_percentile: f64,
    /// Percentile of all `P` values a LAPE neuron's top culture must reach (`p_bar`).
    pub beta_percentile: f64,
    /// Share of activity-filter survivors kept in the LAPE low-entropy pool.
    pub rho_percent: f64,
    pub rng_seed: u64,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            method: Method::Cas,
            r_percent: 1.0,
            alpha_percentile: 95.0,
            beta_percentile: 90.0,
            rho_percent: 5.0,
            rng_seed: 0,
        }
    }
}

impl SelectorConfig {
    pub fn with_method(method: Method) -> Self {
        Self {
            method,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        percentile::check_percent("r_percent", self.r_percent)?;
        percentile::check_percent("alpha_percentile", self.alpha_percentile)?;
        percentile::check_percent("beta_percentile", self.beta_percentile)?;
        percentile::check_percent("rho_percent", self.rho_percent)
    }

    /// `⌊r/100 × total⌋`, rejected when it selects nothing.
    pub fn target_count(&self, total_neurons: usize) -> Result<usize> {
        self.validate()?;
        let k = percent_count_floor(self.r_percent, total_neurons);
        if k == 0 {
            return Err(Error::Config(format!(
                "r_percent {} selects no neuron out of {total_neurons}",
                self.r_percent
            )));
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredNeuron {
    pub id: NeuronId,
    pub score: f64,
    pub tiebreak_1: f64,
    pub tiebreak_2: f64,
}

impl ScoredNeuron {
    pub fn new(id: NeuronId, score: f64, tiebreak_1: f64, tiebreak_2: f64) -> Self {
        Self {
            id,
            score,
            tiebreak_1,
            tiebreak_2,
        }
    }
}

fn desc(a: f64, b: f64) -> Ordering {
    // scores are finite; partial_cmp also equates -0.0 with 0.0
    b.partial_cmp(&a).expect("finite score")
}

/// The ranking order: better entries compare as `Less`.
pub fn ranking_order(a: &ScoredNeuron, b: &ScoredNeuron) -> Ordering {
    desc(a.score, b.score)
        .then_with(|| desc(a.tiebreak_1, b.tiebreak_1))
        .then_with(|| desc(a.tiebreak_2, b.tiebreak_2))
        .then_with(|| a.id.cmp(&b.id))
}

/// Per-culture rankings produced by one selector.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    method: Method,
    cultures: Vec<String>,
    rankings: Vec<Vec<ScoredNeuron>>,
    total_neurons: usize,
}

impl ScoreTable {
    /// Sorts every culture's entries into ranking order.
    pub fn new(method: Method, cultures: Vec<String>, mut rankings: Vec<Vec<ScoredNeuron>>, total_neurons: usize) -> Self {
        assert_eq!(cultures.len(), rankings.len());
        for r in &mut rankings {
            r.sort_by(ranking_order);
        }
        Self {
            method,
            cultures,
            rankings,
            total_neurons,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn cultures(&self) -> &[String] {
        &self.cultures
    }

    pub fn ranking(&self, culture: usize) -> &[ScoredNeuron] {
        &self.rankings[culture]
    }

    pub fn total_neurons(&self) -> usize {
        self.total_neurons
    }
}

/// Runs the selector named by `cfg.method`.
pub fn score(stats: &NormalizedStats, cfg: &SelectorConfig) -> Result<ScoreTable> {
    cfg.validate()?;
    match cfg.method {
        Method::Rnd => score_rnd(stats.layout(), stats.cultures(), cfg),
        Method::Lap => score_lap(stats, cfg),
        Method::Lape => score_lape(stats, cfg),
        Method::Mad => score_mad(stats, cfg),
        Method::Cas => score_cas(stats, cfg),
    }
}

/// A culture that had fewer eligible neurons than the selection budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub culture: String,
    pub wanted: usize,
    pub available: usize,
}

impl fmt::Display for Shortfall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "culture `{}`: only {} eligible neurons for a budget of {}",
            self.culture, self.available, self.wanted
        )
    }
}

/// Result of [`select_top`]: the top-ranked neurons per culture.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub method: Method,
    pub r_percent: f64,
    pub seed: Option<u64>,
    /// `(culture, neurons in ranking order)`
    pub per_culture: Vec<(String, Vec<NeuronId>)>,
    pub shortfalls: Vec<Shortfall>,
}

/// Takes the first `⌊r/100 × total⌋` entries of every culture's ranking.
pub fn select_top(table: &ScoreTable, cfg: &SelectorConfig) -> Result<Selection> {
    let wanted = cfg.target_count(table.total_neurons)?;
    let mut per_culture = Vec::with_capacity(table.cultures.len());
    let mut shortfalls = Vec::new();
    for (culture, ranking) in table.cultures.iter().zip(&table.rankings) {
        if ranking.len() < wanted {
            shortfalls.push(Shortfall {
                culture: culture.clone(),
                wanted,
                available: ranking.len(),
            });
        }
        let picked = ranking.iter().take(wanted).map(|e| e.id).collect();
        per_culture.push((culture.clone(), picked));
    }
    Ok(Selection {
        method: table.method,
        r_percent: cfg.r_percent,
        seed: table.method.is_culture_independent().then_some(cfg.rng_seed),
        per_culture,
        shortfalls,
    })
}

pub(crate) fn require_cultures(stats: &NormalizedStats, method: Method, min: usize) -> Result<()> {
    if stats.num_cultures() < min {
        return Err(Error::Config(format!(
            "{method} needs at least {min} cultures, got {}",
            stats.num_cultures()
        )));
    }
    Ok(())
}

/// Activity threshold `p_th` over every `P` value, zeros included.
pub(crate) fn activity_threshold(stats: &NormalizedStats, q: f64) -> Result<f64> {
    let all: Vec<f64> = stats.all_p().collect();
    percentile_threshold(&all, q)
}

/// `P[c][i] − max_{c'≠c} P[c'][i]`; with a single culture the competitor is 0.
pub(crate) fn p_margin(stats: &NormalizedStats, c: usize, i: usize) -> f64 {
    let best_other = (0..stats.num_cultures())
        .filter(|&o| o != c)
        .map(|o| stats.p(o)[i])
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        .unwrap_or(0.0);
    stats.p(c)[i] - best_other
}

pub(crate) fn layout_ids(layout: &Layout) -> impl Iterator<Item = (usize, NeuronId)> + '_ {
    layout.ids().enumerate()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: Vec<ScoredNeuron>, total: usize) -> ScoreTable {
        ScoreTable::new(Method::Lap, vec!["A".into()], vec![entries], total)
    }

    #[test]
    fn budget_arithmetic() {
        let cfg = SelectorConfig::default();
        assert_eq!(cfg.target_count(400).unwrap(), 4);
        assert!(cfg.target_count(50).is_err());
    }

    #[test]
    fn selects_budget_when_eligible() {
        let entries = (0..10).map(|n| ScoredNeuron::new(NeuronId::new(0, n), n as f64, 0.0, 0.0)).collect();
        let sel = select_top(&table(entries, 400), &SelectorConfig::default()).unwrap();
        assert_eq!(sel.per_culture[0].1, (6..10).rev().map(|n| NeuronId::new(0, n)).collect::<Vec<_>>());
        assert!(sel.shortfalls.is_empty());
    }

    #[test]
    fn shortfall_recorded() {
        let entries = vec![
            ScoredNeuron::new(NeuronId::new(0, 1), 0.5, 0.0, 0.0),
            ScoredNeuron::new(NeuronId::new(1, 0), 0.7, 0.0, 0.0),
        ];
        let sel = select_top(&table(entries, 400), &SelectorConfig::default()).unwrap();
        assert_eq!(sel.per_culture[0].1.len(), 2);
        assert_eq!(
            sel.shortfalls,
            vec![Shortfall {
                culture: "A".into(),
                wanted: 4,
                available: 2
            }]
        );
    }

    #[test]
    fn total_order_falls_back_to_position() {
        let a = ScoredNeuron::new(NeuronId::new(1, 0), 0.5, 0.1, 0.0);
        let b = ScoredNeuron::new(NeuronId::new(0, 3), 0.5, 0.1, -0.0);
        let c = ScoredNeuron::new(NeuronId::new(0, 9), 0.5, 0.2, 0.0);
        let t = ScoreTable::new(Method::Lap, vec!["A".into()], vec![vec![a, b, c]], 16);
        let ids: Vec<_> = t.ranking(0).iter().map(|e| e.id).collect();
        assert_eq!(ids, vec![c.id, b.id, a.id]);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            assert_eq!(m.as_str().to_lowercase().parse::<Method>().unwrap(), m);
        }
        assert!("ENTROPY".parse::<Method>().is_err());
    }
}
