// SPDX-License-Identifier: MIT OR Apache-2.0

//! Accuracy change and flip-rate matrices over (source culture × evaluation culture).
//!
//! For a mask identified on source culture `s` and an evaluation culture `e`:
//!
//! - `delta[s][e] = acc_masked[s][e] − acc_full[e]`
//! - `flip_rate[s][e]` = share of `e`'s items whose extracted answer differs
//!   between the full and the masked run.
//!
//! Diagonal cells (`s = e`) are self-deactivation, the rest cross-deactivation.
//! A row's self–cross gap is its diagonal value minus the mean of its off-diagonal
//! values. All values are fractions; multiply by 100 for percentage points.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::answer::grade;
use crate::error::{Error, Result};
use crate::predlog::PredictionRecord;
use crate::selectors::Method;

/// Predictions of one masked run.
#[derive(Debug, Clone)]
pub struct MaskedRun {
    pub run_id: String,
    pub method: Method,
    pub source_culture: String,
    pub predictions: Vec<PredictionRecord>,
}

/// Method-level self/cross averages, one row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCrossSummary {
    pub self_delta: Option<f64>,
    pub cross_delta: Option<f64>,
    pub gap_delta: Option<f64>,
    pub self_flip: Option<f64>,
    pub cross_flip: Option<f64>,
    pub gap_flip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMatrices {
    pub method: Method,
    /// Row labels; columns follow [`EvalReport::cultures`].
    pub sources: Vec<String>,
    pub acc_masked: Vec<Vec<f64>>,
    pub delta: Vec<Vec<f64>>,
    pub flip_rate: Vec<Vec<f64>>,
    pub self_cross_gap_acc: Vec<Option<f64>>,
    pub self_cross_gap_flip: Vec<Option<f64>>,
    pub summary: SelfCrossSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Evaluation cultures in order of first appearance in the full run.
    pub cultures: Vec<String>,
    pub items: Vec<usize>,
    pub acc_full: Vec<f64>,
    pub methods: Vec<MethodMatrices>,
    /// `method → culture → per-layer neuron counts`
    #[serde(default)]
    pub layer_hist: BTreeMap<String, BTreeMap<String, Vec<usize>>>,
    #[serde(default)]
    pub variance_diag: Option<super::variance::VarianceSummary>,
}

impl EvalReport {
    pub fn method(&self, method: Method) -> Option<&MethodMatrices> {
        self.methods.iter().find(|m| m.method == method)
    }
}

struct ItemOutcome {
    culture: usize,
    correct: bool,
    key: String,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Diagonal minus mean off-diagonal for one row; `None` without both parts.
pub fn row_gap(row: &[f64], diagonal: Option<usize>) -> Option<f64> {
    let d = diagonal?;
    let off = mean(row.iter().enumerate().filter(|&(e, _)| e != d).map(|(_, &v)| v))?;
    Some(row[d] - off)
}

pub fn compute_matrices(full: &[PredictionRecord], masked: &[MaskedRun]) -> Result<EvalReport> {
    let mut cultures: Vec<String> = Vec::new();
    let mut culture_idx: HashMap<&str, usize> = HashMap::new();
    let mut baseline: HashMap<&str, ItemOutcome> = HashMap::new();
    for r in full {
        let c = *culture_idx.entry(r.culture.as_str()).or_insert_with(|| {
            cultures.push(r.culture.clone());
            cultures.len() - 1
        });
        let g = grade(r);
        let outcome = ItemOutcome {
            culture: c,
            correct: g.correct,
            key: g.answer_key,
        };
        if baseline.insert(r.sample_id.as_str(), outcome).is_some() {
            return Err(Error::Config(format!("sample `{}` appears twice in the full run", r.sample_id)));
        }
    }
    let nc = cultures.len();
    let mut items = vec![0usize; nc];
    let mut correct_full = vec![0usize; nc];
    for o in baseline.values() {
        items[o.culture] += 1;
        correct_full[o.culture] += o.correct as usize;
    }
    let acc_full: Vec<f64> = (0..nc).map(|c| correct_full[c] as f64 / items[c] as f64).collect();

    let mut grouped: BTreeMap<Method, Vec<&MaskedRun>> = BTreeMap::new();
    let mut seen_pairs = HashSet::new();
    for run in masked {
        if !seen_pairs.insert((run.method, run.source_culture.as_str())) {
            return Err(Error::Config(format!(
                "two runs for method {} and source culture `{}`",
                run.method, run.source_culture
            )));
        }
        grouped.entry(run.method).or_default().push(run);
    }

    let mut methods = Vec::new();
    for (method, runs) in grouped {
        // rows follow the evaluation-culture order; extra sources go last
        let mut runs = runs;
        runs.sort_by_key(|r| (culture_idx.get(r.source_culture.as_str()).copied().unwrap_or(usize::MAX), r.source_culture.clone()));
        let mut m = MethodMatrices {
            method,
            sources: Vec::new(),
            acc_masked: Vec::new(),
            delta: Vec::new(),
            flip_rate: Vec::new(),
            self_cross_gap_acc: Vec::new(),
            self_cross_gap_flip: Vec::new(),
            summary: SelfCrossSummary {
                self_delta: None,
                cross_delta: None,
                gap_delta: None,
                self_flip: None,
                cross_flip: None,
                gap_flip: None,
            },
        };
        for run in runs {
            let (correct, flips) = tally_run(run, &baseline, &cultures)?;
            let acc: Vec<f64> = (0..nc).map(|c| correct[c] as f64 / items[c] as f64).collect();
            let delta: Vec<f64> = (0..nc).map(|c| acc[c] - acc_full[c]).collect();
            let flip: Vec<f64> = (0..nc).map(|c| flips[c] as f64 / items[c] as f64).collect();
            let diag = culture_idx.get(run.source_culture.as_str()).copied();
            m.self_cross_gap_acc.push(row_gap(&delta, diag));
            m.self_cross_gap_flip.push(row_gap(&flip, diag));
            m.sources.push(run.source_culture.clone());
            m.acc_masked.push(acc);
            m.delta.push(delta);
            m.flip_rate.push(flip);
        }
        m.summary = summarize(&m, &culture_idx);
        methods.push(m);
    }

    Ok(EvalReport {
        cultures,
        items,
        acc_full,
        methods,
        layer_hist: BTreeMap::new(),
        variance_diag: None,
    })
}

fn tally_run(
    run: &MaskedRun,
    baseline: &HashMap<&str, ItemOutcome>,
    cultures: &[String],
) -> Result<(Vec<usize>, Vec<usize>)> {
    let nc = cultures.len();
    let mut correct = vec![0usize; nc];
    let mut flips = vec![0usize; nc];
    let mut covered: HashSet<&str> = HashSet::new();
    let mut unexpected: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in &run.predictions {
        let Some(base) = baseline.get(r.sample_id.as_str()) else {
            unexpected.entry(r.culture.as_str()).or_default().push(r.sample_id.clone());
            continue;
        };
        if cultures[base.culture] != r.culture {
            unexpected.entry(r.culture.as_str()).or_default().push(r.sample_id.clone());
            continue;
        }
        if !covered.insert(r.sample_id.as_str()) {
            return Err(Error::Config(format!("run `{}`: sample `{}` appears twice", run.run_id, r.sample_id)));
        }
        let g = grade(r);
        correct[base.culture] += g.correct as usize;
        flips[base.culture] += (g.answer_key != base.key) as usize;
    }
    let mut missing: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for (id, base) in baseline {
        if !covered.contains(id) {
            missing.entry(cultures[base.culture].as_str()).or_default().push(id.to_string());
        }
    }
    if let Some(culture) = missing.keys().chain(unexpected.keys()).min().copied() {
        let mut missing = missing.remove(culture).unwrap_or_default();
        let mut unexpected = unexpected.remove(culture).unwrap_or_default();
        missing.sort();
        unexpected.sort();
        return Err(Error::Coverage {
            run: run.run_id.clone(),
            culture: culture.to_string(),
            missing,
            unexpected,
        });
    }
    Ok((correct, flips))
}

fn summarize(m: &MethodMatrices, culture_idx: &HashMap<&str, usize>) -> SelfCrossSummary {
    let mut self_delta = Vec::new();
    let mut cross_delta = Vec::new();
    let mut self_flip = Vec::new();
    let mut cross_flip = Vec::new();
    for (row, src) in m.sources.iter().enumerate() {
        let diag = culture_idx.get(src.as_str()).copied();
        for e in 0..m.delta[row].len() {
            if Some(e) == diag {
                self_delta.push(m.delta[row][e]);
                self_flip.push(m.flip_rate[row][e]);
            } else {
                cross_delta.push(m.delta[row][e]);
                cross_flip.push(m.flip_rate[row][e]);
            }
        }
    }
    let self_d = mean(self_delta);
    let cross_d = mean(cross_delta);
    let self_f = mean(self_flip);
    let cross_f = mean(cross_flip);
    SelfCrossSummary {
        self_delta: self_d,
        cross_delta: cross_d,
        gap_delta: self_d.zip(cross_d).map(|(s, c)| s - c),
        self_flip: self_f,
        cross_flip: cross_f,
        gap_flip: self_f.zip(cross_f).map(|(s, c)| s - c),
    }
}
