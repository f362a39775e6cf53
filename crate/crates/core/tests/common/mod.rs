// SPDX-License-Identifier: MIT OR Apache-2.0

//! Deliberately naive reimplementations used as test oracles. Nothing here calls
//! into the library's scoring, ranking, percentile or grading code.

#![allow(dead_code)]

use std::collections::HashMap;

use culture_neurons::actlog::{LogHeader, SampleRecord};
use culture_neurons::layout::{Layout, NeuronId};
use culture_neurons::predlog::PredictionRecord;
use culture_neurons::stats::NormalizedStats;
use rand::Rng;

/// Dense `(P, M)` per culture, recomputed record by record. Cultures without
/// tokens come back as `None`.
pub fn oracle_pm(
    header: &LogHeader,
    records: &[SampleRecord],
    correct_only: bool,
) -> Vec<Option<(Vec<f64>, Vec<f64>)>> {
    let widths = &header.neurons_per_layer;
    let offsets: Vec<usize> = widths.iter().scan(0, |acc, &w| {
        let o = *acc;
        *acc += w;
        Some(o)
    }).collect();
    let total: usize = widths.iter().sum();
    header
        .cultures
        .iter()
        .map(|culture| {
            let mut k = vec![0u64; total];
            let mut s = vec![0.0f64; total];
            let mut t = 0u64;
            for r in records.iter().filter(|r| &r.culture == culture) {
                if correct_only && !r.answered_correctly {
                    continue;
                }
                t += r.valid_tokens;
                for layer in &r.layers {
                    for e in &layer.entries {
                        k[offsets[layer.layer] + e.neuron] += e.fire_count;
                        s[offsets[layer.layer] + e.neuron] += e.pos_sum;
                    }
                }
            }
            (t > 0).then(|| {
                (
                    k.iter().map(|&x| x as f64 / t as f64).collect(),
                    s.iter().map(|&x| x / t as f64).collect(),
                )
            })
        })
        .collect()
}

/// Smallest 1-based rank `k` with `k/N ≥ q/100`, then the `k`-th smallest value.
pub fn nearest_rank(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    // insertion sort keeps this independent of the library's selection routine
    for i in 1..sorted.len() {
        let mut j = i;
        while j > 0 && sorted[j - 1] > sorted[j] {
            sorted.swap(j - 1, j);
            j -= 1;
        }
    }
    let n = sorted.len();
    for k in 1..=n {
        if (k as f64) * 100.0 >= q * n as f64 - 1e-7 {
            return sorted[k - 1];
        }
    }
    sorted[n - 1]
}

/// Largest `k` with `k ≤ r/100 × n`.
pub fn floor_count(r: f64, n: usize) -> usize {
    let mut k = 0;
    while ((k + 1) as f64) * 100.0 <= r * n as f64 + 1e-7 {
        k += 1;
    }
    k
}

/// Smallest `k` with `k ≥ r/100 × n`.
pub fn ceil_count(r: f64, n: usize) -> usize {
    let mut k = 0;
    while (k as f64) * 100.0 < r * n as f64 - 1e-7 {
        k += 1;
    }
    k
}

#[derive(Debug, Clone, Copy)]
pub struct Candidate {
    pub id: NeuronId,
    pub key: [f64; 3],
}

/// `a` strictly before `b`: keys descending, then layer and neuron ascending.
fn before(a: &Candidate, b: &Candidate) -> bool {
    for i in 0..3 {
        if a.key[i] > b.key[i] {
            return true;
        }
        if a.key[i] < b.key[i] {
            return false;
        }
    }
    (a.id.layer, a.id.neuron) < (b.id.layer, b.id.neuron)
}

/// Selection by repeated linear scans for the best remaining candidate.
pub fn top_k(mut pool: Vec<Candidate>, k: usize) -> Vec<NeuronId> {
    let mut out = Vec::new();
    while out.len() < k && !pool.is_empty() {
        let mut best = 0;
        for i in 1..pool.len() {
            if before(&pool[i], &pool[best]) {
                best = i;
            }
        }
        out.push(pool.remove(best).id);
    }
    out
}

fn ids(layout: &Layout) -> Vec<NeuronId> {
    let mut v = Vec::new();
    for (l, &w) in layout.neurons_per_layer().iter().enumerate() {
        for n in 0..w {
            v.push(NeuronId::new(l, n));
        }
    }
    v
}

fn all_p(stats: &NormalizedStats) -> Vec<f64> {
    (0..stats.num_cultures()).flat_map(|c| stats.p(c).to_vec()).collect()
}

fn max_other(values: &[f64], c: usize) -> f64 {
    let mut best: Option<f64> = None;
    for (o, &v) in values.iter().enumerate() {
        if o != c && best.is_none_or(|b| v > b) {
            best = Some(v);
        }
    }
    best.unwrap_or(0.0)
}

fn column(values: impl Fn(usize) -> f64, nc: usize) -> Vec<f64> {
    (0..nc).map(values).collect()
}

pub fn oracle_lap(stats: &NormalizedStats, alpha: f64, k: usize) -> Vec<Vec<NeuronId>> {
    let nc = stats.num_cultures();
    let p_th = nearest_rank(&all_p(stats), alpha);
    (0..nc)
        .map(|c| {
            let mut pool = Vec::new();
            for (i, id) in ids(stats.layout()).into_iter().enumerate() {
                let p = column(|o| stats.p(o)[i], nc);
                if p[c] >= p_th {
                    pool.push(Candidate {
                        id,
                        key: [p[c], p[c] - max_other(&p, c), 0.0],
                    });
                }
            }
            top_k(pool, k)
        })
        .collect()
}

pub fn oracle_entropy(weights: &[f64]) -> Option<f64> {
    let mut w: Vec<f64> = weights.iter().copied().filter(|&x| x > 0.0).collect();
    w.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let mut h = 0.0;
    for x in w {
        let p = x / total;
        h -= p * p.ln();
    }
    Some(h.max(0.0))
}

fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

pub fn oracle_lape(stats: &NormalizedStats, alpha: f64, beta: f64, rho: f64, k: usize) -> Vec<Vec<NeuronId>> {
    let nc = stats.num_cultures();
    let all = all_p(stats);
    let p_th = nearest_rank(&all, alpha);
    let p_bar = nearest_rank(&all, beta);
    let mut survivors: Vec<(f64, NeuronId, Vec<f64>)> = Vec::new();
    for (i, id) in ids(stats.layout()).into_iter().enumerate() {
        let p = column(|o| stats.p(o)[i], nc);
        if p.iter().all(|&x| x < p_th) {
            continue;
        }
        if let Some(h) = oracle_entropy(&p) {
            survivors.push((h, id, p));
        }
    }
    let pool_size = ceil_count(rho, survivors.len()).min(survivors.len());
    let mut pooled = Vec::new();
    while pooled.len() < pool_size {
        let mut best = 0;
        for i in 1..survivors.len() {
            let (h, id, _) = &survivors[i];
            let (bh, bid, _) = &survivors[best];
            if h < bh || (h == bh && id < bid) {
                best = i;
            }
        }
        pooled.push(survivors.remove(best));
    }
    let mut pools = vec![Vec::new(); nc];
    for (h, id, p) in pooled {
        let top = first_argmax(&p);
        if p[top] >= p_bar {
            pools[top].push(Candidate {
                id,
                key: [p[top], -h, p[top] - max_other(&p, top)],
            });
        }
    }
    pools.into_iter().map(|pool| top_k(pool, k)).collect()
}

pub fn oracle_mad(stats: &NormalizedStats, alpha: f64, k: usize) -> Vec<Vec<NeuronId>> {
    let nc = stats.num_cultures();
    let p_th = nearest_rank(&all_p(stats), alpha);
    (0..nc)
        .map(|c| {
            let mut pool = Vec::new();
            for (i, id) in ids(stats.layout()).into_iter().enumerate() {
                if stats.p(c)[i] < p_th {
                    continue;
                }
                let m = column(|o| stats.m(o)[i], nc);
                let mut sum = 0.0;
                for (o, &v) in m.iter().enumerate() {
                    if o != c {
                        sum += v;
                    }
                }
                pool.push(Candidate {
                    id,
                    key: [m[c] - sum / (nc - 1) as f64, stats.p(c)[i], m[c] - max_other(&m, c)],
                });
            }
            top_k(pool, k)
        })
        .collect()
}

pub fn oracle_cas(stats: &NormalizedStats, k: usize) -> Vec<Vec<NeuronId>> {
    let nc = stats.num_cultures();
    let mut pools = vec![Vec::new(); nc];
    for (i, id) in ids(stats.layout()).into_iter().enumerate() {
        let p = column(|o| stats.p(o)[i], nc);
        let top = first_argmax(&p);
        let mut sorted = p.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        pools[top].push(Candidate {
            id,
            key: [sorted[0] - sorted[1], 0.0, 0.0],
        });
    }
    pools.into_iter().map(|pool| top_k(pool, k)).collect()
}

/// Random statistics. With `quantized`, values come from a coarse grid so that
/// exact ties in scores and tie-breakers are common.
pub fn random_stats<R: Rng>(rng: &mut R, quantized: bool) -> NormalizedStats {
    let nc = rng.random_range(2..=5);
    let layers = rng.random_range(1..=3);
    let widths: Vec<usize> = (0..layers).map(|_| rng.random_range(4..=32)).collect();
    let total: usize = widths.iter().sum();
    let draw = |rng: &mut R| -> f64 {
        if quantized {
            rng.random_range(0..=8) as f64 / 8.0
        } else if rng.random_bool(0.1) {
            0.0
        } else {
            rng.random()
        }
    };
    let p: Vec<Vec<f64>> = (0..nc).map(|_| (0..total).map(|_| draw(rng)).collect()).collect();
    let m: Vec<Vec<f64>> = p
        .iter()
        .map(|row| {
            row.iter()
                .map(|&pv| if pv == 0.0 { 0.0 } else { pv * draw(rng) * 3.0 })
                .collect()
        })
        .collect();
    let cultures = (0..nc).map(|c| format!("C{c}")).collect();
    NormalizedStats::from_parts(cultures, Layout::new(widths).unwrap(), p, m).unwrap()
}

/// Lowercase and collapse whitespace by hand.
pub fn oracle_normalize(s: &str) -> String {
    let lower = s.to_lowercase();
    let mut out = String::new();
    let mut pending_space = false;
    for ch in lower.chars() {
        if ch.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(ch);
        }
    }
    out
}

/// Index of the option whose whole-word mention starts last, scanning every
/// character position; ties prefer the longer option, then the lower index.
pub fn oracle_extract(prediction: &str, options: &[String]) -> Option<usize> {
    let text = oracle_normalize(prediction);
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut best: Option<(usize, usize, usize)> = None;
    for (idx, opt) in options.iter().enumerate() {
        let needle = oracle_normalize(opt);
        if needle.is_empty() {
            continue;
        }
        for (ci, &(start, _)) in chars.iter().enumerate() {
            if !text[start..].starts_with(&needle) {
                continue;
            }
            let end = start + needle.len();
            let left_ok = ci == 0 || !chars[ci - 1].1.is_alphanumeric();
            let right_ok = text[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
            if !(left_ok && right_ok) {
                continue;
            }
            let cand = (start, needle.len(), idx);
            best = match best {
                None => Some(cand),
                Some(b) if cand.0 > b.0 || (cand.0 == b.0 && cand.1 > b.1) => Some(cand),
                Some(b) => Some(b),
            };
        }
    }
    best.map(|b| b.2)
}

/// `(correct, answer key)` for one record.
pub fn oracle_grade(r: &PredictionRecord) -> (bool, String) {
    let truth = oracle_normalize(&r.ground_truth);
    match oracle_extract(&r.raw_prediction, &r.options) {
        Some(i) => {
            let opt = oracle_normalize(&r.options[i]);
            (opt == truth, opt)
        }
        None => {
            let text = oracle_normalize(&r.raw_prediction);
            (!truth.is_empty() && text.contains(&truth), text)
        }
    }
}

/// Per evaluation culture: `(items, correct_full, correct_masked, flips)` by
/// joining each masked record to its full-run record by id.
pub fn oracle_tally(full: &[PredictionRecord], masked: &[PredictionRecord]) -> HashMap<String, [usize; 4]> {
    let mut out: HashMap<String, [usize; 4]> = HashMap::new();
    for f in full {
        let m = masked.iter().find(|m| m.sample_id == f.sample_id).expect("covered");
        let (fc, fk) = oracle_grade(f);
        let (mc, mk) = oracle_grade(m);
        let e = out.entry(f.culture.clone()).or_default();
        e[0] += 1;
        e[1] += fc as usize;
        e[2] += mc as usize;
        e[3] += (fk != mk) as usize;
    }
    out
}

pub fn random_options<R: Rng>(rng: &mut R) -> Vec<String> {
    const WORDS: [&str; 10] = ["red", "blue", "tea", "rice", "drum", "fan", "green tea", "red rice", "Mole", "Café"];
    let mut out: Vec<String> = Vec::new();
    while out.len() < 4 {
        let w = WORDS[rng.random_range(0..WORDS.len())].to_string();
        if !out.iter().any(|o| o.to_lowercase() == w.to_lowercase()) {
            out.push(w);
        }
    }
    out
}

/// Free text mixing option mentions, near misses and filler.
pub fn random_prediction<R: Rng>(rng: &mut R, opts: &[String]) -> String {
    const FILLER: [&str; 8] = ["so the answer is", "maybe", "not", "teapot", "fans", "x", ",", "\t\n"];
    let parts = rng.random_range(0..6);
    let mut s = String::new();
    for _ in 0..parts {
        if rng.random_bool(0.5) {
            let o = &opts[rng.random_range(0..opts.len())];
            if rng.random_bool(0.3) {
                s.push_str(&o.to_uppercase());
            } else {
                s.push_str(o);
            }
        } else {
            s.push_str(FILLER[rng.random_range(0..FILLER.len())]);
        }
        s.push_str([" ", "  ", ".", "", "-"][rng.random_range(0..5)]);
    }
    s
}

/// 1000 records over four cultures; with `base`, options and truths are copied from it.
pub fn random_prediction_log<R: Rng>(rng: &mut R, run: &str, base: Option<&[PredictionRecord]>) -> Vec<PredictionRecord> {
    let cultures = ["A", "B", "C", "D"];
    (0..1000)
        .map(|i| {
            let (opts, truth) = match base {
                Some(b) => (b[i].options.clone(), b[i].ground_truth.clone()),
                None => {
                    let o = random_options(rng);
                    let t = o[rng.random_range(0..4)].clone();
                    (o, t)
                }
            };
            PredictionRecord {
                sample_id: format!("s{i}"),
                culture: cultures[i % 4].into(),
                question: "q".into(),
                raw_prediction: random_prediction(rng, &opts),
                options: opts,
                ground_truth: truth,
                run_id: run.into(),
            }
        })
        .collect()
}

/// One hand-checked extraction case.
pub struct NormCase {
    pub prediction: &'static str,
    pub options: [&'static str; 4],
    pub truth: &'static str,
    pub matched: Option<usize>,
    pub correct: bool,
}

const KOREAN: [&str; 4] = ["kimchi", "bulgogi", "bibimbap", "tteokbokki"];
const TEAS: [&str; 4] = ["tea", "green tea", "rice", "rice cake"];
const LETTERS: [&str; 4] = ["A", "B", "C", "D"];
const SIGHTS: [&str; 4] = ["Eiffel Tower", "Big Ben", "Colosseum", "Parthenon"];
const ACCENTED: [&str; 4] = ["café", "naïve art", "São Paulo", "Zürich"];

const fn case(
    prediction: &'static str,
    options: [&'static str; 4],
    truth: &'static str,
    matched: Option<usize>,
    correct: bool,
) -> NormCase {
    NormCase {
        prediction,
        options,
        truth,
        matched,
        correct,
    }
}

pub const NORMALIZATION_CORPUS: [NormCase; 30] = [
    // verbatim and formatting noise
    case("kimchi", KOREAN, "kimchi", Some(0), true),
    case("  KIMCHI  ", KOREAN, "kimchi", Some(0), true),
    case("The answer is bulgogi.", KOREAN, "kimchi", Some(1), false),
    case("I think\n\ttteokbokki.", KOREAN, "tteokbokki", Some(3), true),
    case("big   ben", SIGHTS, "Big Ben", Some(1), true),
    case("Big Ben", SIGHTS, "Big Ben", Some(1), true),
    // deliberation: the last mention wins
    case("Kimchi is plausible, but bulgogi is incorrect, so the answer is bibimbap", KOREAN, "bibimbap", Some(2), true),
    case("Option A is plausible, but B is incorrect, so the answer is C", LETTERS, "C", Some(2), true),
    case("Option A is plausible, but B is incorrect, so the answer is C", LETTERS, "A", Some(2), false),
    case("It's the Colosseum, not Big Ben.", SIGHTS, "Colosseum", Some(1), false),
    case("naïve art\nor Zürich", ACCENTED, "Zürich", Some(3), true),
    // word boundaries
    case("(B)", LETTERS, "B", Some(1), true),
    case("C", LETTERS, "C", Some(2), true),
    case("Parthenon's columns", SIGHTS, "Parthenon", Some(3), true),
    case("rice-cake", TEAS, "rice cake", Some(2), false),
    case("tea", TEAS, "tea", Some(0), true),
    case("green tea", TEAS, "green tea", Some(0), false),
    case("CAFÉ au lait", ACCENTED, "café", Some(0), true),
    case("I'd go to são paulo", ACCENTED, "São Paulo", Some(2), true),
    // equal positions prefer the longer option
    case("rice cake", TEAS, "rice cake", Some(3), true),
    case("rice", TEAS, "rice cake", Some(2), false),
    // no whole-word mention: substring fallback on the ground truth
    case("kimchis are great", KOREAN, "kimchi", None, true),
    case("bulgogikimchi", KOREAN, "bulgogi", None, true),
    case("bulgogikimchi", KOREAN, "bibimbap", None, false),
    case("eiffel towers", SIGHTS, "Eiffel Tower", None, true),
    case("caféine", ACCENTED, "café", None, true),
    case("zürich2", ACCENTED, "Zürich", None, true),
    case("ABCD", LETTERS, "A", None, true),
    // nothing usable
    case("", SIGHTS, "Big Ben", None, false),
    case("I don't know", SIGHTS, "Big Ben", None, false),
];
