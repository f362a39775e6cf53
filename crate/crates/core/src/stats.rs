// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-culture activation accumulators and the normalized statistics derived from them.
//!
//! [`CultureStats`] keeps, for every culture `c` and neuron `(l, n)`:
//!
//! - `K` – number of valid tokens on which the gate output was positive,
//! - `S` – sum of the positive gate outputs over those tokens,
//!
//! plus the per-culture valid-token total `T`. Accumulators are dense and additive,
//! so disjoint shards of a log can be folded independently and merged.
//!
//! [`NormalizedStats`] holds `P = K / T` (activation probability) and `M = S / T`
//! (mean positive activation per valid token).

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actlog::{LineSource, LogHeader, SampleRecord, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::layout::{Layout, NeuronId};

#[derive(Debug, Clone, PartialEq)]
pub struct CultureStats {
    model_name: String,
    cultures: Vec<String>,
    layout: Layout,
    /// `[culture][flat neuron]`
    fire_counts: Vec<Vec<u64>>,
    pos_sums: Vec<Vec<f64>>,
    tokens: Vec<u64>,
    samples_used: Vec<u64>,
}

impl CultureStats {
    /// Empty accumulators shaped after `header`.
    pub fn new(header: &LogHeader) -> Result<Self> {
        header.validate()?;
        let layout = header.layout();
        let nc = header.cultures.len();
        Ok(Self {
            model_name: header.model_name.clone(),
            cultures: header.cultures.clone(),
            fire_counts: vec![vec![0; layout.total()]; nc],
            pos_sums: vec![vec![0.0; layout.total()]; nc],
            tokens: vec![0; nc],
            samples_used: vec![0; nc],
            layout,
        })
    }

    pub fn cultures(&self) -> &[String] {
        &self.cultures
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn header(&self) -> LogHeader {
        LogHeader::new(
            self.model_name.clone(),
            self.layout.neurons_per_layer().to_vec(),
            self.cultures.clone(),
        )
    }

    pub fn culture_index(&self, culture: &str) -> Option<usize> {
        self.cultures.iter().position(|c| c == culture)
    }

    pub fn fire_count(&self, culture: usize, id: NeuronId) -> u64 {
        self.fire_counts[culture][self.flat(id)]
    }

    pub fn pos_sum(&self, culture: usize, id: NeuronId) -> f64 {
        self.pos_sums[culture][self.flat(id)]
    }

    pub fn fire_counts(&self, culture: usize) -> &[u64] {
        &self.fire_counts[culture]
    }

    pub fn pos_sums(&self, culture: usize) -> &[f64] {
        &self.pos_sums[culture]
    }

    pub fn tokens(&self, culture: usize) -> u64 {
        self.tokens[culture]
    }

    pub fn samples_used(&self, culture: usize) -> u64 {
        self.samples_used[culture]
    }

    fn flat(&self, id: NeuronId) -> usize {
        self.layout.flat(id).unwrap_or_else(|| panic!("{id} outside layout"))
    }

    /// Adds one sample's contribution. Returns `false` when the sample was filtered
    /// out because `correct_only` is set and the sample was answered incorrectly.
    pub fn fold(&mut self, record: &SampleRecord, correct_only: bool) -> Result<bool> {
        let c = self
            .culture_index(&record.culture)
            .ok_or_else(|| Error::UnknownCulture(record.culture.clone()))?;
        // validate everything before touching the accumulators
        for layer in &record.layers {
            let width = self.layout.layer_width(layer.layer).ok_or_else(|| {
                Error::Dimension(format!("record `{}`: layer {} out of range", record.sample_id, layer.layer))
            })?;
            if let Some(e) = layer.entries.iter().find(|e| e.neuron >= width) {
                return Err(Error::Dimension(format!(
                    "record `{}`: neuron {} out of range for layer {}",
                    record.sample_id, e.neuron, layer.layer
                )));
            }
        }
        if correct_only && !record.answered_correctly {
            return Ok(false);
        }
        let (k, s) = (&mut self.fire_counts[c], &mut self.pos_sums[c]);
        for layer in &record.layers {
            let base = self.layout.layer_range(layer.layer).start;
            for e in &layer.entries {
                k[base + e.neuron] += e.fire_count;
                s[base + e.neuron] += e.pos_sum;
            }
        }
        self.tokens[c] += record.valid_tokens;
        self.samples_used[c] += 1;
        Ok(true)
    }

    /// Elementwise sum of two accumulators over the same header.
    pub fn merge(&mut self, other: &CultureStats) -> Result<()> {
        if self.cultures != other.cultures || self.layout != other.layout {
            return Err(Error::Dimension(
                "cannot merge statistics with different cultures or layer shapes".into(),
            ));
        }
        for c in 0..self.cultures.len() {
            for (a, b) in self.fire_counts[c].iter_mut().zip(&other.fire_counts[c]) {
                *a += b;
            }
            for (a, b) in self.pos_sums[c].iter_mut().zip(&other.pos_sums[c]) {
                *a += b;
            }
            self.tokens[c] += other.tokens[c];
            self.samples_used[c] += other.samples_used[c];
        }
        Ok(())
    }

    pub fn merged(mut self, other: &CultureStats) -> Result<Self> {
        self.merge(other)?;
        Ok(self)
    }

    /// Folds a record stream sequentially.
    pub fn from_records<I>(header: &LogHeader, records: I, correct_only: bool) -> Result<Self>
    where
        I: IntoIterator<Item = Result<SampleRecord>>,
    {
        let mut stats = Self::new(header)?;
        for r in records {
            stats.fold(&r?, correct_only)?;
        }
        Ok(stats)
    }

    /// Shard-then-merge aggregation of an in-memory record set.
    pub fn from_records_parallel(header: &LogHeader, records: &[SampleRecord], correct_only: bool) -> Result<Self> {
        let empty = Self::new(header)?;
        records
            .par_chunks(256)
            .map(|chunk| {
                let mut shard = empty.clone();
                for r in chunk {
                    shard.fold(r, correct_only)?;
                }
                Ok(shard)
            })
            .try_reduce(|| empty.clone(), |a, b| a.merged(&b))
    }

    /// Derives `P` and `M`. Cultures with no valid tokens are dropped and listed
    /// in [`NormalizedStats::dropped`].
    pub fn normalize(&self) -> Result<NormalizedStats> {
        let mut cultures = Vec::new();
        let mut dropped = Vec::new();
        let mut p = Vec::new();
        let mut m = Vec::new();
        for (c, name) in self.cultures.iter().enumerate() {
            let t = self.tokens[c];
            if t == 0 {
                dropped.push(name.clone());
                continue;
            }
            let t = t as f64;
            cultures.push(name.clone());
            p.push(self.fire_counts[c].iter().map(|&k| k as f64 / t).collect());
            m.push(self.pos_sums[c].iter().map(|&s| s / t).collect());
        }
        if cultures.is_empty() {
            return Err(Error::Empty("no culture has any valid tokens".into()));
        }
        Ok(NormalizedStats {
            cultures,
            layout: self.layout.clone(),
            dropped,
            p,
            m,
        })
    }
}

/// Activation probability `P` and mean positive activation `M` per culture.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedStats {
    cultures: Vec<String>,
    layout: Layout,
    dropped: Vec<String>,
    p: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
}

impl NormalizedStats {
    /// Builds statistics directly from `P`/`M` tables indexed `[culture][flat neuron]`.
    pub fn from_parts(cultures: Vec<String>, layout: Layout, p: Vec<Vec<f64>>, m: Vec<Vec<f64>>) -> Result<Self> {
        if cultures.is_empty() {
            return Err(Error::Empty("no cultures".into()));
        }
        if p.len() != cultures.len() || m.len() != cultures.len() {
            return Err(Error::Dimension("P/M culture count differs from culture list".into()));
        }
        let total = layout.total();
        for (c, (pc, mc)) in p.iter().zip(&m).enumerate() {
            if pc.len() != total || mc.len() != total {
                return Err(Error::Dimension(format!("culture {c}: expected {total} neurons")));
            }
            if pc.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config(format!("culture {c}: P outside [0, 1]")));
            }
            if mc.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Config(format!("culture {c}: M must be finite and non-negative")));
            }
        }
        Ok(Self {
            cultures,
            layout,
            dropped: Vec::new(),
            p,
            m,
        })
    }

    pub fn cultures(&self) -> &[String] {
        &self.cultures
    }

    pub fn culture_index(&self, culture: &str) -> Option<usize> {
        self.cultures.iter().position(|c| c == culture)
    }

    pub fn num_cultures(&self) -> usize {
        self.cultures.len()
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Cultures removed by [`CultureStats::normalize`] because they had no tokens.
    pub fn dropped(&self) -> &[String] {
        &self.dropped
    }

    /// `P[c]` over the flat neuron index.
    pub fn p(&self, culture: usize) -> &[f64] {
        &self.p[culture]
    }

    pub fn m(&self, culture: usize) -> &[f64] {
        &self.m[culture]
    }

    /// Every `P` value across cultures, layers and neurons.
    pub fn all_p(&self) -> impl Iterator<Item = f64> + '_ {
        self.p.iter().flatten().copied()
    }

    /// Returns a copy with every `M` multiplied by `factor`.
    pub fn scale_m(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for row in &mut out.m {
            for v in row {
                *v *= factor;
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotHeader {
    model_name: String,
    neurons_per_layer: Vec<usize>,
    cultures: Vec<String>,
    correct_only: bool,
    format_version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotCulture {
    culture: String,
    #[serde(rename = "T")]
    tokens: u64,
    samples: u64,
    layers: Vec<(usize, Vec<(usize, u64, f64)>)>,
}

impl CultureStats {
    /// Writes the `.stats` snapshot: a header line, then one sparse line per culture.
    pub fn write_snapshot<W: Write>(&self, correct_only: bool, mut sink: W) -> Result<()> {
        let header = SnapshotHeader {
            model_name: self.model_name.clone(),
            neurons_per_layer: self.layout.neurons_per_layer().to_vec(),
            cultures: self.cultures.clone(),
            correct_only,
            format_version: FORMAT_VERSION,
        };
        serde_json::to_writer(&mut sink, &header)?;
        sink.write_all(b"\n")?;
        for (c, culture) in self.cultures.iter().enumerate() {
            let layers = (0..self.layout.num_layers())
                .filter_map(|l| {
                    let range = self.layout.layer_range(l);
                    let base = range.start;
                    let entries: Vec<_> = range
                        .filter(|&i| self.fire_counts[c][i] != 0 || self.pos_sums[c][i] != 0.0)
                        .map(|i| (i - base, self.fire_counts[c][i], self.pos_sums[c][i]))
                        .collect();
                    (!entries.is_empty()).then_some((l, entries))
                })
                .collect();
            let line = SnapshotCulture {
                culture: culture.clone(),
                tokens: self.tokens[c],
                samples: self.samples_used[c],
                layers,
            };
            serde_json::to_writer(&mut sink, &line)?;
            sink.write_all(b"\n")?;
        }
        sink.flush()?;
        Ok(())
    }

    /// Reads a `.stats` snapshot. Returns the statistics and the `correct_only` flag
    /// they were aggregated with.
    pub fn read_snapshot<R: BufRead>(stream: R) -> Result<(Self, bool)> {
        let mut source = LineSource::new(stream);
        let header: SnapshotHeader = match source.next_line()? {
            None => return Err(Error::Header("empty stats snapshot".into())),
            Some((_, line)) => serde_json::from_str(line).map_err(|e| Error::Header(e.to_string()))?,
        };
        let log_header = LogHeader::new(header.model_name, header.neurons_per_layer, header.cultures);
        let mut stats = Self::new(&log_header)?;
        let mut seen = vec![false; stats.cultures.len()];
        while let Some((line_no, line)) = source.next_line()? {
            let entry: SnapshotCulture =
                serde_json::from_str(line).map_err(|e| Error::record(line_no, "?", e.to_string()))?;
            let c = stats
                .culture_index(&entry.culture)
                .ok_or_else(|| Error::UnknownCulture(entry.culture.clone()))?;
            if std::mem::replace(&mut seen[c], true) {
                return Err(Error::record(line_no, entry.culture, "culture listed twice"));
            }
            stats.tokens[c] = entry.tokens;
            stats.samples_used[c] = entry.samples;
            for (l, entries) in entry.layers {
                for (n, k, s) in entries {
                    let flat = stats.layout.flat(NeuronId::new(l, n)).ok_or_else(|| {
                        Error::record(line_no, entry.culture.clone(), format!("L{l}N{n} out of range"))
                    })?;
                    if k > entry.tokens || !s.is_finite() || s < 0.0 {
                        return Err(Error::record(line_no, entry.culture.clone(), format!("invalid counters at L{l}N{n}")));
                    }
                    stats.fire_counts[c][flat] = k;
                    stats.pos_sums[c][flat] = s;
                }
            }
        }
        if let Some(c) = seen.iter().position(|s| !s) {
            return Err(Error::Header(format!("snapshot lacks culture `{}`", stats.cultures[c])));
        }
        Ok((stats, header.correct_only))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actlog::{LayerActivity, NeuronActivity};

    fn header() -> LogHeader {
        LogHeader::new("toy", vec![2, 2], vec!["A".into(), "B".into()])
    }

    fn sample(id: &str, culture: &str, correct: bool, t: u64, entries: &[(usize, usize, u64, f64)]) -> SampleRecord {
        let mut layers: Vec<LayerActivity> = Vec::new();
        for &(l, n, k, s) in entries {
            if layers.last().is_none_or(|x| x.layer != l) {
                layers.push(LayerActivity { layer: l, entries: vec![] });
            }
            layers.last_mut().unwrap().entries.push(NeuronActivity {
                neuron: n,
                fire_count: k,
                pos_sum: s,
            });
        }
        SampleRecord {
            sample_id: id.into(),
            culture: culture.into(),
            answered_correctly: correct,
            valid_tokens: t,
            layers,
        }
    }

    #[test]
    fn incorrect_sample_filtered() {
        let mut stats = CultureStats::new(&header()).unwrap();
        let before = stats.clone();
        assert!(!stats.fold(&sample("x", "A", false, 5, &[(0, 0, 3, 1.0)]), true).unwrap());
        assert_eq!(stats, before);
        assert!(stats.fold(&sample("x", "A", false, 5, &[(0, 0, 3, 1.0)]), false).unwrap());
        assert_eq!(stats.tokens(0), 5);
    }

    #[test]
    fn fire_counts_add() {
        let mut stats = CultureStats::new(&header()).unwrap();
        stats.fold(&sample("a", "A", true, 6, &[(1, 1, 3, 0.5)]), true).unwrap();
        stats.fold(&sample("b", "A", true, 6, &[(1, 1, 5, 0.25)]), true).unwrap();
        assert_eq!(stats.fire_count(0, NeuronId::new(1, 1)), 8);
        assert_eq!(stats.pos_sum(0, NeuronId::new(1, 1)), 0.75);
        assert_eq!(stats.samples_used(0), 2);
        assert_eq!(stats.tokens(1), 0);
    }

    #[test]
    fn unknown_culture_and_range_errors() {
        let mut stats = CultureStats::new(&header()).unwrap();
        assert!(matches!(stats.fold(&sample("a", "Z", true, 1, &[]), true), Err(Error::UnknownCulture(_))));
        assert!(matches!(
            stats.fold(&sample("a", "A", true, 1, &[(0, 7, 1, 1.0)]), true),
            Err(Error::Dimension(_))
        ));
        // an out-of-range record must not leave partial updates behind
        assert_eq!(stats, CultureStats::new(&header()).unwrap());
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let mut a = CultureStats::new(&header()).unwrap();
        a.fold(&sample("a", "B", true, 4, &[(0, 1, 2, 1.5)]), true).unwrap();
        let empty = CultureStats::new(&header()).unwrap();
        assert_eq!(a.clone().merged(&empty).unwrap(), a);

        let other = CultureStats::new(&LogHeader::new("toy", vec![2, 3], vec!["A".into(), "B".into()])).unwrap();
        assert!(a.merge(&other).is_err());
    }

    #[test]
    fn normalize_simple_values() {
        let mut stats = CultureStats::new(&header()).unwrap();
        stats.fold(&sample("a", "A", true, 8, &[(0, 0, 4, 2.0)]), true).unwrap();
        let norm = stats.normalize().unwrap();
        assert_eq!(norm.cultures(), ["A".to_string()]);
        assert_eq!(norm.dropped(), ["B".to_string()]);
        assert_eq!(norm.p(0)[0], 0.5);
        assert_eq!(norm.m(0)[0], 0.25);
        assert!(norm.p(0)[1..].iter().all(|&v| v == 0.0));
        assert!(norm.m(0)[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalize_all_empty_errors() {
        let stats = CultureStats::new(&header()).unwrap();
        assert!(matches!(stats.normalize(), Err(Error::Empty(_))));
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut stats = CultureStats::new(&header()).unwrap();
        stats.fold(&sample("a", "A", true, 8, &[(0, 0, 4, 2.0), (1, 1, 1, 0.1)]), true).unwrap();
        stats.fold(&sample("b", "B", true, 3, &[(1, 0, 3, 7.25)]), true).unwrap();
        let mut buf = Vec::new();
        stats.write_snapshot(true, &mut buf).unwrap();
        let (back, correct_only) = CultureStats::read_snapshot(&buf[..]).unwrap();
        assert!(correct_only);
        assert_eq!(back, stats);
    }
}
