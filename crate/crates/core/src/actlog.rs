// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `.actlog` format: per-sample activation summaries, one JSON object per line.
//!
//! Line 1 is a [`LogHeader`]. Every following line is a [`SampleRecord`] with the
//! wire keys `{id, culture, correct, T, layers}`, where `layers` is a list of
//! `[layer_index, [[neuron, fire_count, pos_sum], ...]]`. Token-level traces never
//! appear in the log; the exporter (or the simulator) sums over valid tokens first.
//!
//! A file is canonical when layers and neuron indices are strictly increasing, line
//! endings are `\n`, and floats use the shortest round-trip decimal. Parsing and
//! re-writing a canonical file reproduces it byte for byte.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::Layout;

pub const FORMAT_VERSION: u32 = 1;

/// Slack allowed when checking that a zero fire count carries a zero positive sum.
pub const POS_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogHeader {
    pub model_name: String,
    pub num_layers: usize,
    pub neurons_per_layer: Vec<usize>,
    pub cultures: Vec<String>,
    pub format_version: u32,
}

impl LogHeader {
    pub fn new(model_name: impl Into<String>, neurons_per_layer: Vec<usize>, cultures: Vec<String>) -> Self {
        Self {
            model_name: model_name.into(),
            num_layers: neurons_per_layer.len(),
            neurons_per_layer,
            cultures,
            format_version: FORMAT_VERSION,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_layers == 0 {
            return Err(Error::Header("num_layers must be at least 1".into()));
        }
        if self.neurons_per_layer.len() != self.num_layers {
            return Err(Error::Header(format!(
                "neurons_per_layer has {} entries but num_layers is {}",
                self.neurons_per_layer.len(),
                self.num_layers
            )));
        }
        if let Some(l) = self.neurons_per_layer.iter().position(|&n| n == 0) {
            return Err(Error::Header(format!("layer {l} declares zero neurons")));
        }
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Header(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        let mut seen = HashMap::new();
        for (i, c) in self.cultures.iter().enumerate() {
            if c.is_empty() {
                return Err(Error::Header(format!("culture #{i} has an empty identifier")));
            }
            if let Some(prev) = seen.insert(c.as_str(), i) {
                return Err(Error::Header(format!("culture `{c}` declared twice (#{prev} and #{i})")));
            }
        }
        Ok(())
    }

    pub fn layout(&self) -> Layout {
        Layout::new(self.neurons_per_layer.clone()).expect("validated header has a valid layout")
    }

    pub fn culture_index(&self, culture: &str) -> Option<usize> {
        self.cultures.iter().position(|c| c == culture)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronActivity {
    pub neuron: usize,
    pub fire_count: u64,
    pub pos_sum: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivity {
    pub layer: usize,
    pub entries: Vec<NeuronActivity>,
}

/// Per-sample contribution to the fire counts, positive sums and token total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "SampleWire", try_from = "SampleWire")]
pub struct SampleRecord {
    pub sample_id: String,
    pub culture: String,
    pub answered_correctly: bool,
    /// Number of tokens with a set valid-token mask.
    pub valid_tokens: u64,
    pub layers: Vec<LayerActivity>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleWire {
    id: String,
    culture: String,
    correct: bool,
    #[serde(rename = "T")]
    valid_tokens: u64,
    layers: Vec<(usize, Vec<(usize, u64, f64)>)>,
}

impl From<SampleRecord> for SampleWire {
    fn from(r: SampleRecord) -> Self {
        SampleWire {
            id: r.sample_id,
            culture: r.culture,
            correct: r.answered_correctly,
            valid_tokens: r.valid_tokens,
            layers: r
                .layers
                .into_iter()
                .map(|l| {
                    let entries = l.entries.into_iter().map(|e| (e.neuron, e.fire_count, e.pos_sum)).collect();
                    (l.layer, entries)
                })
                .collect(),
        }
    }
}

impl TryFrom<SampleWire> for SampleRecord {
    type Error = std::convert::Infallible;

    fn try_from(w: SampleWire) -> std::result::Result<Self, Self::Error> {
        Ok(SampleRecord {
            sample_id: w.id,
            culture: w.culture,
            answered_correctly: w.correct,
            valid_tokens: w.valid_tokens,
            layers: w
                .layers
                .into_iter()
                .map(|(layer, entries)| LayerActivity {
                    layer,
                    entries: entries
                        .into_iter()
                        .map(|(neuron, fire_count, pos_sum)| NeuronActivity {
                            neuron,
                            fire_count,
                            pos_sum,
                        })
                        .collect(),
                })
                .collect(),
        })
    }
}

impl SampleRecord {
    /// Checks the invariants that do not depend on a header: fire counts bounded by
    /// the valid-token count, sign and consistency of positive sums, canonical order.
    pub fn check_intrinsic(&self) -> std::result::Result<(), String> {
        let mut prev_layer = None;
        for layer in &self.layers {
            if prev_layer.is_some_and(|p| layer.layer <= p) {
                return Err(format!("layer {} out of order", layer.layer));
            }
            prev_layer = Some(layer.layer);
            let mut prev_neuron = None;
            for e in &layer.entries {
                if prev_neuron.is_some_and(|p| e.neuron <= p) {
                    return Err(format!("layer {}: neuron {} out of order", layer.layer, e.neuron));
                }
                prev_neuron = Some(e.neuron);
                if e.fire_count > self.valid_tokens {
                    return Err(format!(
                        "layer {} neuron {}: fire_count {} exceeds valid_tokens {}",
                        layer.layer, e.neuron, e.fire_count, self.valid_tokens
                    ));
                }
                if !e.pos_sum.is_finite() || e.pos_sum < 0.0 {
                    return Err(format!(
                        "layer {} neuron {}: pos_sum {} is not a finite non-negative number",
                        layer.layer, e.neuron, e.pos_sum
                    ));
                }
                if e.fire_count == 0 && e.pos_sum > POS_SUM_TOLERANCE {
                    return Err(format!(
                        "layer {} neuron {}: pos_sum {} without any firing token",
                        layer.layer, e.neuron, e.pos_sum
                    ));
                }
                if e.fire_count > 0 && e.pos_sum <= 0.0 {
                    return Err(format!(
                        "layer {} neuron {}: fired {} times with zero pos_sum",
                        layer.layer, e.neuron, e.fire_count
                    ));
                }
            }
        }
        Ok(())
    }

    /// Checks intrinsic invariants plus culture and index ranges against `header`.
    pub fn check_against(&self, header: &LogHeader) -> std::result::Result<(), String> {
        if header.culture_index(&self.culture).is_none() {
            return Err(format!("unknown culture `{}`", self.culture));
        }
        for layer in &self.layers {
            let Some(&width) = header.neurons_per_layer.get(layer.layer) else {
                return Err(format!("layer {} out of range (num_layers {})", layer.layer, header.num_layers));
            };
            if let Some(e) = layer.entries.iter().find(|e| e.neuron >= width) {
                return Err(format!(
                    "layer {}: neuron {} out of range (width {width})",
                    layer.layer, e.neuron
                ));
            }
        }
        self.check_intrinsic()
    }
}

/// What a reader does when a single record fails validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ErrorPolicy {
    /// Yield the error and stop.
    #[default]
    FailFast,
    /// Drop the record, remember the error, continue.
    Skip,
}

/// Shared line pump for the line-delimited formats: reuses one buffer, normalizes
/// `\r\n`, skips blank lines.
pub(crate) struct LineSource<R> {
    inner: R,
    buf: String,
    line: usize,
}

impl<R: BufRead> LineSource<R> {
    pub(crate) fn new(inner: R) -> Self {
        Self {
            inner,
            buf: String::new(),
            line: 0,
        }
    }

    /// Next non-blank line and its 1-based number.
    pub(crate) fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        loop {
            self.buf.clear();
            if self.inner.read_line(&mut self.buf)? == 0 {
                return Ok(None);
            }
            self.line += 1;
            let trimmed = self.buf.trim_end_matches(['\n', '\r']);
            if !trimmed.trim().is_empty() {
                let len = trimmed.len();
                return Ok(Some((self.line, &self.buf[..len])));
            }
        }
    }
}

/// Best-effort sample id of a line that failed to deserialize.
pub(crate) fn sniff_id(line: &str) -> String {
    serde_json::from_str::<serde_json::Value>(line)
        .ok()
        .and_then(|v| v.get("id").and_then(|id| id.as_str()).map(str::to_owned))
        .unwrap_or_else(|| "?".to_owned())
}

/// Streaming reader: the header is parsed eagerly, records lazily one line at a time.
pub struct ActivationLogReader<R> {
    header: LogHeader,
    source: LineSource<R>,
    policy: ErrorPolicy,
    skipped: Vec<Error>,
    failed: bool,
}

/// Opens an activation log and validates its header.
pub fn parse_activation_log<R: BufRead>(stream: R, policy: ErrorPolicy) -> Result<ActivationLogReader<R>> {
    let mut source = LineSource::new(stream);
    let header = match source.next_line()? {
        None => return Err(Error::Header("stream is empty".into())),
        Some((_, line)) => {
            serde_json::from_str::<LogHeader>(line).map_err(|e| Error::Header(e.to_string()))?
        }
    };
    header.validate()?;
    Ok(ActivationLogReader {
        header,
        source,
        policy,
        skipped: Vec::new(),
        failed: false,
    })
}

impl<R: BufRead> ActivationLogReader<R> {
    pub fn header(&self) -> &LogHeader {
        &self.header
    }

    /// Record-level errors dropped so far under [`ErrorPolicy::Skip`].
    pub fn skipped(&self) -> &[Error] {
        &self.skipped
    }

    fn parse_line(header: &LogHeader, line_no: usize, line: &str) -> Result<SampleRecord> {
        let record: SampleRecord =
            serde_json::from_str(line).map_err(|e| Error::record(line_no, sniff_id(line), e.to_string()))?;
        record
            .check_against(header)
            .map_err(|reason| Error::record(line_no, record.sample_id.clone(), reason))?;
        Ok(record)
    }
}

impl<R: BufRead> Iterator for ActivationLogReader<R> {
    type Item = Result<SampleRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let (line_no, line) = match self.source.next_line() {
                Ok(Some(l)) => l,
                Ok(None) => return None,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            match Self::parse_line(&self.header, line_no, line) {
                Ok(r) => return Some(Ok(r)),
                Err(e) if self.policy == ErrorPolicy::Skip => self.skipped.push(e),
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Incremental writer; the header line is emitted on construction.
pub struct ActivationLogWriter<W: Write> {
    header: LogHeader,
    sink: W,
    written: usize,
}

impl<W: Write> ActivationLogWriter<W> {
    pub fn new(header: LogHeader, mut sink: W) -> Result<Self> {
        header.validate()?;
        serde_json::to_writer(&mut sink, &header)?;
        sink.write_all(b"\n")?;
        Ok(Self {
            header,
            sink,
            written: 0,
        })
    }

    pub fn write_record(&mut self, record: &SampleRecord) -> Result<()> {
        // line numbers are reported as they would appear in the output file
        let line = self.written + 2;
        record
            .check_against(&self.header)
            .map_err(|reason| Error::record(line, record.sample_id.clone(), reason))?;
        serde_json::to_writer(&mut self.sink, record)?;
        self.sink.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}

pub fn write_activation_log<'a, W: Write>(
    header: &LogHeader,
    records: impl IntoIterator<Item = &'a SampleRecord>,
    sink: W,
) -> Result<()> {
    let mut writer = ActivationLogWriter::new(header.clone(), sink)?;
    for r in records {
        writer.write_record(r)?;
    }
    writer.finish()?;
    Ok(())
}
