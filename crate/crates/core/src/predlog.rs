// SPDX-License-Identifier: MIT OR Apache-2.0

//! The `.predlog` format: one prediction per line, keys
//! `{id, culture, question, options, truth, prediction, run}`.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::actlog::{sniff_id, ErrorPolicy, LineSource};
use crate::error::{Error, Result};
use crate::eval::answer::normalize_text;

pub const OPTIONS_PER_QUESTION: usize = 4;

/// Run id reserved for the unablated model.
pub const FULL_RUN: &str = "full";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRecord {
    #[serde(rename = "id")]
    pub sample_id: String,
    pub culture: String,
    pub question: String,
    pub options: Vec<String>,
    #[serde(rename = "truth")]
    pub ground_truth: String,
    #[serde(rename = "prediction")]
    pub raw_prediction: String,
    #[serde(rename = "run")]
    pub run_id: String,
}

impl PredictionRecord {
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.sample_id.is_empty() {
            return Err("empty sample id".into());
        }
        if self.culture.is_empty() {
            return Err("empty culture".into());
        }
        if self.run_id.is_empty() {
            return Err("empty run id".into());
        }
        if self.options.len() != OPTIONS_PER_QUESTION {
            return Err(format!(
                "expected {OPTIONS_PER_QUESTION} options, got {}",
                self.options.len()
            ));
        }
        let mut seen = HashSet::new();
        for opt in &self.options {
            let norm = normalize_text(opt);
            if norm.is_empty() {
                return Err("option is empty after normalization".into());
            }
            if !seen.insert(norm) {
                return Err(format!("options not distinct after normalization: `{opt}`"));
            }
        }
        if !self.options.iter().any(|o| o == &self.ground_truth) {
            return Err(format!("ground truth `{}` is not one of the options", self.ground_truth));
        }
        Ok(())
    }

    pub fn truth_index(&self) -> Option<usize> {
        self.options.iter().position(|o| o == &self.ground_truth)
    }
}

/// Lazy reader over a prediction log.
pub struct PredictionLogReader<R> {
    source: LineSource<R>,
    policy: ErrorPolicy,
    skipped: Vec<Error>,
    failed: bool,
}

pub fn parse_prediction_log<R: BufRead>(stream: R, policy: ErrorPolicy) -> PredictionLogReader<R> {
    PredictionLogReader {
        source: LineSource::new(stream),
        policy,
        skipped: Vec::new(),
        failed: false,
    }
}

impl<R: BufRead> PredictionLogReader<R> {
    pub fn skipped(&self) -> &[Error] {
        &self.skipped
    }
}

fn parse_line(line_no: usize, line: &str) -> Result<PredictionRecord> {
    let rec: PredictionRecord =
        serde_json::from_str(line).map_err(|e| Error::record(line_no, sniff_id(line), e.to_string()))?;
    rec.check()
        .map_err(|reason| Error::record(line_no, rec.sample_id.clone(), reason))?;
    Ok(rec)
}

impl<R: BufRead> Iterator for PredictionLogReader<R> {
    type Item = Result<PredictionRecord>;

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
            match parse_line(line_no, line) {
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

pub fn write_prediction_log<'a, W: Write>(
    records: impl IntoIterator<Item = &'a PredictionRecord>,
    mut sink: W,
) -> Result<()> {
    for (i, r) in records.into_iter().enumerate() {
        r.check()
            .map_err(|reason| Error::record(i + 1, r.sample_id.clone(), reason))?;
        serde_json::to_writer(&mut sink, r)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}
