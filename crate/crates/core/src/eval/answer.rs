// SPDX-License-Identifier: MIT OR Apache-2.0

//! Answer extraction for free-text multiple-choice predictions.
//!
//! The prediction is lowercased, whitespace is collapsed and trimmed, and every
//! option is searched for as a whole word (bounded by non-alphanumeric characters
//! or the ends of the text). When several options occur, the one mentioned last
//! wins: models tend to deliberate before committing to a final answer. If no
//! option occurs as a whole word, correctness falls back to a plain substring test
//! for the ground truth.

use serde::{Deserialize, Serialize};

use crate::predlog::PredictionRecord;

/// Lowercase, collapse runs of whitespace to a single space, trim the ends.
pub fn normalize_text(s: &str) -> String {
    s.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchKind {
    WordBoundaryLast,
    SubstringFallback,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedAnswer {
    /// Index into the original options.
    pub matched_index: Option<usize>,
    /// The matched option after normalization.
    pub matched_option: Option<String>,
    pub match_kind: MatchKind,
    /// Byte offset of the deciding occurrence in the normalized prediction.
    pub position: Option<usize>,
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Byte offset of the last whole-word occurrence of `needle` in `haystack`.
/// Overlapping occurrences are considered.
pub fn last_word_boundary_match(haystack: &str, needle: &str) -> Option<usize> {
    if needle.is_empty() {
        return None;
    }
    let mut last = None;
    let mut from = 0;
    while let Some(rel) = haystack[from..].find(needle) {
        let start = from + rel;
        let end = start + needle.len();
        let before_ok = haystack[..start].chars().next_back().is_none_or(|c| !is_word_char(c));
        let after_ok = haystack[end..].chars().next().is_none_or(|c| !is_word_char(c));
        if before_ok && after_ok {
            last = Some(start);
        }
        let step = haystack[start..].chars().next().map_or(1, char::len_utf8);
        from = start + step;
    }
    last
}

/// Picks the option whose last whole-word mention is latest in the prediction.
/// Equal positions prefer the longer option, then the earlier one.
pub fn normalize_answer<S: AsRef<str>>(prediction: &str, options: &[S]) -> NormalizedAnswer {
    let text = normalize_text(prediction);
    let mut best: Option<(usize, usize, usize, String)> = None; // (pos, len, index, option)
    for (i, opt) in options.iter().enumerate() {
        let norm = normalize_text(opt.as_ref());
        let Some(pos) = last_word_boundary_match(&text, &norm) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bp, bl, _, _)) => pos > *bp || (pos == *bp && norm.len() > *bl),
        };
        if better {
            best = Some((pos, norm.len(), i, norm));
        }
    }
    match best {
        Some((pos, _, i, norm)) => NormalizedAnswer {
            matched_index: Some(i),
            matched_option: Some(norm),
            match_kind: MatchKind::WordBoundaryLast,
            position: Some(pos),
        },
        None => NormalizedAnswer {
            matched_index: None,
            matched_option: None,
            match_kind: MatchKind::None,
            position: None,
        },
    }
}

/// Outcome of grading one prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graded {
    pub answer: NormalizedAnswer,
    pub correct: bool,
    /// What flip detection compares: the matched option, or the normalized raw
    /// prediction when nothing matched.
    pub answer_key: String,
}

pub fn grade(record: &PredictionRecord) -> Graded {
    let mut answer = normalize_answer(&record.raw_prediction, &record.options);
    let truth = normalize_text(&record.ground_truth);
    let text = normalize_text(&record.raw_prediction);
    let correct = match &answer.matched_option {
        Some(opt) => *opt == truth,
        None => {
            let hit = !truth.is_empty() && text.contains(&truth);
            if hit {
                answer.match_kind = MatchKind::SubstringFallback;
            }
            hit
        }
    };
    let answer_key = answer.matched_option.clone().unwrap_or(text);
    Graded {
        answer,
        correct,
        answer_key,
    }
}

pub fn score_correct(record: &PredictionRecord) -> bool {
    grade(record).correct
}
