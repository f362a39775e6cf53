// SPDX-License-Identifier: MIT OR Apache-2.0

//! Presentation helpers: layer histograms, CSV matrices, plot data and text tables.
//!
//! Files keep full precision fractions; values are scaled to percentage points and
//! rounded to two decimals only here.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::metrics::{EvalReport, MethodMatrices};
use crate::mask::NeuronMask;

/// Number of masked neurons per layer, keyed by source culture.
pub fn layer_histogram(masks: &[NeuronMask]) -> BTreeMap<String, Vec<usize>> {
    masks
        .iter()
        .map(|m| {
            let mut counts = vec![0; m.layout().num_layers()];
            for id in m.entries() {
                counts[id.layer] += 1;
            }
            (m.source_culture().to_string(), counts)
        })
        .collect()
}

/// Fraction to percentage points.
pub fn pp(v: f64) -> f64 {
    100.0 * v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    Delta,
    FlipRate,
}

impl MatrixKind {
    pub fn label(self) -> &'static str {
        match self {
            MatrixKind::Delta => "accuracy change (pp)",
            MatrixKind::FlipRate => "flip rate (%)",
        }
    }

    fn pick(self, m: &MethodMatrices) -> &[Vec<f64>] {
        match self {
            MatrixKind::Delta => &m.delta,
            MatrixKind::FlipRate => &m.flip_rate,
        }
    }
}

/// CSV with source cultures as rows and evaluation cultures as columns, in
/// percentage points with two decimals.
pub fn matrix_csv(report: &EvalReport, m: &MethodMatrices, kind: MatrixKind) -> String {
    let mut out = String::from("source");
    for c in &report.cultures {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (src, row) in m.sources.iter().zip(kind.pick(m)) {
        out.push_str(src);
        for v in row {
            let _ = write!(out, ",{:.2}", pp(*v));
        }
        out.push('\n');
    }
    out
}

/// Heatmap-ready values with axis labels; rendering is left to the caller.
#[derive(Debug, Clone, Serialize)]
pub struct PlotData {
    pub title: String,
    pub x_label: &'static str,
    pub y_label: &'static str,
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

pub fn plot_data(report: &EvalReport) -> Vec<PlotData> {
    let mut plots = Vec::new();
    for m in &report.methods {
        for kind in [MatrixKind::Delta, MatrixKind::FlipRate] {
            plots.push(PlotData {
                title: format!("{} {}", m.method, kind.label()),
                x_label: "evaluation culture",
                y_label: "source culture",
                x: report.cultures.clone(),
                y: m.sources.clone(),
                values: kind.pick(m).iter().map(|row| row.iter().map(|&v| pp(v)).collect()).collect(),
            });
        }
    }
    for (method, hist) in &report.layer_hist {
        let layers = hist.values().map(Vec::len).max().unwrap_or(0);
        plots.push(PlotData {
            title: format!("{method} neurons per layer"),
            x_label: "layer",
            y_label: "source culture",
            x: (0..layers).map(|l| l.to_string()).collect(),
            y: hist.keys().cloned().collect(),
            values: hist.values().map(|row| row.iter().map(|&v| v as f64).collect()).collect(),
        });
    }
    plots
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{:.2}", pp(v)))
}

/// Human-readable summary: full accuracy, self/cross table, per-method matrices.
pub fn render_text(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Full-model accuracy (%)");
    for ((c, acc), n) in report.cultures.iter().zip(&report.acc_full).zip(&report.items) {
        let _ = writeln!(out, "  {c:<12} {:>7.2}  (n={n})", pp(*acc));
    }
    if !report.methods.is_empty() {
        let _ = writeln!(out, "\n{:<8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}", "method", "self Δ", "cross Δ", "gap Δ", "self FR", "cross FR", "gap FR");
        for m in &report.methods {
            let s = &m.summary;
            let _ = writeln!(
                out,
                "{:<8} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
                m.method.as_str(),
                fmt_opt(s.self_delta),
                fmt_opt(s.cross_delta),
                fmt_opt(s.gap_delta),
                fmt_opt(s.self_flip),
                fmt_opt(s.cross_flip),
                fmt_opt(s.gap_flip)
            );
        }
    }
    for m in &report.methods {
        for kind in [MatrixKind::Delta, MatrixKind::FlipRate] {
            let _ = writeln!(out, "\n{} {} (rows: source, columns: evaluation)", m.method, kind.label());
            let _ = write!(out, "{:<10}", "");
            for c in &report.cultures {
                let _ = write!(out, " {c:>8}");
            }
            out.push('\n');
            for (src, row) in m.sources.iter().zip(kind.pick(m)) {
                let _ = write!(out, "{src:<10}");
                for v in row {
                    let _ = write!(out, " {:>8.2}", pp(*v));
                }
                out.push('\n');
            }
        }
    }
    if let Some(v) = &report.variance_diag {
        let _ = writeln!(out, "\n{v}");
    }
    out
}
