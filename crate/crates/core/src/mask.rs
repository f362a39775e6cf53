// SPDX-License-Identifier: MIT OR Apache-2.0

//! Keep-masks over gate-branch activations and their on-disk formats.
//!
//! A mask deactivates a set of neurons: for layer `l` the keep vector holds 0 at
//! every selected neuron and 1 elsewhere, and is multiplied into the gate output
//! `g = SiLU(u)` of every token before the up-projection product.
//!
//! `.mask` file: a header line `{method, culture, r_percent, seed?, neurons_per_layer}`
//! followed by one `[layer, neuron]` line per deactivated neuron in ascending order.
//!
//! Run manifest: one `{run, mask}` line per run, where `mask` is a mask path
//! (relative to the manifest) or the literal `"full"`.

use std::collections::{BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::actlog::LineSource;
use crate::error::{Error, Result};
use crate::layout::{Layout, NeuronId};
use crate::predlog::FULL_RUN;
use crate::selectors::{Method, Selection};

/// Provenance of a mask: which selector produced it for which source culture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskMeta {
    pub method: Method,
    pub culture: String,
    pub r_percent: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronMask {
    meta: MaskMeta,
    layout: Layout,
    entries: BTreeSet<NeuronId>,
    keep: Vec<Vec<u8>>,
}

/// Builds the keep vectors for `selected` over `layout`.
pub fn build_keep_mask(
    meta: MaskMeta,
    selected: impl IntoIterator<Item = NeuronId>,
    layout: &Layout,
) -> Result<NeuronMask> {
    let mut keep: Vec<Vec<u8>> = layout.neurons_per_layer().iter().map(|&w| vec![1; w]).collect();
    let mut entries = BTreeSet::new();
    for id in selected {
        if !layout.contains(id) {
            return Err(Error::Dimension(format!("{id} is outside the declared neuron space")));
        }
        keep[id.layer][id.neuron] = 0;
        entries.insert(id);
    }
    Ok(NeuronMask {
        meta,
        layout: layout.clone(),
        entries,
        keep,
    })
}

impl NeuronMask {
    pub fn meta(&self) -> &MaskMeta {
        &self.meta
    }

    pub fn method(&self) -> Method {
        self.meta.method
    }

    pub fn source_culture(&self) -> &str {
        &self.meta.culture
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn entries(&self) -> &BTreeSet<NeuronId> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        self.entries.contains(&id)
    }

    pub fn keep_vector(&self, layer: usize) -> &[u8] {
        &self.keep[layer]
    }

    /// Elementwise product of one token's gate activations with the layer's keep vector.
    pub fn apply(&self, gate: &[f64], layer: usize) -> Result<Vec<f64>> {
        let mut out = gate.to_vec();
        self.apply_in_place(&mut out, layer)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, gate: &mut [f64], layer: usize) -> Result<()> {
        let keep = self
            .keep
            .get(layer)
            .ok_or_else(|| Error::Dimension(format!("mask has no layer {layer}")))?;
        if keep.len() != gate.len() {
            return Err(Error::Dimension(format!(
                "layer {layer}: activation length {} but mask width {}",
                gate.len(),
                keep.len()
            )));
        }
        for (g, &k) in gate.iter_mut().zip(keep) {
            if k == 0 {
                *g = 0.0;
            }
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        #[derive(Serialize)]
        struct Header<'a> {
            #[serde(flatten)]
            meta: &'a MaskMeta,
            neurons_per_layer: &'a [usize],
        }
        serde_json::to_writer(
            &mut sink,
            &Header {
                meta: &self.meta,
                neurons_per_layer: self.layout.neurons_per_layer(),
            },
        )?;
        sink.write_all(b"\n")?;
        for id in &self.entries {
            writeln!(sink, "[{},{}]", id.layer, id.neuron)?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(stream: R) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Header {
            method: Method,
            culture: String,
            r_percent: f64,
            #[serde(default)]
            seed: Option<u64>,
            neurons_per_layer: Vec<usize>,
        }
        let mut source = LineSource::new(stream);
        let header: Header = match source.next_line()? {
            None => return Err(Error::Header("empty mask file".into())),
            Some((_, line)) => serde_json::from_str(line).map_err(|e| Error::Header(e.to_string()))?,
        };
        let layout = Layout::new(header.neurons_per_layer).map_err(|e| Error::Header(e.to_string()))?;
        let meta = MaskMeta {
            method: header.method,
            culture: header.culture,
            r_percent: header.r_percent,
            seed: header.seed,
        };
        let mut ids = Vec::new();
        while let Some((line_no, line)) = source.next_line()? {
            let (layer, neuron): (usize, usize) =
                serde_json::from_str(line).map_err(|e| Error::record(line_no, &meta.culture, e.to_string()))?;
            ids.push(NeuronId::new(layer, neuron));
        }
        build_keep_mask(meta, ids, &layout)
    }

    /// Conventional file name, e.g. `CAS_IND.mask`.
    pub fn file_name(&self) -> String {
        format!("{}_{}.mask", self.meta.method, self.meta.culture)
    }
}

impl Selection {
    /// One mask per culture in the selection.
    pub fn into_masks(self, layout: &Layout) -> Result<Vec<NeuronMask>> {
        self.per_culture
            .into_iter()
            .map(|(culture, ids)| {
                let meta = MaskMeta {
                    method: self.method,
                    culture,
                    r_percent: self.r_percent,
                    seed: self.seed,
                };
                build_keep_mask(meta, ids, layout)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunTarget {
    Full,
    Mask(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunEntry {
    pub run_id: String,
    pub target: RunTarget,
}

/// Join key between prediction-log run ids and mask files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub entries: Vec<RunEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestLine {
    run: String,
    mask: String,
}

impl RunManifest {
    pub fn push(&mut self, run_id: impl Into<String>, target: RunTarget) -> Result<()> {
        let run_id = run_id.into();
        if self.entries.iter().any(|e| e.run_id == run_id) {
            return Err(Error::Config(format!("run `{run_id}` listed twice in manifest")));
        }
        self.entries.push(RunEntry { run_id, target });
        Ok(())
    }

    pub fn get(&self, run_id: &str) -> Option<&RunTarget> {
        self.entries.iter().find(|e| e.run_id == run_id).map(|e| &e.target)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        for e in &self.entries {
            let mask = match &e.target {
                RunTarget::Full => FULL_RUN.to_string(),
                RunTarget::Mask(p) => p.to_string_lossy().into_owned(),
            };
            serde_json::to_writer(&mut sink, &ManifestLine { run: e.run_id.clone(), mask })?;
            sink.write_all(b"\n")?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn read<R: BufRead>(stream: R) -> Result<Self> {
        let mut source = LineSource::new(stream);
        let mut manifest = RunManifest::default();
        let mut seen = HashSet::new();
        while let Some((line_no, line)) = source.next_line()? {
            let l: ManifestLine = serde_json::from_str(line).map_err(|e| Error::record(line_no, "?", e.to_string()))?;
            if !seen.insert(l.run.clone()) {
                return Err(Error::record(line_no, l.run, "duplicate run id"));
            }
            let target = if l.mask == FULL_RUN {
                RunTarget::Full
            } else {
                RunTarget::Mask(PathBuf::from(l.mask))
            };
            manifest.entries.push(RunEntry { run_id: l.run, target });
        }
        Ok(manifest)
    }

    /// Resolves relative mask paths against `base` (normally the manifest's directory).
    pub fn resolve(&self, base: &Path) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|e| RunEntry {
                run_id: e.run_id.clone(),
                target: match &e.target {
                    RunTarget::Mask(p) if p.is_relative() => RunTarget::Mask(base.join(p)),
                    other => other.clone(),
                },
            })
            .collect();
        Self { entries }
    }
}
