// SPDX-License-Identifier: MIT OR Apache-2.0

//! Neuron addressing: `(layer, neuron)` pairs and the flat index space they map to.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One gate-branch unit of a decoder MLP.
///
/// Ordering is `(layer, neuron)` lexicographic, which is also the final
/// tie-break of every ranking in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NeuronId {
    pub layer: usize,
    pub neuron: usize,
}

impl NeuronId {
    pub const fn new(layer: usize, neuron: usize) -> Self {
        Self { layer, neuron }
    }
}

impl fmt::Display for NeuronId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}N{}", self.layer, self.neuron)
    }
}

/// Shape of the instrumented MLP stack with a dense flat index over all neurons.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    neurons_per_layer: Vec<usize>,
    offsets: Vec<usize>,
}

impl Layout {
    pub fn new(neurons_per_layer: Vec<usize>) -> Result<Self> {
        if neurons_per_layer.is_empty() {
            return Err(Error::Dimension("at least one layer is required".into()));
        }
        if let Some(l) = neurons_per_layer.iter().position(|&n| n == 0) {
            return Err(Error::Dimension(format!("layer {l} has zero neurons")));
        }
        let mut offsets = Vec::with_capacity(neurons_per_layer.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &n in &neurons_per_layer {
            acc += n;
            offsets.push(acc);
        }
        Ok(Self {
            neurons_per_layer,
            offsets,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.neurons_per_layer.len()
    }

    pub fn neurons_per_layer(&self) -> &[usize] {
        &self.neurons_per_layer
    }

    pub fn layer_width(&self, layer: usize) -> Option<usize> {
        self.neurons_per_layer.get(layer).copied()
    }

    /// Total number of MLP neurons across all layers.
    pub fn total(&self) -> usize {
        self.offsets[self.offsets.len() - 1]
    }

    /// Flat index range occupied by `layer`.
    pub fn layer_range(&self, layer: usize) -> std::ops::Range<usize> {
        self.offsets[layer]..self.offsets[layer + 1]
    }

    pub fn contains(&self, id: NeuronId) -> bool {
        self.layer_width(id.layer).is_some_and(|w| id.neuron < w)
    }

    pub fn flat(&self, id: NeuronId) -> Option<usize> {
        self.contains(id).then(|| self.offsets[id.layer] + id.neuron)
    }

    pub fn id(&self, flat: usize) -> NeuronId {
        debug_assert!(flat < self.total());
        // offsets is sorted; find the last offset <= flat
        let layer = self.offsets.partition_point(|&o| o <= flat) - 1;
        NeuronId::new(layer, flat - self.offsets[layer])
    }

    /// All neuron ids in `(layer, neuron)` order.
    pub fn ids(&self) -> impl Iterator<Item = NeuronId> + '_ {
        self.neurons_per_layer
            .iter()
            .enumerate()
            .flat_map(|(l, &w)| (0..w).map(move |n| NeuronId::new(l, n)))
    }
}
