// SPDX-License-Identifier: MIT OR Apache-2.0

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predlog::OPTIONS_PER_QUESTION;

/// Grouped culture codes used to label simulated cultures; beyond this list
/// cultures are named `C<index>`.
const CULTURE_CODES: [&str; 25] = [
    "BRA", "BGR", "CHN", "EGY", "ETA", "ETO", "FRA", "IND", "IDN", "IRL", "JPN", "KEN", "MYS", "MNG", "NGA", "NOR",
    "PAK", "PHL", "ROU", "RUS", "RWA", "SGP", "KOR", "ESP", "LKA",
];

/// Shape and behaviour of the toy decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub model_name: String,
    pub num_layers: usize,
    pub neurons_per_layer: usize,
    pub num_cultures: usize,
    pub planted_per_culture: usize,
    /// Pre-activation shift of a planted unit on its own culture's tokens.
    /// Planted units are centred at `-strength/2`, so own-culture tokens see
    /// `+strength/2` and everything else `-strength/2`.
    pub planted_strength: f64,
    /// Layers planted units are drawn from; `None` means every layer.
    pub planted_layers: Option<Vec<usize>>,
    /// Spread of the culture-independent bias of non-planted units.
    pub bias_std: f64,
    pub samples_per_culture: usize,
    pub options_per_question: usize,
    /// Inclusive range of valid tokens per sample.
    pub tokens_per_sample: (usize, usize),
    /// Inclusive range of padding / special tokens excluded by the valid-token mask.
    pub padding_tokens: (usize, usize),
    /// Probability of answering correctly while the planted pathway is intact.
    pub base_accuracy: f64,
    /// Probability of answering correctly once the pathway is degraded.
    pub degraded_accuracy: f64,
    /// The pathway is degraded when the masked planted contribution drops below
    /// this fraction of the unmasked one.
    pub degrade_fraction: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            model_name: "toy-swiglu-decoder".into(),
            num_layers: 4,
            neurons_per_layer: 64,
            num_cultures: 5,
            planted_per_culture: 6,
            planted_strength: 2.0,
            planted_layers: None,
            bias_std: 0.5,
            samples_per_culture: 200,
            options_per_question: OPTIONS_PER_QUESTION,
            tokens_per_sample: (16, 32),
            padding_tokens: (0, 4),
            base_accuracy: 0.7,
            degraded_accuracy: 0.3,
            degrade_fraction: 0.75,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn total_neurons(&self) -> usize {
        self.num_layers * self.neurons_per_layer
    }

    pub fn culture_names(&self) -> Vec<String> {
        (0..self.num_cultures)
            .map(|i| CULTURE_CODES.get(i).map_or_else(|| format!("C{i}"), |c| c.to_string()))
            .collect()
    }

    /// Number of planted candidates allowed by `planted_layers`.
    fn planted_capacity(&self) -> usize {
        match &self.planted_layers {
            None => self.total_neurons(),
            Some(layers) => layers.len() * self.neurons_per_layer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.num_layers == 0 || self.neurons_per_layer == 0 {
            return bad("the decoder needs at least one layer and one neuron per layer".into());
        }
        if self.num_cultures < 2 {
            return bad("at least two cultures are required".into());
        }
        if self.options_per_question != OPTIONS_PER_QUESTION {
            return bad(format!("options_per_question must be {OPTIONS_PER_QUESTION}"));
        }
        if let Some(layers) = &self.planted_layers {
            if layers.is_empty() || layers.iter().any(|&l| l >= self.num_layers) {
                return bad(format!("planted_layers {layers:?} invalid for {} layers", self.num_layers));
            }
            let mut sorted = layers.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != layers.len() {
                return bad("planted_layers contains duplicates".into());
            }
        }
        if self.planted_per_culture * self.num_cultures > self.planted_capacity() {
            return bad(format!(
                "{} planted neurons per culture × {} cultures exceed the {} available units",
                self.planted_per_culture,
                self.num_cultures,
                self.planted_capacity()
            ));
        }
        if !(self.planted_strength.is_finite() && self.planted_strength > 0.0) {
            return bad("planted_strength must be positive".into());
        }
        if !(self.bias_std.is_finite() && self.bias_std >= 0.0) {
            return bad("bias_std must be non-negative".into());
        }
        if self.samples_per_culture < 2 {
            return bad("samples_per_culture must allow a 50/50 split".into());
        }
        let (lo, hi) = self.tokens_per_sample;
        if lo == 0 || lo > hi {
            return bad(format!("tokens_per_sample range ({lo}, {hi}) invalid"));
        }
        if self.padding_tokens.0 > self.padding_tokens.1 {
            return bad("padding_tokens range invalid".into());
        }
        if !(self.base_accuracy > 0.0 && self.base_accuracy < 1.0) {
            return bad("base_accuracy must lie in (0, 1)".into());
        }
        if !(self.degraded_accuracy >= 0.0 && self.degraded_accuracy < self.base_accuracy) {
            return bad("degraded_accuracy must lie in [0, base_accuracy)".into());
        }
        if !(self.degrade_fraction > 0.0 && self.degrade_fraction <= 1.0) {
            return bad("degrade_fraction must lie in (0, 1]".into());
        }
        Ok(())
    }
}
