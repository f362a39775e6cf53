// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::text;
use crate::actlog::{LayerActivity, LogHeader, NeuronActivity, SampleRecord};
use crate::error::{Error, Result};
use crate::eval::score_correct;
use crate::layout::{Layout, NeuronId};
use crate::mask::NeuronMask;
use crate::predlog::{PredictionRecord, FULL_RUN};

/// Spread of the up-projection branch around 1.
const UP_STD: f64 = 0.25;

/// Mixes a master seed, a sample id and a stream label into an independent seed.
/// FNV-1a over the inputs followed by a splitmix64 finalizer.
pub fn derive_seed(seed: u64, sample_id: &str, stream: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&seed.to_le_bytes());
    eat(sample_id.as_bytes());
    eat(&[0xff]);
    eat(stream.as_bytes());
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, sample_id: &str, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, sample_id, stream))
}

pub fn silu(u: f64) -> f64 {
    u / (1.0 + (-u).exp())
}

/// Culture → planted neurons.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlantedGroundTruth(BTreeMap<String, BTreeSet<NeuronId>>);

impl PlantedGroundTruth {
    pub fn get(&self, culture: &str) -> Option<&BTreeSet<NeuronId>> {
        self.0.get(culture)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<NeuronId>)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Culture owning `id`, if planted.
    pub fn owner(&self, id: NeuronId) -> Option<&str> {
        self.0.iter().find(|(_, set)| set.contains(&id)).map(|(c, _)| c.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Identification,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub id: String,
    pub culture: usize,
    pub split: Split,
    pub question: String,
    pub options: Vec<String>,
    pub truth: usize,
    pub valid_tokens: usize,
    pub padding_tokens: usize,
}

/// Outcome of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardResult {
    /// Per layer and neuron: valid tokens with a positive (post-mask) gate output.
    pub fire_counts: Vec<Vec<u64>>,
    /// Per layer and neuron: sum of positive (post-mask) gate outputs over valid tokens.
    pub pos_sums: Vec<Vec<f64>>,
    pub valid_tokens: u64,
    /// Whether `g > 0` agreed with `u > 0` for every unmasked unit on every valid token.
    pub sign_agreement: bool,
    /// Summed `g·v` of the sample culture's planted units, without and with the mask.
    pub planted_full: f64,
    pub planted_masked: f64,
    pub degraded: bool,
    pub predicted: usize,
    pub raw_prediction: String,
    /// Post-mask gate outputs `[token][layer][neuron]` over valid tokens, when traced.
    pub trace: Option<Vec<Vec<Vec<f64>>>>,
}

/// A toy decoder whose MLP gate neurons include planted culture-specific units.
#[derive(Debug, Clone)]
pub struct SimModel {
    cfg: SimConfig,
    layout: Layout,
    cultures: Vec<String>,
    planted: PlantedGroundTruth,
    /// Flat index → owning culture index.
    owner: Vec<Option<usize>>,
    bias: Vec<f64>,
}

impl SimModel {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let layout = Layout::new(vec![cfg.neurons_per_layer; cfg.num_layers])?;
        let cultures = cfg.culture_names();
        let mut rng = stream_rng(cfg.seed, "", "model");

        let candidates: Vec<usize> = match &cfg.planted_layers {
            None => (0..layout.total()).collect(),
            Some(layers) => {
                let mut v: Vec<usize> = layers.iter().flat_map(|&l| layout.layer_range(l)).collect();
                v.sort_unstable();
                v
            }
        };
        let k = cfg.planted_per_culture;
        let picks = index::sample(&mut rng, candidates.len(), k * cultures.len()).into_vec();
        let mut owner = vec![None; layout.total()];
        let mut planted = BTreeMap::new();
        for (c, name) in cultures.iter().enumerate() {
            let set: BTreeSet<NeuronId> = picks[c * k..(c + 1) * k]
                .iter()
                .map(|&p| {
                    owner[candidates[p]] = Some(c);
                    layout.id(candidates[p])
                })
                .collect();
            planted.insert(name.clone(), set);
        }

        let half = cfg.planted_strength / 2.0;
        let bias = owner
            .iter()
            .map(|o| {
                let noise: f64 = rng.sample(StandardNormal);
                match o {
                    Some(_) => -half,
                    None => cfg.bias_std * noise,
                }
            })
            .collect();

        Ok(Self {
            cfg,
            layout,
            cultures,
            planted: PlantedGroundTruth(planted),
            owner,
            bias,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn cultures(&self) -> &[String] {
        &self.cultures
    }

    pub fn planted(&self) -> &PlantedGroundTruth {
        &self.planted
    }

    pub fn header(&self) -> LogHeader {
        LogHeader::new(
            self.cfg.model_name.clone(),
            self.layout.neurons_per_layer().to_vec(),
            self.cultures.clone(),
        )
    }

    /// All samples, culture by culture; the first half of each culture forms the
    /// identification split and the rest the evaluation split.
    pub fn samples(&self) -> Vec<Sample> {
        let n = self.cfg.samples_per_culture;
        let mut out = Vec::with_capacity(n * self.cultures.len());
        for (c, name) in self.cultures.iter().enumerate() {
            for i in 0..n {
                let id = format!("{name}-{i:04}");
                let mut rng = stream_rng(self.cfg.seed, &id, "content");
                let question = text::question(&mut rng, name);
                let options = text::options(&mut rng, self.cfg.options_per_question);
                let truth = rng.random_range(0..options.len());
                let (lo, hi) = self.cfg.tokens_per_sample;
                let valid_tokens = rng.random_range(lo..=hi);
                let (plo, phi) = self.cfg.padding_tokens;
                let padding_tokens = rng.random_range(plo..=phi);
                out.push(Sample {
                    id,
                    culture: c,
                    split: if i < n / 2 {
                        Split::Identification
                    } else {
                        Split::Evaluation
                    },
                    question,
                    options,
                    truth,
                    valid_tokens,
                    padding_tokens,
                });
            }
        }
        out
    }

    pub fn samples_in(&self, split: Split) -> Vec<Sample> {
        self.samples().into_iter().filter(|s| s.split == split).collect()
    }

    pub fn forward(&self, sample: &Sample, mask: Option<&NeuronMask>) -> Result<ForwardResult> {
        self.run(sample, mask, false)
    }

    /// Like [`forward`](Self::forward) but also records every valid token's gate outputs.
    pub fn forward_traced(&self, sample: &Sample, mask: Option<&NeuronMask>) -> Result<ForwardResult> {
        self.run(sample, mask, true)
    }

    fn run(&self, sample: &Sample, mask: Option<&NeuronMask>, keep_trace: bool) -> Result<ForwardResult> {
        if sample.culture >= self.cultures.len() {
            return Err(Error::UnknownCulture(format!("culture index {}", sample.culture)));
        }
        if let Some(m) = mask {
            if m.layout() != &self.layout {
                return Err(Error::Dimension(format!(
                    "mask shape {:?} does not match model shape {:?}",
                    m.layout().neurons_per_layer(),
                    self.layout.neurons_per_layer()
                )));
            }
        }

        let widths = self.layout.neurons_per_layer();
        let mut fire_counts: Vec<Vec<u64>> = widths.iter().map(|&w| vec![0; w]).collect();
        let mut pos_sums: Vec<Vec<f64>> = widths.iter().map(|&w| vec![0.0; w]).collect();
        let mut trace = keep_trace.then(Vec::new);
        let mut sign_agreement = true;
        let mut planted_full = 0.0;
        let mut planted_masked = 0.0;
        let boost = self.cfg.planted_strength;

        let mut rng = stream_rng(self.cfg.seed, &sample.id, "tokens");
        let mut gate = Vec::new();
        for t in 0..sample.padding_tokens + sample.valid_tokens {
            // Padding precedes the content tokens and is excluded by the valid-token mask.
            let valid = t >= sample.padding_tokens;
            let mut token_trace = Vec::with_capacity(widths.len());
            for (layer, &width) in widths.iter().enumerate() {
                gate.clear();
                let mut up = Vec::with_capacity(width);
                let mut pre = Vec::with_capacity(width);
                for flat in self.layout.layer_range(layer) {
                    let own = valid && self.owner[flat] == Some(sample.culture);
                    let noise: f64 = rng.sample(StandardNormal);
                    let u = self.bias[flat] + if own { boost } else { 0.0 } + noise;
                    let up_noise: f64 = rng.sample(StandardNormal);
                    pre.push(u);
                    up.push(1.0 + UP_STD * up_noise);
                    gate.push(silu(u));
                }
                if !valid {
                    continue;
                }
                let base = self.layout.layer_range(layer).start;
                for n in 0..width {
                    if (gate[n] > 0.0) != (pre[n] > 0.0) {
                        sign_agreement = false;
                    }
                    if self.owner[base + n] == Some(sample.culture) {
                        planted_full += gate[n] * up[n];
                    }
                }
                if let Some(m) = mask {
                    m.apply_in_place(&mut gate, layer)?;
                }
                for n in 0..width {
                    let g = gate[n];
                    if self.owner[base + n] == Some(sample.culture) {
                        planted_masked += g * up[n];
                    }
                    if g > 0.0 {
                        fire_counts[layer][n] += 1;
                        pos_sums[layer][n] += g;
                    }
                }
                if keep_trace {
                    token_trace.push(gate.clone());
                }
            }
            if let Some(tr) = trace.as_mut() {
                if valid {
                    tr.push(token_trace);
                }
            }
        }

        let degraded = planted_full > 0.0 && planted_masked < self.cfg.degrade_fraction * planted_full;
        let (predicted, raw_prediction) = self.decode(sample, degraded);
        Ok(ForwardResult {
            fire_counts,
            pos_sums,
            valid_tokens: sample.valid_tokens as u64,
            sign_agreement,
            planted_full,
            planted_masked,
            degraded,
            predicted,
            raw_prediction,
            trace,
        })
    }

    /// Greedy decoding stand-in: a fixed per-sample draw compared against the
    /// accuracy of the current pathway state, so masked and unmasked runs share
    /// every random choice.
    fn decode(&self, sample: &Sample, degraded: bool) -> (usize, String) {
        let mut rng = stream_rng(self.cfg.seed, &sample.id, "decode");
        let x: f64 = rng.random();
        let wrong_pick = rng.random_range(0..sample.options.len() - 1);
        let template = rng.random_range(0..text::TEMPLATES);
        let distractor_pick = rng.random_range(0..sample.options.len() - 1);

        let accuracy = if degraded {
            self.cfg.degraded_accuracy
        } else {
            self.cfg.base_accuracy
        };
        let predicted = if x < accuracy {
            sample.truth
        } else {
            nth_other(sample.options.len(), sample.truth, wrong_pick)
        };
        let distractor = nth_other(sample.options.len(), predicted, distractor_pick);
        let raw = text::raw_prediction(template, &sample.options[predicted], &sample.options[distractor]);
        (predicted, raw)
    }

    pub fn prediction_record(&self, sample: &Sample, result: &ForwardResult, run_id: &str) -> PredictionRecord {
        PredictionRecord {
            sample_id: sample.id.clone(),
            culture: self.cultures[sample.culture].clone(),
            question: sample.question.clone(),
            options: sample.options.clone(),
            ground_truth: sample.options[sample.truth].clone(),
            raw_prediction: result.raw_prediction.clone(),
            run_id: run_id.to_string(),
        }
    }

    /// Sparse activation record; correctness comes from grading the raw prediction.
    pub fn sample_record(&self, sample: &Sample, result: &ForwardResult) -> SampleRecord {
        let pred = self.prediction_record(sample, result, FULL_RUN);
        let layers = result
            .fire_counts
            .iter()
            .zip(&result.pos_sums)
            .enumerate()
            .filter_map(|(layer, (counts, sums))| {
                let entries: Vec<NeuronActivity> = counts
                    .iter()
                    .zip(sums)
                    .enumerate()
                    .filter(|(_, (&k, _))| k > 0)
                    .map(|(neuron, (&fire_count, &pos_sum))| NeuronActivity {
                        neuron,
                        fire_count,
                        pos_sum,
                    })
                    .collect();
                (!entries.is_empty()).then_some(LayerActivity { layer, entries })
            })
            .collect();
        SampleRecord {
            sample_id: sample.id.clone(),
            culture: pred.culture.clone(),
            answered_correctly: score_correct(&pred),
            valid_tokens: result.valid_tokens,
            layers,
        }
    }

    /// Unmasked activation records of the identification split.
    pub fn activation_records(&self) -> Result<Vec<SampleRecord>> {
        self.samples_in(Split::Identification)
            .par_iter()
            .map(|s| self.forward(s, None).map(|r| self.sample_record(s, &r)))
            .collect()
    }

    /// Predictions on the evaluation split under an optional mask.
    pub fn predictions(&self, run_id: &str, mask: Option<&NeuronMask>) -> Result<Vec<PredictionRecord>> {
        self.samples_in(Split::Evaluation)
            .par_iter()
            .map(|s| self.forward(s, mask).map(|r| self.prediction_record(s, &r, run_id)))
            .collect()
    }
}

fn nth_other(len: usize, skip: usize, n: usize) -> usize {
    (0..len).filter(|&i| i != skip).nth(n).expect("index within the remaining options")
}

/// Everything a simulated study produces.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub header: LogHeader,
    pub activations: Vec<SampleRecord>,
    pub full: Vec<PredictionRecord>,
    pub masked: Vec<(String, Vec<PredictionRecord>)>,
    pub planted: PlantedGroundTruth,
}

/// Builds the model and runs the identification split plus the full run and one
/// masked run per `(run_id, mask)`.
pub fn generate_dataset(cfg: &SimConfig, masks: &[(String, NeuronMask)]) -> Result<Dataset> {
    let model = SimModel::new(cfg.clone())?;
    let activations = model.activation_records()?;
    let full = model.predictions(FULL_RUN, None)?;
    let masked = masks
        .iter()
        .map(|(run, m)| model.predictions(run, Some(m)).map(|p| (run.clone(), p)))
        .collect::<Result<_>>()?;
    Ok(Dataset {
        header: model.header(),
        activations,
        full,
        masked,
        planted: model.planted.clone(),
    })
}
