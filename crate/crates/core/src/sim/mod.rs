// SPDX-License-Identifier: MIT OR Apache-2.0

//! Toy SwiGLU decoder with planted culture-specific gate neurons.
//!
//! Each layer computes `u = bias + boost + noise`, `v = 1 + noise`, `g = SiLU(u)`
//! and `z = g ⊙ v` per token. Planted neurons get a pre-activation boost on their
//! own culture's tokens. A sample's answer is correct with `base_accuracy` unless
//! masking removes enough of its culture's planted `g·v` contribution, in which
//! case the lower `degraded_accuracy` applies. All randomness is derived from
//! `(seed, sample_id, stream)`, so parallel and serial runs agree.

mod config;
mod model;
mod text;

pub use config::SimConfig;
pub use model::{
    derive_seed, generate_dataset, silu, Dataset, ForwardResult, PlantedGroundTruth, Sample, SimModel, Split,
};
