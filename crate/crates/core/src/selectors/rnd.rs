// SPDX-License-Identifier: MIT OR Apache-2.0

//! Global random baseline: one seeded sample of `⌊r% × total⌋` neurons drawn
//! uniformly from all layers, shared by every culture.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Method, ScoreTable, ScoredNeuron, SelectorConfig};
use crate::error::{Error, Result};
use crate::layout::Layout;

pub fn score_rnd(layout: &Layout, cultures: &[String], cfg: &SelectorConfig) -> Result<ScoreTable> {
    if cultures.is_empty() {
        return Err(Error::Empty("RND needs at least one culture label".into()));
    }
    let k = cfg.target_count(layout.total())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut picked: Vec<_> = sample(&mut rng, layout.total(), k)
        .into_iter()
        .map(|i| layout.id(i))
        .collect();
    picked.sort_unstable();
    let ranking: Vec<_> = picked.into_iter().map(|id| ScoredNeuron::new(id, 0.0, 0.0, 0.0)).collect();
    Ok(ScoreTable::new(
        Method::Rnd,
        cultures.to_vec(),
        vec![ranking; cultures.len()],
        layout.total(),
    ))
}
