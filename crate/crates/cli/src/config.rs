// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration. Values come from defaults, then an optional JSON config
//! file, then command-line flags.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use culture_neurons::grouping::CultureGrouping;
use culture_neurons::sim::SimConfig;
use culture_neurons::{Error, Method, Result, SelectorConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub selector: SelectorConfig,
    pub sim: SimConfig,
    pub correct_only: bool,
    /// Raw culture tag → grouped culture.
    pub grouping: CultureGrouping,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            selector: SelectorConfig::default(),
            sim: SimConfig::default(),
            correct_only: true,
            grouping: CultureGrouping::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let file = File::open(path)?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
    }
}

/// Selector flags; each one set on the command line overrides the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct SelectorFlags {
    /// RND, LAP, LAPE, MAD or CAS.
    #[arg(long)]
    pub method: Option<Method>,
    /// Percentage of all neurons to select per culture.
    #[arg(long)]
    pub r_percent: Option<f64>,
    /// Activity-filter percentile over all activation probabilities.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// LAPE assignment percentile.
    #[arg(long)]
    pub beta: Option<f64>,
    /// LAPE low-entropy pool size in percent.
    #[arg(long)]
    pub rho: Option<f64>,
    /// Seed for the random baseline.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SelectorFlags {
    pub fn apply(&self, mut cfg: SelectorConfig) -> Result<SelectorConfig> {
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(v) = self.r_percent {
            cfg.r_percent = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha_percentile = v;
        }
        if let Some(v) = self.beta {
            cfg.beta_percentile = v;
        }
        if let Some(v) = self.rho {
            cfg.rho_percent = v;
        }
        if let Some(v) = self.seed {
            cfg.rng_seed = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn load_grouping(path: Option<&Path>, fallback: CultureGrouping) -> Result<CultureGrouping> {
    match path {
        Some(p) => CultureGrouping::from_reader(BufReader::new(File::open(p)?)),
        None => Ok(fallback),
    }
}
