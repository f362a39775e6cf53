// SPDX-License-Identifier: MIT OR Apache-2.0

//! Across-culture spread of mean positive activation `M`.
//!
//! For each neuron, the population standard deviation of `M` over cultures is
//! compared with the across-culture mean of `M`. Neurons whose spread exceeds
//! their mean are where a mean-difference score can be driven by variability
//! rather than specialization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::NormalizedStats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSummary {
    pub neurons: usize,
    /// Mean of the neuron-wise standard deviations.
    pub mean_std: f64,
    /// Standard deviation of the neuron-wise standard deviations.
    pub std_of_std: f64,
    pub max_std: f64,
    /// Neurons whose standard deviation exceeds their mean activation.
    pub count_std_gt_mean: usize,
    pub fraction_std_gt_mean: f64,
}

impl VarianceSummary {
    /// `count (percent%)` with two decimals.
    pub fn count_display(&self) -> String {
        format!("{} ({:.2}%)", self.count_std_gt_mean, 100.0 * self.fraction_std_gt_mean)
    }
}

impl fmt::Display for VarianceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mean of neuron-wise standard deviations across cultures      {:.6}", self.mean_std)?;
        writeln!(f, "Std. dev. of neuron-wise standard deviations across cultures {:.6}", self.std_of_std)?;
        writeln!(f, "Max neuron-wise standard deviation                           {:.6}", self.max_std)?;
        write!(f, "Number of neurons where std > mean activation                {}", self.count_display())
    }
}

/// Population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn variance_diagnostics(stats: &NormalizedStats) -> Result<VarianceSummary> {
    let nc = stats.num_cultures();
    if nc < 2 {
        return Err(Error::Config(format!("variance diagnostics need at least 2 cultures, got {nc}")));
    }
    let total = stats.layout().total();
    let mut stds = Vec::with_capacity(total);
    let mut count = 0;
    let mut column = vec![0.0; nc];
    for i in 0..total {
        for (c, slot) in column.iter_mut().enumerate() {
            *slot = stats.m(c)[i];
        }
        let (mean, std) = mean_std(&column);
        if std > mean {
            count += 1;
        }
        stds.push(std);
    }
    let (mean_of, std_of) = mean_std(&stds);
    Ok(VarianceSummary {
        neurons: total,
        mean_std: mean_of,
        std_of_std: std_of,
        max_std: stds.iter().copied().fold(0.0, f64::max),
        count_std_gt_mean: count,
        fraction_std_gt_mean: count as f64 / total as f64,
    })
}
