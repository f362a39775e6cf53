// SPDX-License-Identifier: MIT OR Apache-2.0

//! Nearest-rank percentiles and percentage-of-total counts.

use crate::error::{Error, Result};

/// Ranks this close to an integer are snapped to it, so that decimal percentages
/// such as `95` or `2.34375` do not gain a spurious extra element from
/// representation error.
const RANK_SNAP: f64 = 1e-9;

/// `q/100 × n`, snapped to the nearest integer when within rounding noise.
pub(crate) fn fractional_rank(q: f64, n: usize) -> f64 {
    let rank = q * n as f64 / 100.0;
    let nearest = rank.round();
    if (rank - nearest).abs() < RANK_SNAP {
        nearest
    } else {
        rank
    }
}

/// `⌊q/100 × n⌋`.
pub fn percent_count_floor(q: f64, n: usize) -> usize {
    fractional_rank(q, n).floor() as usize
}

/// `⌈q/100 × n⌉`.
pub fn percent_count_ceil(q: f64, n: usize) -> usize {
    fractional_rank(q, n).ceil() as usize
}

pub(crate) fn check_percent(name: &str, q: f64) -> Result<()> {
    if q.is_finite() && q > 0.0 && q <= 100.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 100], got {q}")))
    }
}

/// Nearest-rank percentile: the element at 1-based rank `⌈q/100 × N⌉` of the
/// ascending sort. No interpolation.
pub fn percentile_threshold(values: &[f64], q: f64) -> Result<f64> {
    check_percent("percentile", q)?;
    if values.is_empty() {
        return Err(Error::Empty("percentile of an empty set".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("percentile input contains non-finite values".into()));
    }
    let rank = percent_count_ceil(q, values.len()).clamp(1, values.len());
    let mut scratch = values.to_vec();
    let (_, nth, _) = scratch.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*nth)
}
