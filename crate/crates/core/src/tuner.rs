//! Data-driven choice of the `k_max` hyperparameter.
//!
//! The tuner sweeps a candidate grid, computes per-channel HFD for every
//! recording at each candidate, and keeps the candidate that maximizes the
//! mean channel spread (max minus min HFD across channels of one recording,
//! averaged over recordings). The spread is the working proxy for how well
//! task-relevant channels separate from the baseline; the per-candidate mean
//! HFD curve is reported alongside for human inspection but does not enter
//! the decision rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hfd::{hfd_per_channel, HfdParams, HfdVector};
use crate::signal::Recording;

/// Candidate `k_max` values, strictly increasing, all at least 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmaxGrid {
    candidates: Vec<usize>,
}

impl KmaxGrid {
    pub fn new(candidates: Vec<usize>) -> Result<Self> {
        if candidates.is_empty()
            || candidates[0] < 2
            || candidates.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidGrid);
        }
        Ok(Self { candidates })
    }

    /// The default sweep: 2, 5, 20, 100, 150, 200, 400.
    pub fn default_grid() -> Self {
        Self::new(vec![2, 5, 20, 100, 150, 200, 400]).unwrap()
    }

    pub fn candidates(&self) -> &[usize] {
        &self.candidates
    }
}

/// Aggregates for one grid candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSummary {
    pub k_max: usize,
    /// Mean HFD over all channels of all recordings.
    pub mean_hfd: f64,
    pub std_hfd: f64,
    /// Mean channel spread (max - min per recording).
    pub mean_spread: f64,
    pub std_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningReport {
    pub candidates: Vec<CandidateSummary>,
    pub chosen_k_max: usize,
}

impl TuningReport {
    /// Selection rule applied to precomputed aggregates (replay mode):
    /// argmax of mean spread, ties broken toward the smaller candidate.
    pub fn from_aggregates(candidates: Vec<CandidateSummary>) -> Result<Self> {
        if candidates.is_empty()
            || candidates.windows(2).any(|w| w[0].k_max >= w[1].k_max)
            || candidates[0].k_max < 2
        {
            return Err(Error::InvalidGrid);
        }
        if candidates.iter().any(|c| c.mean_spread < 0.0) {
            return Err(Error::InvalidGrid);
        }
        let mut chosen = &candidates[0];
        for c in &candidates[1..] {
            if c.mean_spread > chosen.mean_spread {
                chosen = c;
            }
        }
        let chosen_k_max = chosen.k_max;
        Ok(Self {
            candidates,
            chosen_k_max,
        })
    }
}

/// Max minus min over the channels of one HFD vector.
pub fn channel_spread(hfd: &HfdVector) -> Result<f64> {
    spread_of(hfd.values().values().copied())
}

/// Spread of a plain value sequence; errors on empty input.
pub fn spread_of(values: impl IntoIterator<Item = f64>) -> Result<f64> {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut any = false;
    for v in values {
        any = true;
        min = min.min(v);
        max = max.max(v);
    }
    if !any {
        return Err(Error::EmptyVector);
    }
    Ok(max - min)
}

/// Sweep the grid over the dataset and pick the spread-maximizing candidate.
///
/// Fails with `GridInfeasible` before computing anything if some candidate
/// exceeds the admissible `k_max` of the shortest channel. Aggregation sums
/// in sorted order, so the report is bit-identical under any permutation of
/// the input recordings.
pub fn tune_kmax(dataset: &[Recording], grid: &KmaxGrid) -> Result<TuningReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyGroup("tuning dataset".into()));
    }
    let shortest = dataset.iter().map(Recording::n_samples).min().unwrap_or(0);
    let bound = HfdParams::max_for_len(shortest);
    for &k_max in grid.candidates() {
        if k_max > bound {
            return Err(Error::GridInfeasible {
                k_max,
                len: shortest,
            });
        }
    }
    let candidates = grid
        .candidates()
        .par_iter()
        .map(|&k_max| {
            let params = HfdParams::new(k_max)?;
            let vectors: Vec<HfdVector> = dataset
                .par_iter()
                .map(|rec| hfd_per_channel(rec, params))
                .collect::<Result<_>>()?;
            let mut all_values: Vec<f64> = vectors
                .iter()
                .flat_map(|v| v.values().values().copied())
                .collect();
            let mut spreads: Vec<f64> = vectors
                .iter()
                .map(channel_spread)
                .collect::<Result<_>>()?;
            let (mean_hfd, std_hfd) = sorted_mean_std(&mut all_values);
            let (mean_spread, std_spread) = sorted_mean_std(&mut spreads);
            Ok(CandidateSummary {
                k_max,
                mean_hfd,
                std_hfd,
                mean_spread,
                std_spread,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TuningReport::from_aggregates(candidates)
}

/// Mean and sample standard deviation, summed in sorted order so the result
/// does not depend on input ordering.
fn sorted_mean_std(values: &mut [f64]) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let mut deviations: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    deviations.sort_by(f64::total_cmp);
    let var = deviations.iter().sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
