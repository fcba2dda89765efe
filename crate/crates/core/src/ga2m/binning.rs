//! Equal-frequency binning with a reserved missing-value bin.
//!
//! Bin 0 holds missing values. Value bins are `1..=cuts.len() + 1`; a value
//! `v` falls in bin `1 + #{cut <= v}`.

use serde::{Deserialize, Serialize};

use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    pub cuts: Vec<f64>,
}

impl FeatureBins {
    /// Value bins plus the missing bin.
    pub fn n_bins(&self) -> usize {
        self.cuts.len() + 2
    }

    pub fn bin(&self, value: Option<f64>) -> usize {
        match value {
            None => 0,
            Some(v) => 1 + self.cuts.partition_point(|&c| c <= v),
        }
    }

    /// Half-open value range `[lower, upper)` covered by a value bin.
    pub fn bin_range(&self, bin: usize) -> Option<(f64, f64)> {
        if bin == 0 || bin >= self.n_bins() {
            return None;
        }
        let lower = if bin == 1 {
            f64::NEG_INFINITY
        } else {
            self.cuts[bin - 2]
        };
        let upper = self.cuts.get(bin - 1).copied().unwrap_or(f64::INFINITY);
        Some((lower, upper))
    }

    /// A subset of at most `resolution - 1` cuts, spread evenly over the
    /// existing ones, giving at most `resolution` value bins.
    pub fn coarsened(&self, resolution: usize) -> FeatureBins {
        let have = self.cuts.len() + 1;
        if have <= resolution {
            return self.clone();
        }
        let mut picked: Vec<usize> = (1..resolution).map(|i| i * have / resolution - 1).collect();
        picked.dedup();
        FeatureBins {
            cuts: picked.into_iter().map(|i| self.cuts[i]).collect(),
        }
    }
}

/// Cut strictly between two distinct sorted neighbours `a < b`, so that `a`
/// lands below it and `b` at or above it.
fn cut_between(a: f64, b: f64) -> f64 {
    let mid = a + (b - a) / 2.0;
    if mid > a && mid <= b {
        mid
    } else {
        b
    }
}

/// Equal-frequency cut points for one feature's non-missing values.
pub fn quantile_cuts(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // distinct values with cumulative counts
    let mut distinct: Vec<f64> = Vec::new();
    let mut cumulative: Vec<usize> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if distinct.last() == Some(&v) {
            *cumulative.last_mut().unwrap() = i + 1;
        } else {
            distinct.push(v);
            cumulative.push(i + 1);
        }
    }
    if distinct.len() <= 1 || max_bins <= 1 {
        return Vec::new();
    }
    // boundary d separates distinct[d] from distinct[d + 1]
    let boundaries: Vec<usize> = if distinct.len() <= max_bins {
        (0..distinct.len() - 1).collect()
    } else {
        let n = sorted.len() as f64;
        let mut chosen: Vec<usize> = (1..max_bins)
            .map(|k| {
                let target = k as f64 * n / max_bins as f64;
                // nearest boundary to the target rank; ties go to the lower one
                let upper =
                    cumulative[..distinct.len() - 1].partition_point(|&c| (c as f64) < target);
                let below = upper.checked_sub(1);
                let above = (upper < distinct.len() - 1).then_some(upper);
                match (below, above) {
                    (Some(lo), Some(hi)) => {
                        if target - cumulative[lo] as f64 <= cumulative[hi] as f64 - target {
                            lo
                        } else {
                            hi
                        }
                    }
                    (Some(lo), None) => lo,
                    (None, Some(hi)) => hi,
                    (None, None) => unreachable!("at least two distinct values"),
                }
            })
            .collect();
        chosen.dedup();
        chosen
    };
    boundaries
        .into_iter()
        .map(|d| cut_between(distinct[d], distinct[d + 1]))
        .collect()
}

/// Per-feature bins from the non-missing values of each column.
pub fn build_bins(matrix: &FeatureMatrix, max_bins: usize) -> Vec<FeatureBins> {
    (0..matrix.n_features())
        .map(|j| {
            let values: Vec<f64> = matrix.column(j).flatten().collect();
            FeatureBins {
                cuts: quantile_cuts(&values, max_bins),
            }
        })
        .collect()
}
