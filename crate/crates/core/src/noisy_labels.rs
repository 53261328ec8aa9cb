//! Initial noisy similarity labels from thresholded cosine distances, and the
//! exact `o`-nearest-neighbor graph used for flip-rate bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::math::cosine_distance_prenormed;
use crate::pairs::{validate_sorted_pairs, PairLabel, Sign};

/// Distance thresholds: pairs at `d <= t1` are labeled similar, `d > t2`
/// dissimilar, and pairs in between are left unlabeled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub t1: f64,
    pub t2: f64,
}

impl ThresholdPair {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite() && 0.0 <= t1 && t1 <= t2) {
            return Err(Error::InvalidArgument(format!(
                "thresholds must satisfy 0 <= t1 <= t2, got t1={t1}, t2={t2}"
            )));
        }
        Ok(Self { t1, t2 })
    }

    /// `Some(label)` for `d <= t1` or `d > t2`; `None` in the gap.
    #[inline]
    pub fn classify(&self, d: f64) -> Option<Sign> {
        if d <= self.t1 {
            Some(Sign::Pos)
        } else if d > self.t2 {
            Some(Sign::Neg)
        } else {
            None
        }
    }
}

/// Summary of the distance sample a [`ThresholdPair`] was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub thresholds: ThresholdPair,
    pub mean: f64,
    pub std: f64,
    pub sampled_pairs: usize,
    pub exhaustive: bool,
}

/// `t1 = max(0, m - alpha*s)`, `t2 = m + beta*s` from the mean and population
/// standard deviation of `distances`.
pub fn thresholds_from_distances(distances: &[f64], alpha: f64, beta: f64) -> Result<(ThresholdPair, f64, f64)> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "alpha and beta must be finite and nonnegative, got {alpha}, {beta}"
        )));
    }
    if distances.is_empty() {
        return Err(Error::DegenerateDistances);
    }
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    let var = distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std <= 1e-12 * mean.abs().max(1.0) {
        return Err(Error::DegenerateDistances);
    }
    let t1 = (mean - alpha * std).max(0.0);
    let t2 = (mean + beta * std).max(t1);
    Ok((ThresholdPair::new(t1, t2)?, mean, std))
}

/// Estimates thresholds from up to `sample_budget` uniformly drawn unordered
/// pairs (every pair when `N(N-1)/2 <= sample_budget`).
pub fn estimate_thresholds<R: Rng>(
    features: &FeatureSet,
    alpha: f64,
    beta: f64,
    sample_budget: usize,
    rng: &mut R,
) -> Result<ThresholdEstimate> {
    let n = features.n_items();
    let norms = features.row_norms()?;
    let total = n * (n - 1) / 2;
    let d = |i: usize, j: usize| {
        cosine_distance_prenormed(features.row(i), features.row(j), norms[i], norms[j])
    };
    let exhaustive = total <= sample_budget;
    let distances: Vec<f64> = if exhaustive {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| d(i, j))
            .collect()
    } else {
        if sample_budget == 0 {
            return Err(Error::InvalidArgument("sample_budget must be positive".into()));
        }
        let idx: Vec<(usize, usize)> = (0..sample_budget)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect();
        idx.par_iter().map(|&(i, j)| d(i, j)).collect()
    };
    let (thresholds, mean, std) = thresholds_from_distances(&distances, alpha, beta)?;
    Ok(ThresholdEstimate {
        thresholds,
        mean,
        std,
        sampled_pairs: distances.len(),
        exhaustive,
    })
}

/// Sparse noisy labels, sorted by `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NoisyPairLabels {
    pairs: Vec<PairLabel>,
    n_items: usize,
}

impl NoisyPairLabels {
    pub fn new(mut pairs: Vec<PairLabel>, n_items: usize) -> Result<Self> {
        pairs.sort_unstable();
        validate_sorted_pairs(&pairs, n_items)?;
        Ok(Self { pairs, n_items })
    }

    pub fn pairs(&self) -> &[PairLabel] {
        &self.pairs
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count(&self, s: Sign) -> usize {
        self.pairs.iter().filter(|p| p.s == s).count()
    }

    pub fn into_pairs(self) -> Vec<PairLabel> {
        self.pairs
    }
}

/// Labels every unordered pair by thresholded cosine distance.
pub fn build_noisy_labels(features: &FeatureSet, thresholds: ThresholdPair) -> Result<NoisyPairLabels> {
    let n = features.n_items();
    let norms = features.row_norms()?;
    let rows: Vec<Vec<PairLabel>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = features.row(i);
            (i + 1..n)
                .filter_map(|j| {
                    let d = cosine_distance_prenormed(xi, features.row(j), norms[i], norms[j]);
                    thresholds.classify(d).map(|s| PairLabel { i, j, s })
                })
                .collect()
        })
        .collect();
    Ok(NoisyPairLabels {
        pairs: rows.into_iter().flatten().collect(),
        n_items: n,
    })
}

/// Exact `o` nearest neighbors of every item under cosine distance.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    o: usize,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    /// Builds a graph from explicit neighbor lists (`n_items` rows of `o`
    /// entries). Distances are unknown and recorded as zero.
    pub fn from_lists(lists: &[Vec<usize>]) -> Result<Self> {
        let o = lists.first().map_or(0, Vec::len);
        if o == 0 {
            return Err(Error::InvalidArgument("neighbor lists must be nonempty".into()));
        }
        let n = lists.len();
        for (i, l) in lists.iter().enumerate() {
            if l.len() != o {
                return Err(Error::InvalidArgument(format!("neighbor list {i} has {} entries, expected {o}", l.len())));
            }
            if l.iter().any(|&k| k == i || k >= n) {
                return Err(Error::InvalidArgument(format!("neighbor list {i} contains an invalid index")));
            }
        }
        Ok(Self {
            o,
            neighbors: lists.concat(),
            distances: vec![0.0; n * o],
        })
    }

    pub fn o(&self) -> usize {
        self.o
    }

    pub fn n_items(&self) -> usize {
        self.neighbors.len() / self.o
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.o..(i + 1) * self.o]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.o..(i + 1) * self.o]
    }
}

/// Neighbors are ordered by ascending distance, ties by ascending index.
pub fn build_neighbor_graph(features: &FeatureSet, o: usize) -> Result<NeighborGraph> {
    let n = features.n_items();
    if o == 0 || o > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "neighborhood size o={o} must lie in [1, {}]",
            n - 1
        )));
    }
    let norms = features.row_norms()?;
    let rows: Vec<Vec<(f64, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = features.row(i);
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (cosine_distance_prenormed(xi, features.row(j), norms[i], norms[j]), j))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if o < cand.len() {
                cand.select_nth_unstable_by(o - 1, by_dist);
                cand.truncate(o);
            }
            cand.sort_unstable_by(by_dist);
            cand
        })
        .collect();
    let mut neighbors = Vec::with_capacity(n * o);
    let mut distances = Vec::with_capacity(n * o);
    for row in rows {
        for (d, j) in row {
            neighbors.push(j);
            distances.push(d);
        }
    }
    Ok(NeighborGraph {
        o,
        neighbors,
        distances,
    })
}
