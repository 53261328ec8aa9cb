//! Retrieval metrics over Hamming ranking (MAP, topN-precision) and hash
//! lookup (precision-recall by Hamming radius), plus a random-hyperplane
//! baseline.
//!
//! Conventions: ties in Hamming distance rank by ascending database index;
//! AP at cutoff `R` is normalized by the number of relevant items inside the
//! top `R`; a Hamming ball that retrieves nothing has undefined precision,
//! which is reported as `null` and left out of the average.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{hamming_distance, BinaryCodes, CodeRef};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, LabelMatrix};
use crate::math::{dot, sign_binarize};

pub const TOPN_GRID_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    /// Ranking cutoff for AP.
    pub r_cutoff: usize,
    pub top_n: usize,
}

impl EvalConfig {
    /// `R` = whole database, `topN` = `min(1000, database size)`.
    pub fn for_database(db_size: usize) -> Self {
        Self {
            r_cutoff: db_size,
            top_n: db_size.min(1000),
        }
    }
}

/// Codes with the labels that define ground-truth relevance.
#[derive(Debug, Clone, Copy)]
pub struct LabeledCodes<'a> {
    pub codes: &'a BinaryCodes,
    pub labels: &'a LabelMatrix,
}

impl<'a> LabeledCodes<'a> {
    pub fn new(codes: &'a BinaryCodes, labels: &'a LabelMatrix) -> Result<Self> {
        if codes.n_items() != labels.n_items() {
            return Err(Error::DimensionMismatch {
                expected: codes.n_items(),
                actual: labels.n_items(),
            });
        }
        Ok(Self { codes, labels })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub map: f64,
    pub topn_precision: Vec<(usize, f64)>,
    /// `(radius, precision or null, recall)`.
    pub pr_curve: Vec<(usize, Option<f64>, f64)>,
}

/// Two items are relevant to each other iff they share at least one label.
pub fn ground_truth_similarity(a: &[u8], b: &[u8]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(a.iter().zip(b).any(|(x, y)| x & y != 0))
}

fn distances_to(query: CodeRef<'_>, db: &BinaryCodes) -> Result<Vec<u32>> {
    db.rows().map(|r| hamming_distance(query, r)).collect()
}

/// Counting sort by distance; stable, so equal distances keep index order.
fn rank_from_distances(dist: &[u32], code_len: usize) -> Vec<usize> {
    let mut starts = vec![0usize; code_len + 2];
    for &d in dist {
        starts[d as usize + 1] += 1;
    }
    for k in 1..starts.len() {
        starts[k] += starts[k - 1];
    }
    let mut order = vec![0usize; dist.len()];
    for (i, &d) in dist.iter().enumerate() {
        order[starts[d as usize]] = i;
        starts[d as usize] += 1;
    }
    order
}

/// Database indices by ascending Hamming distance, ties by ascending index.
pub fn rank_by_hamming(query: CodeRef<'_>, db: &BinaryCodes) -> Result<Vec<usize>> {
    let dist = distances_to(query, db)?;
    Ok(rank_from_distances(&dist, db.code_len()))
}

/// AP over the first `r` entries of a ranked relevance list.
pub fn average_precision(relevance: &[bool], r: usize) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, _) in relevance.iter().take(r).enumerate().filter(|(_, &rel)| rel) {
        hits += 1;
        sum += hits as f64 / (rank + 1) as f64;
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

fn check_pair(queries: &LabeledCodes<'_>, db: &LabeledCodes<'_>) -> Result<()> {
    if queries.codes.n_items() == 0 {
        return Err(Error::EmptyQuerySet);
    }
    if db.codes.n_items() == 0 {
        return Err(Error::InvalidArgument("empty database".into()));
    }
    if queries.codes.code_len() != db.codes.code_len() {
        return Err(Error::DimensionMismatch {
            expected: db.codes.code_len(),
            actual: queries.codes.code_len(),
        });
    }
    if queries.labels.n_classes() != db.labels.n_classes() {
        return Err(Error::DimensionMismatch {
            expected: db.labels.n_classes(),
            actual: queries.labels.n_classes(),
        });
    }
    Ok(())
}

fn check_config(cfg: &EvalConfig, db_size: usize) -> Result<()> {
    if cfg.r_cutoff == 0 || cfg.top_n == 0 {
        return Err(Error::InvalidArgument("R and topN must be at least 1".into()));
    }
    if cfg.top_n > db_size {
        return Err(Error::InvalidArgument(format!(
            "topN {} exceeds database size {db_size}",
            cfg.top_n
        )));
    }
    Ok(())
}

/// Everything the metrics need from one query.
struct QueryView {
    dist: Vec<u32>,
    /// Relevance in ranked order.
    ranked_rel: Vec<bool>,
    relevant_total: usize,
}

fn query_views(queries: &LabeledCodes<'_>, db: &LabeledCodes<'_>) -> Result<Vec<QueryView>> {
    check_pair(queries, db)?;
    (0..queries.codes.n_items())
        .into_par_iter()
        .map(|q| {
            let dist = distances_to(queries.codes.row(q), db.codes)?;
            let order = rank_from_distances(&dist, db.codes.code_len());
            let ql = queries.labels.row(q);
            let rel: Vec<bool> = (0..db.codes.n_items())
                .map(|i| ground_truth_similarity(ql, db.labels.row(i)))
                .collect::<Result<_>>()?;
            let relevant_total = rel.iter().filter(|&&r| r).count();
            Ok(QueryView {
                ranked_rel: order.iter().map(|&i| rel[i]).collect(),
                dist,
                relevant_total,
            })
        })
        .collect()
}

fn map_of(views: &[QueryView], r: usize) -> f64 {
    views.iter().map(|v| average_precision(&v.ranked_rel, r)).sum::<f64>() / views.len() as f64
}

/// The `n` values at which topN-precision is reported.
pub fn topn_grid(top_n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..TOPN_GRID_POINTS)
        .map(|k| 1 + ((top_n - 1) as f64 * k as f64 / (TOPN_GRID_POINTS - 1) as f64).round() as usize)
        .collect();
    grid.dedup();
    grid
}

fn topn_of(views: &[QueryView], top_n: usize) -> Vec<(usize, f64)> {
    topn_grid(top_n)
        .into_iter()
        .map(|n| {
            let mean = views
                .iter()
                .map(|v| v.ranked_rel[..n].iter().filter(|&&r| r).count() as f64 / n as f64)
                .sum::<f64>()
                / views.len() as f64;
            (n, mean)
        })
        .collect()
}

fn pr_of(views: &[QueryView], code_len: usize, labels_rel: impl Fn(usize, usize) -> bool) -> Vec<(usize, Option<f64>, f64)> {
    // Per radius: (precision sum, precision count, recall sum, recall count).
    let mut acc = vec![(0.0, 0usize, 0.0, 0usize); code_len + 1];
    for (q, v) in views.iter().enumerate() {
        let mut all = vec![0usize; code_len + 1];
        let mut rel = vec![0usize; code_len + 1];
        for (i, &d) in v.dist.iter().enumerate() {
            all[d as usize] += 1;
            if labels_rel(q, i) {
                rel[d as usize] += 1;
            }
        }
        let (mut ret, mut hit) = (0usize, 0usize);
        for radius in 0..=code_len {
            ret += all[radius];
            hit += rel[radius];
            let a = &mut acc[radius];
            if ret > 0 {
                a.0 += hit as f64 / ret as f64;
                a.1 += 1;
            }
            if v.relevant_total > 0 {
                a.2 += hit as f64 / v.relevant_total as f64;
                a.3 += 1;
            }
        }
    }
    acc.into_iter()
        .enumerate()
        .map(|(radius, (ps, pc, rs, rc))| {
            let precision = (pc > 0).then(|| ps / pc as f64);
            let recall = if rc > 0 { rs / rc as f64 } else { 0.0 };
            (radius, precision, recall)
        })
        .collect()
}

pub fn mean_average_precision(queries: LabeledCodes<'_>, db: LabeledCodes<'_>, cfg: &EvalConfig) -> Result<f64> {
    let views = query_views(&queries, &db)?;
    Ok(map_of(&views, cfg.r_cutoff))
}

pub fn topn_precision(queries: LabeledCodes<'_>, db: LabeledCodes<'_>, cfg: &EvalConfig) -> Result<Vec<(usize, f64)>> {
    check_config(cfg, db.codes.n_items())?;
    let views = query_views(&queries, &db)?;
    Ok(topn_of(&views, cfg.top_n))
}

pub fn precision_recall_curve(
    queries: LabeledCodes<'_>,
    db: LabeledCodes<'_>,
    _cfg: &EvalConfig,
) -> Result<Vec<(usize, Option<f64>, f64)>> {
    let views = query_views(&queries, &db)?;
    Ok(pr_of(&views, db.codes.code_len(), |q, i| {
        ground_truth_similarity(queries.labels.row(q), db.labels.row(i)).unwrap_or(false)
    }))
}

/// All three metrics from a single pass over the queries.
pub fn evaluate_codes(queries: LabeledCodes<'_>, db: LabeledCodes<'_>, cfg: &EvalConfig) -> Result<EvalReport> {
    check_config(cfg, db.codes.n_items())?;
    let views = query_views(&queries, &db)?;
    Ok(EvalReport {
        map: map_of(&views, cfg.r_cutoff),
        topn_precision: topn_of(&views, cfg.top_n),
        pr_curve: pr_of(&views, db.codes.code_len(), |q, i| {
            ground_truth_similarity(queries.labels.row(q), db.labels.row(i)).unwrap_or(false)
        }),
    })
}

/// `K` seeded random hyperplanes through the origin (Gaussian directions,
/// normalized); bit `k` is the sign of the projection on hyperplane `k`.
#[derive(Debug, Clone)]
pub struct RandomHyperplanes {
    dim: usize,
    planes: Vec<f64>,
}

impl RandomHyperplanes {
    pub fn new(dim: usize, code_len: usize, seed: u64) -> Result<Self> {
        if code_len == 0 || dim == 0 {
            return Err(Error::InvalidArgument("code length and dimension must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut planes = Vec::with_capacity(dim * code_len);
        for _ in 0..code_len {
            let mut w: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = dot(&w, &w).sqrt();
            w.iter_mut().for_each(|x| *x /= n);
            planes.extend(w);
        }
        Ok(Self { dim, planes })
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.planes.chunks_exact(self.dim).map(|w| dot(w, x)).collect()
    }

    pub fn encode(&self, features: &FeatureSet) -> Result<BinaryCodes> {
        if features.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: features.dim(),
            });
        }
        let k = self.planes.len() / self.dim;
        let rows: Vec<Vec<i8>> = features.rows().map(|x| sign_binarize(&self.project(x))).collect();
        BinaryCodes::from_sign_rows(k, &rows)
    }
}

pub fn lsh_baseline(features: &FeatureSet, code_len: usize, seed: u64) -> Result<BinaryCodes> {
    RandomHyperplanes::new(features.dim(), code_len, seed)?.encode(features)
}
