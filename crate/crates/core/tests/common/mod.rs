//! Metric definitions recomputed the slow way, plus random instances for them.
#![allow(dead_code)]

use std::collections::BTreeSet;

use dhash_core::codes::BinaryCodes;
use dhash_core::eval::{EvalConfig, EvalReport};
use dhash_core::features::LabelMatrix;
use rand::Rng;

pub struct Instance {
    pub db: BinaryCodes,
    pub db_labels: LabelMatrix,
    pub queries: BinaryCodes,
    pub query_labels: LabelMatrix,
    pub cfg: EvalConfig,
}

fn random_labels(rng: &mut impl Rng, n: usize, c: usize) -> LabelMatrix {
    let mut bits = vec![0u8; n * c];
    for row in bits.chunks_mut(c) {
        for b in row.iter_mut() {
            *b = u8::from(rng.random_bool(0.3));
        }
        if row.iter().all(|&b| b == 0) {
            row[rng.random_range(0..c)] = 1;
        }
    }
    LabelMatrix::new(n, c, bits).unwrap()
}

fn random_codes(rng: &mut impl Rng, n: usize, k: usize) -> BinaryCodes {
    let rows: Vec<Vec<i8>> = (0..n)
        .map(|_| (0..k).map(|_| if rng.random() { 1 } else { -1 }).collect())
        .collect();
    BinaryCodes::from_sign_rows(k, &rows).unwrap()
}

/// `N <= 64`, `K <= 8`; small `K` forces many distance ties.
pub fn random_instance(rng: &mut impl Rng) -> Instance {
    let n = rng.random_range(2..=64);
    let nq = rng.random_range(1..=16);
    let k = rng.random_range(1..=8);
    let c = rng.random_range(1..=5);
    Instance {
        db: random_codes(rng, n, k),
        db_labels: random_labels(rng, n, c),
        queries: random_codes(rng, nq, k),
        query_labels: random_labels(rng, nq, c),
        cfg: EvalConfig {
            r_cutoff: rng.random_range(1..=n),
            top_n: rng.random_range(1..=n),
        },
    }
}

fn signs(codes: &BinaryCodes, i: usize) -> Vec<i8> {
    codes.row(i).to_signs()
}

fn distance(a: &[i8], b: &[i8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn relevant(a: &[u8], b: &[u8]) -> bool {
    a.iter().zip(b).any(|(&x, &y)| x == 1 && y == 1)
}

/// `(distance, relevant)` per database item, plus the ranking by (distance, index).
fn per_query(inst: &Instance, q: usize) -> (Vec<(usize, bool)>, Vec<usize>) {
    let qs = signs(&inst.queries, q);
    let items: Vec<(usize, bool)> = (0..inst.db.n_items())
        .map(|i| {
            (
                distance(&qs, &signs(&inst.db, i)),
                relevant(inst.query_labels.row(q), inst.db_labels.row(i)),
            )
        })
        .collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| items[a].0.cmp(&items[b].0).then(a.cmp(&b)));
    (items, order)
}

pub fn brute_map(inst: &Instance) -> f64 {
    let nq = inst.queries.n_items();
    let mut total = 0.0;
    for q in 0..nq {
        let (items, order) = per_query(inst, q);
        let top: Vec<bool> = order.iter().take(inst.cfg.r_cutoff).map(|&i| items[i].1).collect();
        let rel_in_top = top.iter().filter(|&&r| r).count();
        if rel_in_top == 0 {
            continue;
        }
        let mut ap = 0.0;
        for k in 0..top.len() {
            if top[k] {
                let prec = top[..=k].iter().filter(|&&r| r).count() as f64 / (k + 1) as f64;
                ap += prec;
            }
        }
        total += ap / rel_in_top as f64;
    }
    total / nq as f64
}

/// Fifty evenly spaced cutoffs from 1 to topN, rounded, without repeats.
pub fn brute_grid(top_n: usize) -> Vec<usize> {
    let set: BTreeSet<usize> = (0..50)
        .map(|k| 1 + ((top_n - 1) as f64 * k as f64 / 49.0).round() as usize)
        .collect();
    set.into_iter().collect()
}

pub fn brute_topn(inst: &Instance) -> Vec<(usize, f64)> {
    let nq = inst.queries.n_items();
    brute_grid(inst.cfg.top_n)
        .into_iter()
        .map(|n| {
            let mut sum = 0.0;
            for q in 0..nq {
                let (items, order) = per_query(inst, q);
                sum += order.iter().take(n).filter(|&&i| items[i].1).count() as f64 / n as f64;
            }
            (n, sum / nq as f64)
        })
        .collect()
}

pub fn brute_pr(inst: &Instance) -> Vec<(usize, Option<f64>, f64)> {
    let k = inst.db.code_len();
    let nq = inst.queries.n_items();
    (0..=k)
        .map(|radius| {
            let (mut ps, mut pc, mut rs, mut rc) = (0.0, 0, 0.0, 0);
            for q in 0..nq {
                let (items, _) = per_query(inst, q);
                let retrieved: Vec<&(usize, bool)> = items.iter().filter(|(d, _)| *d <= radius).collect();
                let hits = retrieved.iter().filter(|(_, r)| *r).count();
                let total_rel = items.iter().filter(|(_, r)| *r).count();
                if !retrieved.is_empty() {
                    ps += hits as f64 / retrieved.len() as f64;
                    pc += 1;
                }
                if total_rel > 0 {
                    rs += hits as f64 / total_rel as f64;
                    rc += 1;
                }
            }
            let precision = (pc > 0).then(|| ps / pc as f64);
            let recall = if rc > 0 { rs / rc as f64 } else { 0.0 };
            (radius, precision, recall)
        })
        .collect()
}

/// First disagreement between a report and the brute-force metrics, if any.
pub fn compare(inst: &Instance, report: &EvalReport, tol: f64) -> Option<String> {
    let close = |a: f64, b: f64| (a - b).abs() <= tol;
    let map = brute_map(inst);
    if !close(report.map, map) {
        return Some(format!("map {} vs {map}", report.map));
    }
    let topn = brute_topn(inst);
    if topn.len() != report.topn_precision.len() {
        return Some(format!("topN grid {:?} vs {:?}", report.topn_precision, topn));
    }
    for (a, b) in report.topn_precision.iter().zip(&topn) {
        if a.0 != b.0 || !close(a.1, b.1) {
            return Some(format!("topN {a:?} vs {b:?}"));
        }
    }
    let pr = brute_pr(inst);
    if pr.len() != report.pr_curve.len() {
        return Some("PR length".into());
    }
    for (a, b) in report.pr_curve.iter().zip(&pr) {
        let prec_ok = match (a.1, b.1) {
            (Some(x), Some(y)) => close(x, y),
            (None, None) => true,
            _ => false,
        };
        if a.0 != b.0 || !prec_ok || !close(a.2, b.2) {
            return Some(format!("PR {a:?} vs {b:?}"));
        }
    }
    None
}
