//! Gaussian clusters around orthonormal centers, with planted labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{FeatureSet, LabelMatrix};
use crate::formats::{write_features, write_labels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_clusters: usize,
    pub points_per_cluster: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.points_per_cluster == 0 {
            return Err(Error::InvalidConfig("need at least one cluster and one point per cluster".into()));
        }
        if self.n_clusters * self.points_per_cluster < 2 {
            return Err(Error::InvalidConfig("need at least 2 points in total".into()));
        }
        if self.dim < self.n_clusters {
            return Err(Error::InvalidConfig(format!(
                "dim {} < n_clusters {}: orthonormal centers impossible",
                self.dim, self.n_clusters
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig("noise_sigma must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// Random orthonormal centers: Gram-Schmidt on Gaussian vectors.
fn orthonormal_centers(rng: &mut impl Rng, k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    while centers.len() < k {
        let mut v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        for c in &centers {
            let p: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(c).for_each(|(a, b)| *a -= p * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            centers.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    centers
}

fn sample_points(
    rng: &mut impl Rng,
    centers: &[Vec<f64>],
    per_cluster: usize,
    sigma: f64,
) -> Result<FeatureSet> {
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rows = Vec::with_capacity(centers.len() * per_cluster);
    let mut classes = Vec::with_capacity(centers.len() * per_cluster);
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            let mut x: Vec<f64> = center
                .iter()
                .map(|&m| if sigma > 0.0 { m + noise.sample(rng) } else { m })
                .collect();
            let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 0.0 {
                x.iter_mut().for_each(|a| *a /= n);
            }
            rows.push(x);
            classes.push(c);
        }
    }
    FeatureSet::from_rows(&rows)?.with_labels(LabelMatrix::from_classes(&classes, centers.len())?)
}

/// Points are `center + N(0, sigma^2 I)`, normalized to unit length, grouped
/// by cluster; each carries a single-label row naming its cluster.
pub fn synth_generate(spec: &SyntheticSpec) -> Result<FeatureSet> {
    synth_generate_with_queries(spec, 0).map(|(db, _)| db)
}

/// Like [`synth_generate`], and additionally draws `queries_per_cluster`
/// held-out points per cluster around the same centers from an independent
/// stream. The database is identical to the one `synth_generate` returns.
pub fn synth_generate_with_queries(
    spec: &SyntheticSpec,
    queries_per_cluster: usize,
) -> Result<(FeatureSet, Option<FeatureSet>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers = orthonormal_centers(&mut rng, spec.n_clusters, spec.dim);
    let db = sample_points(&mut rng, &centers, spec.points_per_cluster, spec.noise_sigma)?;
    let queries = if queries_per_cluster > 0 && spec.n_clusters * queries_per_cluster >= 2 {
        let mut qrng = ChaCha8Rng::seed_from_u64(spec.seed);
        qrng.set_stream(1);
        Some(sample_points(&mut qrng, &centers, queries_per_cluster, spec.noise_sigma)?)
    } else {
        None
    };
    Ok((db, queries))
}

/// Where [`write_synthetic`] put its files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticFiles {
    pub features: PathBuf,
    pub labels: PathBuf,
    pub query_features: Option<PathBuf>,
    pub query_labels: Option<PathBuf>,
}

/// Generates a dataset and writes `features.dhf` and `labels.dhl` (plus
/// `query_features.dhf` and `query_labels.dhl` when queries are requested)
/// into `dir`.
pub fn write_synthetic(spec: &SyntheticSpec, queries_per_cluster: usize, dir: &Path) -> Result<SyntheticFiles> {
    let (db, queries) = synth_generate_with_queries(spec, queries_per_cluster)?;
    let mut files = SyntheticFiles {
        features: dir.join("features.dhf"),
        labels: dir.join("labels.dhl"),
        query_features: None,
        query_labels: None,
    };
    write_features(&files.features, &db)?;
    write_labels(&files.labels, db.labels().expect("synthetic sets are labeled"))?;
    if let Some(q) = queries {
        let (f, l) = (dir.join("query_features.dhf"), dir.join("query_labels.dhl"));
        write_features(&f, &q)?;
        write_labels(&l, q.labels().expect("synthetic sets are labeled"))?;
        files.query_features = Some(f);
        files.query_labels = Some(l);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::cosine_distance;

    fn spec(sigma: f64) -> SyntheticSpec {
        SyntheticSpec {
            n_clusters: 3,
            points_per_cluster: 5,
            dim: 8,
            noise_sigma: sigma,
            seed: 7,
        }
    }

    #[test]
    fn noiseless_clusters_collapse() {
        let fs = synth_generate(&spec(0.0)).unwrap();
        assert_eq!(fs.n_items(), 15);
        for i in 0..15 {
            for j in 0..15 {
                let d = cosine_distance(fs.row(i), fs.row(j)).unwrap();
                if i / 5 == j / 5 {
                    assert!(d.abs() < 1e-12);
                } else {
                    assert!((d - 1.0).abs() < 1e-12);
                }
            }
        }
        let labels = fs.labels().unwrap();
        assert_eq!(labels.row(7), &[0, 1, 0]);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = synth_generate(&spec(0.3)).unwrap();
        let b = synth_generate(&spec(0.3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            crate::formats::encode_features(&a).unwrap(),
            crate::formats::encode_features(&b).unwrap()
        );
        let (db, q) = synth_generate_with_queries(&spec(0.3), 4).unwrap();
        assert_eq!(db, a);
        let q = q.unwrap();
        assert_eq!(q.n_items(), 12);
        assert_ne!(q.row(0), db.row(0));
        for r in a.rows() {
            let n: f64 = r.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dim_below_clusters_is_rejected() {
        let mut s = spec(0.1);
        s.dim = 2;
        assert!(synth_generate(&s).is_err());
    }
}
