use crate::error::{Error, Result};

/// `N x C` multi-hot semantic labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    n_items: usize,
    n_classes: usize,
    data: Vec<u8>,
}

impl LabelMatrix {
    /// Every row must have at least one set entry; entries must be 0 or 1.
    pub fn new(n_items: usize, n_classes: usize, data: Vec<u8>) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidFeatures("label matrix needs at least one class".into()));
        }
        if data.len() != n_items * n_classes {
            return Err(Error::DimensionMismatch {
                expected: n_items * n_classes,
                actual: data.len(),
            });
        }
        if let Some(b) = data.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidFeatures(format!("label entry {b} is not 0/1")));
        }
        if let Some(row) = data.chunks_exact(n_classes).position(|r| r.iter().all(|&b| b == 0)) {
            return Err(Error::InvalidFeatures(format!("label row {row} has no set bit")));
        }
        Ok(Self {
            n_items,
            n_classes,
            data,
        })
    }

    /// Single-label rows from class indices.
    pub fn from_classes(classes: &[usize], n_classes: usize) -> Result<Self> {
        let mut data = vec![0u8; classes.len() * n_classes];
        for (i, &c) in classes.iter().enumerate() {
            if c >= n_classes {
                return Err(Error::InvalidArgument(format!("class {c} out of range")));
            }
            data[i * n_classes + c] = 1;
        }
        Self::new(classes.len(), n_classes, data)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n_classes..(i + 1) * self.n_classes]
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }
}

/// `N x D` real feature matrix (row-major, f64 in memory) with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    n_items: usize,
    dim: usize,
    features: Vec<f64>,
    labels: Option<LabelMatrix>,
}

impl FeatureSet {
    pub fn new(n_items: usize, dim: usize, features: Vec<f64>) -> Result<Self> {
        if n_items < 2 {
            return Err(Error::InvalidFeatures(format!("need at least 2 items, got {n_items}")));
        }
        if dim == 0 {
            return Err(Error::InvalidFeatures("dimension must be at least 1".into()));
        }
        if features.len() != n_items * dim {
            return Err(Error::DimensionMismatch {
                expected: n_items * dim,
                actual: features.len(),
            });
        }
        if let Some(pos) = features.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidFeatures(format!(
                "non-finite entry at item {}, coordinate {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            n_items,
            dim,
            features,
            labels: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, flat)
    }

    pub fn with_labels(mut self, labels: LabelMatrix) -> Result<Self> {
        if labels.n_items() != self.n_items {
            return Err(Error::DimensionMismatch {
                expected: self.n_items,
                actual: labels.n_items(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> Option<&LabelMatrix> {
        self.labels.as_ref()
    }

    /// Euclidean norms of every row; errors if any row is all zeros.
    pub fn row_norms(&self) -> Result<Vec<f64>> {
        self.rows()
            .map(|r| {
                let n = crate::math::norm(r);
                if n == 0.0 {
                    Err(Error::DegenerateVector)
                } else {
                    Ok(n)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(FeatureSet::new(1, 2, vec![0.0, 1.0]).is_err());
        assert!(FeatureSet::new(2, 0, vec![]).is_err());
        assert!(FeatureSet::new(2, 2, vec![0.0; 3]).is_err());
        assert!(FeatureSet::new(2, 1, vec![1.0, f64::NAN]).is_err());
        assert!(FeatureSet::new(2, 1, vec![1.0, f64::INFINITY]).is_err());
        assert!(FeatureSet::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn label_rows_need_a_set_bit() {
        assert!(LabelMatrix::new(2, 2, vec![1, 0, 0, 0]).is_err());
        assert!(LabelMatrix::new(2, 2, vec![1, 0, 2, 0]).is_err());
        let l = LabelMatrix::from_classes(&[0, 2, 1], 3).unwrap();
        assert_eq!(l.row(1), &[0, 0, 1]);
        let fs = FeatureSet::from_rows(&[[1.0], [2.0]]).unwrap();
        assert!(fs.with_labels(l).is_err());
    }
}
