use rayon::prelude::*;

use super::model::EncoderModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::math::{dot, sigmoid};

#[derive(Debug, Clone)]
enum Backing {
    Embeddings { z: Vec<f64>, dim: usize, logit_scale: f64 },
    Dense { values: Vec<f64> },
}

/// Estimated probability `eta(i, j)` that a pair carries noisy label `+1`.
///
/// Normally backed by cached encoder embeddings, `eta = sigmoid(c <z_i, z_j>)`;
/// a dense symmetric table can be supplied instead for planted instances.
#[derive(Debug, Clone)]
pub struct EtaField {
    n_items: usize,
    backing: Backing,
}

impl EtaField {
    /// Wraps precomputed embeddings (`n_items x dim`, row-major).
    pub fn from_embeddings(z: Vec<f64>, dim: usize, logit_scale: f64) -> Result<Self> {
        if dim == 0 || !z.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument("embedding matrix shape is inconsistent".into()));
        }
        Ok(Self {
            n_items: z.len() / dim,
            backing: Backing::Embeddings { z, dim, logit_scale },
        })
    }

    /// Uses an explicit `n x n` table. It must be symmetric with entries in `[0, 1]`.
    pub fn from_dense(n_items: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_items * n_items {
            return Err(Error::DimensionMismatch {
                expected: n_items * n_items,
                actual: values.len(),
            });
        }
        for i in 0..n_items {
            for j in 0..n_items {
                let v = values[i * n_items + j];
                if !(0.0..=1.0).contains(&v) || v != values[j * n_items + i] {
                    return Err(Error::InvalidArgument(format!(
                        "eta table entry ({i}, {j}) is out of range or asymmetric"
                    )));
                }
            }
        }
        Ok(Self {
            n_items,
            backing: Backing::Dense { values },
        })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.backing {
            Backing::Embeddings { z, dim, logit_scale } => {
                let d = *dim;
                sigmoid(logit_scale * dot(&z[i * d..(i + 1) * d], &z[j * d..(j + 1) * d]))
            }
            Backing::Dense { values } => values[i * self.n_items + j],
        }
    }

    /// Cached embeddings, if this field is embedding-backed.
    pub fn embeddings(&self) -> Option<(&[f64], usize)> {
        match &self.backing {
            Backing::Embeddings { z, dim, .. } => Some((z, *dim)),
            Backing::Dense { .. } => None,
        }
    }
}

/// Encodes every item once and returns the field `sigmoid(c <z_i, z_j>)`.
pub fn estimate_eta(model: &EncoderModel, features: &FeatureSet, logit_scale: f64) -> Result<EtaField> {
    let z = encode_all(model, features)?;
    EtaField::from_embeddings(z, model.output_dim(), logit_scale)
}

/// Real-valued encoder outputs for every item, `n_items x output_dim`.
pub fn encode_all(model: &EncoderModel, features: &FeatureSet) -> Result<Vec<f64>> {
    if model.input_dim() != features.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: features.dim(),
        });
    }
    const CHUNK: usize = 256;
    let d = features.dim();
    let chunks: Vec<Vec<f64>> = features
        .as_slice()
        .par_chunks(CHUNK * d)
        .map(|c| model.forward_batch(c, c.len() / d))
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}
