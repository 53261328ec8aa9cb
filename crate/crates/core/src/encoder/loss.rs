//! Pairwise logistic likelihood: `P(S = +1 | zi, zj) = sigmoid(c * <zi, zj>)`,
//! with `c` a fixed logit scale (1 by default). The training objective is the
//! mean negative log-likelihood over a batch of labeled pairs.

use super::model::{gemm, Dense, EncoderModel};
use crate::math::{dot, sigmoid, softplus};
use crate::pairs::Sign;

/// `-log P(s | zi, zj)` at logit scale 1.
pub fn pairwise_logistic_loss(zi: &[f64], zj: &[f64], s: Sign) -> f64 {
    pair_loss(dot(zi, zj), s)
}

/// `-log sigmoid(s * logit)`, never `-log 0`.
#[inline]
pub(crate) fn pair_loss(logit: f64, s: Sign) -> f64 {
    softplus(-s.as_f64() * logit)
}

/// A training example: two feature vectors and their label.
#[derive(Debug, Clone, Copy)]
pub struct PairExample<'a> {
    pub xi: &'a [f64],
    pub xj: &'a [f64],
    pub s: Sign,
}

/// Parameter-shaped gradients (one [`Dense`] per model layer).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(model: &EncoderModel) -> Self {
        Self {
            layers: model.layers().iter().map(|l| Dense::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases).copied())
            .collect()
    }

    pub fn norm(&self) -> f64 {
        self.flat().iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Mean pairwise loss over `batch`, without gradients.
pub fn batch_loss(model: &EncoderModel, batch: &[PairExample<'_>], logit_scale: f64) -> f64 {
    let (input, b) = stack_batch(model, batch);
    let cache = model.forward_cache(input, 2 * b);
    let z = cache.acts.last().unwrap();
    let p = model.output_dim();
    let total: f64 = batch
        .iter()
        .enumerate()
        .map(|(k, ex)| {
            let u = logit_scale * dot(&z[k * p..(k + 1) * p], &z[(b + k) * p..(b + k + 1) * p]);
            pair_loss(u, ex.s)
        })
        .sum();
    total / b as f64
}

fn stack_batch(model: &EncoderModel, batch: &[PairExample<'_>]) -> (Vec<f64>, usize) {
    let d = model.input_dim();
    let b = batch.len();
    let mut input = Vec::with_capacity(2 * b * d);
    for ex in batch {
        assert_eq!(ex.xi.len(), d, "pair input has wrong dimension");
        input.extend_from_slice(ex.xi);
    }
    for ex in batch {
        assert_eq!(ex.xj.len(), d, "pair input has wrong dimension");
        input.extend_from_slice(ex.xj);
    }
    (input, b)
}

/// Mean pairwise loss over `batch` and its exact gradient.
///
/// Both members of each pair run through the same parameters; the two
/// branches' contributions are summed.
///
/// Panics if `batch` is empty or an input has the wrong dimension.
pub fn loss_gradient(model: &EncoderModel, batch: &[PairExample<'_>], logit_scale: f64) -> (f64, Gradients) {
    assert!(!batch.is_empty(), "loss_gradient needs a nonempty batch");
    let (input, b) = stack_batch(model, batch);
    let rows = 2 * b;
    let cache = model.forward_cache(input, rows);
    let layers = model.layers();
    let n_layers = layers.len();
    let p = model.output_dim();
    let z = &cache.acts[n_layers];
    let inv_b = 1.0 / b as f64;

    // d(mean loss)/dz, then through tanh.
    let mut delta = vec![0.0; rows * p];
    let mut total = 0.0;
    for (k, ex) in batch.iter().enumerate() {
        let zi = &z[k * p..(k + 1) * p];
        let zj = &z[(b + k) * p..(b + k + 1) * p];
        let s = ex.s.as_f64();
        let u = logit_scale * dot(zi, zj);
        total += pair_loss(u, ex.s);
        // d/du softplus(-s u) = -s * sigmoid(-s u)
        let g = -s * sigmoid(-s * u) * inv_b * logit_scale;
        for q in 0..p {
            delta[k * p + q] = g * zj[q];
            delta[(b + k) * p + q] = g * zi[q];
        }
    }
    for (d, &zv) in delta.iter_mut().zip(z.iter()) {
        *d *= 1.0 - zv * zv;
    }

    let mut grads = Gradients::zeros_like(model);
    for l in (0..n_layers).rev() {
        let layer = &layers[l];
        let prev = &cache.acts[l];
        let g = &mut grads.layers[l];
        // dW = delta^T * prev
        gemm(
            layer.n_out,
            rows,
            layer.n_in,
            &delta,
            (1, layer.n_out),
            prev,
            (layer.n_in, 1),
            0.0,
            &mut g.weights,
        );
        for r in 0..rows {
            for (gb, d) in g.biases.iter_mut().zip(&delta[r * layer.n_out..(r + 1) * layer.n_out]) {
                *gb += d;
            }
        }
        if l > 0 {
            let mut next = vec![0.0; rows * layer.n_in];
            gemm(
                rows,
                layer.n_out,
                layer.n_in,
                &delta,
                (layer.n_out, 1),
                &layer.weights,
                (layer.n_in, 1),
                0.0,
                &mut next,
            );
            for (d, &a) in next.iter_mut().zip(prev.iter()) {
                if a <= 0.0 {
                    *d = 0.0;
                }
            }
            delta = next;
        }
    }
    (total * inv_b, grads)
}
