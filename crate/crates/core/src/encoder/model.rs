use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::formats::{write_file, ByteReader, MODEL_MAGIC};

/// One affine layer, `y = W x + b` with `W` stored `n_out x n_in` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Self {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }
}

/// Feed-forward encoder: rectifier on hidden layers, `tanh` on the output.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    layers: Vec<Dense>,
}

/// `C = A * B + beta * C` for strided row-major views; `A` is `m x k`, `B` is `k x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
) {
    if m == 0 || n == 0 {
        return;
    }
    let span = |rows: usize, cols: usize, rs: usize, cs: usize| {
        if rows == 0 || cols == 0 {
            0
        } else {
            (rows - 1) * rs + (cols - 1) * cs + 1
        }
    };
    assert!(a.len() >= span(m, k, rsa, csa));
    assert!(b.len() >= span(k, n, rsb, csb));
    assert!(c.len() >= m * n);
    // SAFETY: the asserts above bound every index the kernel touches.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Per-layer activations of a batch forward pass. `acts[0]` is the input,
/// `acts[L]` the `tanh` output; each is `rows x width` row-major.
pub(crate) struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

impl EncoderModel {
    /// Glorot-uniform weights, zero biases, deterministic in `seed`.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "encoder needs at least 2 layer dims, got {}",
                layer_dims.len()
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::InvalidArgument("layer dims must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let (n_in, n_out) = (w[0], w[1]);
                let limit = (6.0 / (n_in + n_out) as f64).sqrt();
                let weights = (0..n_in * n_out).map(|_| rng.random_range(-limit..=limit)).collect();
                Dense {
                    n_in,
                    n_out,
                    weights,
                    biases: vec![0.0; n_out],
                }
            })
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidArgument("encoder needs at least one layer".into()));
        }
        for (l, d) in layers.iter().enumerate() {
            if d.n_in == 0 || d.n_out == 0 || d.weights.len() != d.n_in * d.n_out || d.biases.len() != d.n_out {
                return Err(Error::InvalidArgument(format!("layer {l} has inconsistent shape")));
            }
            if l > 0 && layers[l - 1].n_out != d.n_in {
                return Err(Error::InvalidArgument(format!(
                    "layer {l} input {} does not match previous output {}",
                    d.n_in,
                    layers[l - 1].n_out
                )));
            }
            if d.weights.iter().chain(&d.biases).any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("layer {l} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.n_out));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        let mut cache = self.forward_cache(x.to_vec(), 1);
        Ok(cache.acts.pop().unwrap())
    }

    /// Encodes `rows` stacked inputs; returns `rows x output_dim`.
    pub fn forward_batch(&self, inputs: &[f64], rows: usize) -> Result<Vec<f64>> {
        if inputs.len() != rows * self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: rows * self.input_dim(),
                actual: inputs.len(),
            });
        }
        let mut cache = self.forward_cache(inputs.to_vec(), rows);
        Ok(cache.acts.pop().unwrap())
    }

    pub(crate) fn forward_cache(&self, input: Vec<f64>, rows: usize) -> ForwardCache {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input);
        for (l, layer) in self.layers.iter().enumerate() {
            let prev = &acts[l];
            let mut out = Vec::with_capacity(rows * layer.n_out);
            for _ in 0..rows {
                out.extend_from_slice(&layer.biases);
            }
            gemm(
                rows,
                layer.n_in,
                layer.n_out,
                prev,
                (layer.n_in, 1),
                &layer.weights,
                (1, layer.n_in),
                1.0,
                &mut out,
            );
            if l == last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            } else {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        ForwardCache { acts }
    }

    /// Copy with every parameter rounded through `f32`, i.e. what a
    /// checkpoint round trip yields.
    pub fn to_f32_precision(&self) -> Self {
        let mut m = self.clone();
        for l in &mut m.layers {
            for v in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *v = *v as f32 as f64;
            }
        }
        m
    }

    pub fn encode_checkpoint(&self) -> Vec<u8> {
        let mut out = MODEL_MAGIC.to_vec();
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for l in &self.layers {
            out.extend_from_slice(&(l.n_in as u32).to_le_bytes());
            out.extend_from_slice(&(l.n_out as u32).to_le_bytes());
            for &v in l.weights.iter().chain(&l.biases) {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.encode_checkpoint())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = ByteReader::open(path)?;
        r.magic(MODEL_MAGIC)?;
        let n_layers = r.u32("layer count")? as usize;
        if n_layers == 0 {
            return Err(r.error_at(4, "model has no layers"));
        }
        let mut layers = Vec::with_capacity(n_layers);
        for l in 0..n_layers {
            let at = r.offset();
            let n_in = r.u32("layer input dim")? as usize;
            let n_out = r.u32("layer output dim")? as usize;
            if n_in == 0 || n_out == 0 {
                return Err(r.error_at(at, format!("layer {l} has a zero dimension")));
            }
            if let Some(prev) = layers.last() {
                let prev: &Dense = prev;
                if prev.n_out != n_in {
                    return Err(r.error_at(at, format!("layer {l} input {n_in} does not match previous output {}", prev.n_out)));
                }
            }
            let w_at = r.offset();
            let weights = r.f32s(n_in * n_out, "weights")?;
            let biases = r.f32s(n_out, "biases")?;
            if let Some(pos) = weights.iter().chain(&biases).position(|v| !v.is_finite()) {
                return Err(r.error_at(w_at + 4 * pos, "non-finite parameter"));
            }
            layers.push(Dense {
                n_in,
                n_out,
                weights: weights.into_iter().map(f64::from).collect(),
                biases: biases.into_iter().map(f64::from).collect(),
            });
        }
        r.finish()?;
        Ok(Self { layers })
    }
}

/// Free-function form of [`EncoderModel::init`].
pub fn init_encoder(layer_dims: &[usize], seed: u64) -> Result<EncoderModel> {
    EncoderModel::init(layer_dims, seed)
}

pub fn forward(model: &EncoderModel, x: &[f64]) -> Result<Vec<f64>> {
    model.forward(x)
}
