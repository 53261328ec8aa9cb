use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eta::encode_all;
use super::loss::{loss_gradient, pair_loss, PairExample};
use super::model::EncoderModel;
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::math::dot;
use crate::pairs::PairLabel;

/// Largest number of pairs the convergence monitor evaluates.
pub const MONITOR_PAIR_CAP: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Pairs per minibatch.
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iters: usize,
    /// Relative change of the monitored objective between consecutive
    /// checkpoints below which training stops.
    pub tol: f64,
    /// Iterations between monitor checkpoints.
    pub patience_window: usize,
    pub seed: u64,
    /// Multiplier on the embedding inner product before the sigmoid.
    pub logit_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-3,
            momentum: 0.9,
            max_iters: 1000,
            tol: 1e-4,
            patience_window: 50,
            seed: 0,
            logit_scale: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol must be positive");
        }
        if self.patience_window == 0 {
            return bad("patience_window must be positive");
        }
        if !(self.logit_scale > 0.0 && self.logit_scale.is_finite()) {
            return bad("logit_scale must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub iter: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The relative-change rule fired after this many iterations.
    Converged { iterations: usize },
    MaxIters,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EncoderModel,
    /// Minibatch loss before each update.
    pub trace: Vec<LossPoint>,
    /// Monitored objective at iteration 0, every `patience_window` updates,
    /// and after the last update.
    pub objective: Vec<LossPoint>,
    pub stop: StopReason,
}

impl TrainOutcome {
    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Converged { .. })
    }

    pub fn initial_objective(&self) -> Option<f64> {
        self.objective.first().map(|p| p.loss)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective.last().map(|p| p.loss)
    }
}

/// `|prev - cur| / |prev|`.
pub fn relative_change(prev: f64, cur: f64) -> f64 {
    (prev - cur).abs() / prev.abs().max(f64::MIN_POSITIVE)
}

/// Fixed pair subset on which the full objective is tracked: every pair when
/// there are at most [`MONITOR_PAIR_CAP`], else a seeded uniform sample.
struct Monitor {
    pairs: Vec<PairLabel>,
    items: Vec<usize>,
    /// Position of each item in `items`, indexed by item id.
    slot: Vec<usize>,
}

impl Monitor {
    fn new(pairs: &[PairLabel], n_items: usize, seed: u64) -> Self {
        let pairs: Vec<PairLabel> = if pairs.len() <= MONITOR_PAIR_CAP {
            pairs.to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let mut idx = sample(&mut rng, pairs.len(), MONITOR_PAIR_CAP).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|k| pairs[k]).collect()
        };
        let mut used = vec![false; n_items];
        for p in &pairs {
            used[p.i] = true;
            used[p.j] = true;
        }
        let items: Vec<usize> = (0..n_items).filter(|&i| used[i]).collect();
        let mut slot = vec![usize::MAX; n_items];
        for (k, &i) in items.iter().enumerate() {
            slot[i] = k;
        }
        Self { pairs, items, slot }
    }

    fn objective(&self, model: &EncoderModel, features: &FeatureSet, logit_scale: f64) -> Result<f64> {
        let rows: Vec<&[f64]> = self.items.iter().map(|&i| features.row(i)).collect();
        let z = encode_all(model, &FeatureSet::from_rows(&rows)?)?;
        let p = model.output_dim();
        let total: f64 = self
            .pairs
            .iter()
            .map(|pr| {
                let (a, b) = (self.slot[pr.i], self.slot[pr.j]);
                pair_loss(logit_scale * dot(&z[a * p..(a + 1) * p], &z[b * p..(b + 1) * p]), pr.s)
            })
            .sum();
        Ok(total / self.pairs.len() as f64)
    }
}

/// Minibatch SGD with momentum on the mean pairwise logistic loss.
///
/// Each iteration draws `batch_size` pairs uniformly with replacement. The
/// mean loss over a fixed monitor set of training pairs is evaluated before
/// the first update and every `patience_window` updates; training stops
/// after `max_iters` updates or once the [`relative_change`] between two
/// consecutive evaluations drops below `tol`.
pub fn train_encoder(
    mut model: EncoderModel,
    pairs: &[PairLabel],
    features: &FeatureSet,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    if pairs.is_empty() {
        return Err(Error::NoTrainingPairs);
    }
    cfg.validate()?;
    if model.input_dim() != features.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: features.dim(),
        });
    }
    if let Some(p) = pairs.iter().find(|p| p.j >= features.n_items() || p.i >= features.n_items()) {
        return Err(Error::InvalidArgument(format!(
            "pair ({}, {}) out of range for {} items",
            p.i,
            p.j,
            features.n_items()
        )));
    }

    if cfg.max_iters == 0 {
        return Ok(TrainOutcome {
            model,
            trace: Vec::new(),
            objective: Vec::new(),
            stop: StopReason::MaxIters,
        });
    }

    let monitor = Monitor::new(pairs, features.n_items(), cfg.seed);
    let mut objective = vec![LossPoint {
        iter: 0,
        loss: monitor.objective(&model, features, cfg.logit_scale)?,
    }];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity: Vec<(Vec<f64>, Vec<f64>)> = model
        .layers()
        .iter()
        .map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.biases.len()]))
        .collect();
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut stop = StopReason::MaxIters;

    for iter in 0..cfg.max_iters {
        let batch: Vec<PairExample> = (0..cfg.batch_size)
            .map(|_| {
                let p = pairs[rng.random_range(0..pairs.len())];
                PairExample {
                    xi: features.row(p.i),
                    xj: features.row(p.j),
                    s: p.s,
                }
            })
            .collect();
        let (loss, grads) = loss_gradient(&model, &batch, cfg.logit_scale);
        trace.push(LossPoint { iter, loss });

        for ((layer, g), (vw, vb)) in model.layers_mut().iter_mut().zip(&grads.layers).zip(&mut velocity) {
            for ((w, &gw), v) in layer.weights.iter_mut().zip(&g.weights).zip(vw.iter_mut()) {
                *v = cfg.momentum * *v + gw;
                *w -= cfg.learning_rate * *v;
            }
            for ((b, &gb), v) in layer.biases.iter_mut().zip(&g.biases).zip(vb.iter_mut()) {
                *v = cfg.momentum * *v + gb;
                *b -= cfg.learning_rate * *v;
            }
        }

        let done = iter + 1;
        if done % cfg.patience_window == 0 || done == cfg.max_iters {
            let prev = objective.last().unwrap().loss;
            let cur = monitor.objective(&model, features, cfg.logit_scale)?;
            objective.push(LossPoint { iter: done, loss: cur });
            if done % cfg.patience_window == 0 && relative_change(prev, cur) < cfg.tol {
                stop = StopReason::Converged { iterations: done };
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model,
        trace,
        objective,
        stop,
    })
}
