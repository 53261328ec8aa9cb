//! Feed-forward pair encoder and its pairwise-logistic trainer.
//!
//! The same architecture serves two roles: with a `p`-dimensional output it
//! estimates the noisy-label probability field from the initial noisy pairs,
//! and with a `K`-dimensional output it learns hash functions from distilled
//! pairs.

mod eta;
mod input;
mod loss;
mod model;
mod train;

pub use eta::{encode_all, estimate_eta, EtaField};
pub use input::InputScaling;
pub use loss::{batch_loss, loss_gradient, pairwise_logistic_loss, Gradients, PairExample};
pub use model::{forward, init_encoder, Dense, EncoderModel};
pub use train::{relative_change, train_encoder, LossPoint, StopReason, TrainConfig, TrainOutcome, MONITOR_PAIR_CAP};
