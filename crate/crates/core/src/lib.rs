//! Learning-to-hash from noisy local-structure similarity labels.
//!
//! The pipeline derives noisy pair labels from cosine-distance thresholds,
//! trains a pair encoder to estimate the noisy-label probability field,
//! keeps only the pairs whose label can be certified against neighborhood
//! flip-rate bounds, and learns `K`-bit hash functions on what remains.

pub mod codes;
pub mod distill;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod features;
pub mod formats;
pub mod ingest;
pub mod math;
pub mod noisy_labels;
pub mod pairs;
pub mod pipeline;
pub mod synth;

pub use codes::{hamming_distance, inner_product_codes, BinaryCodes, CodeRef};
pub use distill::{
    distill_pairs, flip_rate_bounds, select_label, theorem1_oracle, validate_assumption, DistilledPairSet,
    FlipRateBounds,
};
pub use encoder::{estimate_eta, init_encoder, train_encoder, EncoderModel, EtaField, TrainConfig};
pub use error::{Error, Result};
pub use eval::{evaluate_codes, lsh_baseline, EvalConfig, EvalReport};
pub use features::{FeatureSet, LabelMatrix};
pub use math::{cosine_distance, sigmoid, sign_binarize};
pub use noisy_labels::{build_neighbor_graph, build_noisy_labels, estimate_thresholds, NeighborGraph, NoisyPairLabels, ThresholdPair};
pub use pairs::{PairLabel, Sign};
pub use pipeline::{run_pipeline, run_variant_star, PipelineConfig};
pub use synth::{synth_generate, write_synthetic, SyntheticSpec};
