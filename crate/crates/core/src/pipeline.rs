//! Stage orchestration over an artifact directory.
//!
//! Every stage reads its inputs from disk and writes its outputs back, so a
//! full run and the same stages invoked one at a time produce byte-identical
//! files. All randomness derives from one root seed through [`stage_seed`].

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::codes::BinaryCodes;
use crate::distill::{
    distill_pairs_with, label_agreement, validate_assumption, AssumptionReport, DistillOptions, DistillStats,
    DistilledPairSet,
};
use crate::encoder::{
    encode_all, estimate_eta, init_encoder, train_encoder, EncoderModel, InputScaling, LossPoint, StopReason,
    TrainConfig, TrainOutcome,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_codes, EvalConfig, EvalReport, LabeledCodes};
use crate::features::{FeatureSet, LabelMatrix};
use crate::formats::{
    read_codes, read_features, read_labeled_features, read_labels, read_pairs, write_codes, write_file, write_pairs,
};
use crate::math::sign_binarize;
use crate::noisy_labels::{build_neighbor_graph, build_noisy_labels, estimate_thresholds, NoisyPairLabels, ThresholdEstimate};
use crate::pairs::{PairLabel, Sign};

/// Seed for one stage: SplitMix64 of the root seed xor an FNV-1a hash of the
/// stage label.
pub fn stage_seed(root: u64, stage: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = (root ^ h).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Which pairs the hash stage learns from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Distilled pairs (the full method).
    Distilled,
    /// The initial noisy pairs, skipping distillation.
    Star,
}

impl Variant {
    fn prefix(self) -> &'static str {
        match self {
            Variant::Distilled => "",
            Variant::Star => "star_",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Distilled => "distilled",
            Variant::Star => "star",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distilled" => Ok(Variant::Distilled),
            "star" => Ok(Variant::Star),
            other => Err(Error::InvalidConfig(format!("unknown variant {other:?} (expected distilled or star)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Thresholds,
    NoisyLabels,
    TrainEta,
    Distill,
    TrainHash,
    Encode,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Thresholds => "thresholds",
            Stage::NoisyLabels => "noisy-labels",
            Stage::TrainEta => "train-eta",
            Stage::Distill => "distill",
            Stage::TrainHash => "train-hash",
            Stage::Encode => "encode",
            Stage::Evaluate => "evaluate",
        }
    }
}

/// File layout of an artifact directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn variant_file(&self, v: Variant, name: &str) -> PathBuf {
        self.dir.join(format!("{}{name}", v.prefix()))
    }

    pub fn thresholds(&self) -> PathBuf {
        self.file("thresholds.json")
    }

    pub fn noisy_pairs(&self) -> PathBuf {
        self.file("noisy_pairs.dhp")
    }

    pub fn eta_model(&self) -> PathBuf {
        self.file("eta_model.dhm")
    }

    pub fn eta_loss(&self) -> PathBuf {
        self.file("eta_loss.json")
    }

    pub fn eta_objective(&self) -> PathBuf {
        self.file("eta_objective.json")
    }

    pub fn distilled_pairs(&self) -> PathBuf {
        self.file("distilled_pairs.dhp")
    }

    pub fn diagnostics(&self) -> PathBuf {
        self.file("diagnostics.json")
    }

    pub fn hash_model(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "hash_model.dhm")
    }

    pub fn hash_loss(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "hash_loss.json")
    }

    pub fn hash_objective(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "hash_objective.json")
    }

    pub fn codes(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "codes.dhc")
    }

    pub fn query_codes(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "query_codes.dhc")
    }

    pub fn report(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "report.json")
    }

    pub fn stage_log(&self, v: Variant) -> PathBuf {
        self.variant_file(v, "stage_log.json")
    }
}

/// Every hyperparameter and path of a run.
///
/// `train.seed` and `train.logit_scale` are ignored: each training stage gets
/// its seed from [`stage_seed`] and its logit scale from `eta_logit_scale` or
/// `hash_logit_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Neighborhood size for the flip-rate bounds.
    pub o: usize,
    /// Output width of the eta encoder.
    pub p: usize,
    /// Code length.
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sample_budget: usize,
    pub hidden: Vec<usize>,
    pub train: TrainConfig,
    pub eta_logit_scale: f64,
    pub hash_logit_scale: f64,
    pub input_scaling: InputScaling,
    /// Fraction of candidate pairs scanned by distillation; `None` scans all.
    pub subsample: Option<f64>,
    /// `None` means `min(1000, database size)`.
    pub top_n: Option<usize>,
    pub seed: u64,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub query_features: Option<PathBuf>,
    pub query_labels: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            o: 4,
            p: 48,
            k: 16,
            alpha: 1.0,
            beta: 1.0,
            sample_budget: 2_000_000,
            hidden: vec![512, 256],
            train: TrainConfig::default(),
            eta_logit_scale: 1.0,
            hash_logit_scale: 1.0,
            input_scaling: InputScaling::default(),
            subsample: None,
            top_n: None,
            seed: 0,
            features: None,
            labels: None,
            query_features: None,
            query_labels: None,
            out_dir: PathBuf::from("dhash-out"),
        }
    }
}

/// Keys accepted by [`PipelineConfig::set`]; `-` and `_` are interchangeable.
pub const CONFIG_KEYS: &[&str] = &[
    "o",
    "p",
    "k",
    "alpha",
    "beta",
    "sample_budget",
    "hidden",
    "batch_size",
    "learning_rate",
    "momentum",
    "max_iters",
    "tol",
    "patience_window",
    "eta_logit_scale",
    "hash_logit_scale",
    "input_scaling",
    "subsample",
    "top_n",
    "seed",
    "features",
    "labels",
    "query_features",
    "query_labels",
    "out_dir",
];

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {v:?}")))
}

impl PipelineConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let k = key.as_str();
        let path = || (!v.is_empty()).then(|| PathBuf::from(v));
        match k {
            "o" => self.o = parse_value(k, v)?,
            "p" => self.p = parse_value(k, v)?,
            "k" => self.k = parse_value(k, v)?,
            "alpha" => self.alpha = parse_value(k, v)?,
            "beta" => self.beta = parse_value(k, v)?,
            "sample_budget" => self.sample_budget = parse_value(k, v)?,
            "hidden" => {
                self.hidden = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(k, s))
                    .collect::<Result<_>>()?
            }
            "batch_size" => self.train.batch_size = parse_value(k, v)?,
            "learning_rate" => self.train.learning_rate = parse_value(k, v)?,
            "momentum" => self.train.momentum = parse_value(k, v)?,
            "max_iters" => self.train.max_iters = parse_value(k, v)?,
            "tol" => self.train.tol = parse_value(k, v)?,
            "patience_window" => self.train.patience_window = parse_value(k, v)?,
            "eta_logit_scale" => self.eta_logit_scale = parse_value(k, v)?,
            "hash_logit_scale" => self.hash_logit_scale = parse_value(k, v)?,
            "input_scaling" => self.input_scaling = v.parse()?,
            "subsample" => {
                self.subsample = match v {
                    "" | "off" | "none" => None,
                    _ => Some(parse_value(k, v)?),
                }
            }
            "top_n" => {
                self.top_n = match v {
                    "" | "auto" => None,
                    _ => Some(parse_value(k, v)?),
                }
            }
            "seed" => self.seed = parse_value(k, v)?,
            "features" => self.features = path(),
            "labels" => self.labels = path(),
            "query_features" => self.query_features = path(),
            "query_labels" => self.query_labels = path(),
            "out_dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::InvalidConfig(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` text; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::InvalidConfig(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.o == 0 || self.p == 0 || self.k == 0 {
            return bad("o, p and k must be positive".into());
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive".into());
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.alpha.is_finite() && self.beta.is_finite()) {
            return bad("alpha and beta must be finite and nonnegative".into());
        }
        if self.sample_budget == 0 {
            return bad("sample_budget must be positive".into());
        }
        for (name, c) in [("eta_logit_scale", self.eta_logit_scale), ("hash_logit_scale", self.hash_logit_scale)] {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("{name} must be positive"));
            }
        }
        if let Some(f) = self.subsample {
            if !(f > 0.0 && f <= 1.0) {
                return bad(format!("subsample {f} not in (0, 1]"));
            }
        }
        if self.top_n == Some(0) {
            return bad("top_n must be positive".into());
        }
        if self.query_features.is_some() != self.query_labels.is_some() {
            return bad("query_features and query_labels must be given together".into());
        }
        self.train.validate()
    }

    pub fn artifacts(&self) -> Artifacts {
        Artifacts::new(&self.out_dir)
    }

    pub fn eta_layer_dims(&self, input_dim: usize) -> Vec<usize> {
        self.layer_dims(input_dim, self.p)
    }

    pub fn hash_layer_dims(&self, input_dim: usize) -> Vec<usize> {
        self.layer_dims(input_dim, self.k)
    }

    fn layer_dims(&self, input_dim: usize, out: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden);
        dims.push(out);
        dims
    }

    pub fn eta_train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: stage_seed(self.seed, "train-eta"),
            logit_scale: self.eta_logit_scale,
            ..self.train.clone()
        }
    }

    pub fn hash_train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: stage_seed(self.seed, "train-hash"),
            logit_scale: self.hash_logit_scale,
            ..self.train.clone()
        }
    }

    fn distill_options(&self) -> DistillOptions {
        DistillOptions {
            subsample: self.subsample.map(|f| (f, stage_seed(self.seed, "distill-subsample"))),
        }
    }
}

// In-memory stage kernels.

pub fn compute_thresholds(features: &FeatureSet, cfg: &PipelineConfig) -> Result<ThresholdEstimate> {
    let mut rng = ChaCha8Rng::seed_from_u64(stage_seed(cfg.seed, "thresholds"));
    estimate_thresholds(features, cfg.alpha, cfg.beta, cfg.sample_budget, &mut rng)
}

pub fn train_eta_model(features: &FeatureSet, pairs: &[PairLabel], cfg: &PipelineConfig) -> Result<TrainOutcome> {
    let x = cfg.input_scaling.apply(features)?;
    let init = init_encoder(&cfg.eta_layer_dims(features.dim()), stage_seed(cfg.seed, "eta-init"))?;
    train_encoder(init, pairs, &x, &cfg.eta_train_config())
}

pub fn distill_with_model(
    features: &FeatureSet,
    eta_model: &EncoderModel,
    cfg: &PipelineConfig,
) -> Result<(DistilledPairSet, DistillStats)> {
    if cfg.o >= features.n_items() {
        return Err(Error::InvalidConfig(format!(
            "o = {} needs more than {} items",
            cfg.o,
            features.n_items()
        )));
    }
    let x = cfg.input_scaling.apply(features)?;
    let eta = estimate_eta(eta_model, &x, cfg.eta_logit_scale)?;
    let graph = build_neighbor_graph(features, cfg.o)?;
    distill_pairs_with(&eta, &graph, features.n_items(), cfg.distill_options())
}

pub fn train_hash_model(features: &FeatureSet, pairs: &[PairLabel], cfg: &PipelineConfig) -> Result<TrainOutcome> {
    let x = cfg.input_scaling.apply(features)?;
    let init = init_encoder(&cfg.hash_layer_dims(features.dim()), stage_seed(cfg.seed, "hash-init"))?;
    train_encoder(init, pairs, &x, &cfg.hash_train_config())
}

/// Forward pass plus sign on every item.
pub fn encode_features(model: &EncoderModel, features: &FeatureSet, scaling: InputScaling) -> Result<BinaryCodes> {
    let x = scaling.apply(features)?;
    let z = encode_all(model, &x)?;
    let k = model.output_dim();
    let rows: Vec<Vec<i8>> = z.chunks_exact(k).map(sign_binarize).collect();
    BinaryCodes::from_sign_rows(k, &rows)
}

/// `true` iff items `i` and `j` share a label.
pub fn share_any_label(labels: &LabelMatrix) -> impl Fn(usize, usize) -> bool + '_ {
    move |i, j| labels.row(i).iter().zip(labels.row(j)).any(|(a, b)| a & b != 0)
}

// Reports.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub pairs: usize,
    pub stop: StopReason,
    pub iterations: usize,
    pub initial_objective: Option<f64>,
    pub final_objective: Option<f64>,
}

impl TrainSummary {
    fn new(out: &TrainOutcome, pairs: usize) -> Self {
        Self {
            pairs,
            stop: out.stop,
            iterations: out.trace.len(),
            initial_objective: out.initial_objective(),
            final_objective: out.final_objective(),
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self.stop, StopReason::Converged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistillDiagnostics {
    pub noisy_pairs: usize,
    pub noisy_pos: usize,
    pub noisy_neg: usize,
    #[serde(flatten)]
    pub stats: DistillStats,
    /// Fraction of labels matching shared-label ground truth, when labels exist.
    pub noisy_agreement: Option<f64>,
    pub distilled_agreement: Option<f64>,
    pub assumption: Option<AssumptionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageLog {
    pub variant: Variant,
    pub stages: Vec<StageRecord>,
}

impl StageLog {
    pub fn ran(&self, stage: Stage) -> bool {
        self.stages.iter().any(|r| r.stage == stage)
    }

    pub fn detail(&self, stage: Stage) -> Option<&Value> {
        self.stages.iter().find(|r| r.stage == stage).map(|r| &r.detail)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub log: StageLog,
    pub report: Option<EvalReport>,
    pub codes: PathBuf,
}

// File plumbing.

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| Error::JsonFile {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(path, &bytes)
}

fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidConfig(format!("{what} path is not set")))
}

fn load_database(cfg: &PipelineConfig) -> Result<FeatureSet> {
    let f = require(&cfg.features, "features")?;
    match &cfg.labels {
        Some(l) => read_labeled_features(f, l),
        None => read_features(f),
    }
}

fn load_queries(cfg: &PipelineConfig) -> Result<Option<FeatureSet>> {
    match (&cfg.query_features, &cfg.query_labels) {
        (Some(f), Some(l)) => read_labeled_features(f, l).map(Some),
        (Some(f), None) => read_features(f).map(Some),
        _ => Ok(None),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn write_training(out: &TrainOutcome, model: &Path, loss: &Path, objective: &Path) -> Result<()> {
    out.model.save(model)?;
    write_json::<[LossPoint]>(loss, &out.trace)?;
    write_json::<[LossPoint]>(objective, &out.objective)
}

/// Runs one stage against the artifact directory and returns its log record.
pub fn run_stage(stage: Stage, cfg: &PipelineConfig, variant: Variant) -> Result<StageRecord> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let detail = match stage {
        Stage::Thresholds => {
            let fs = load_database(cfg)?;
            let est = compute_thresholds(&fs, cfg)?;
            write_json(&art.thresholds(), &est)?;
            to_value(&est)?
        }
        Stage::NoisyLabels => {
            let fs = load_database(cfg)?;
            let est: ThresholdEstimate = read_json(&art.thresholds())?;
            let noisy = build_noisy_labels(&fs, est.thresholds)?;
            write_pairs(&art.noisy_pairs(), noisy.pairs())?;
            serde_json::json!({
                "pairs": noisy.len(),
                "pos": noisy.count(Sign::Pos),
                "neg": noisy.count(Sign::Neg),
            })
        }
        Stage::TrainEta => {
            let fs = load_database(cfg)?;
            let pairs = read_pairs(&art.noisy_pairs())?;
            let out = train_eta_model(&fs, &pairs, cfg)?;
            write_training(&out, &art.eta_model(), &art.eta_loss(), &art.eta_objective())?;
            to_value(&TrainSummary::new(&out, pairs.len()))?
        }
        Stage::Distill => {
            let fs = load_database(cfg)?;
            let model = EncoderModel::load(&art.eta_model())?;
            let noisy = NoisyPairLabels::new(read_pairs(&art.noisy_pairs())?, fs.n_items())?;
            let (set, stats) = distill_with_model(&fs, &model, cfg)?;
            let truth = fs.labels().map(share_any_label);
            let diag = DistillDiagnostics {
                noisy_pairs: noisy.len(),
                noisy_pos: noisy.count(Sign::Pos),
                noisy_neg: noisy.count(Sign::Neg),
                stats,
                noisy_agreement: truth.as_ref().and_then(|t| label_agreement(noisy.pairs(), t)),
                distilled_agreement: truth.as_ref().and_then(|t| label_agreement(set.pairs(), t)),
                assumption: truth.as_ref().map(|t| validate_assumption(&noisy, t)),
            };
            write_json(&art.diagnostics(), &diag)?;
            write_pairs(&art.distilled_pairs(), set.pairs())?;
            if set.is_empty() {
                return Err(Error::EmptyDistilledSet(format!(
                    "0 of {} candidate pairs distilled ({} noisy pairs: {} +1, {} -1); eta histogram over [0, 1] in {} bins: {:?}",
                    diag.stats.candidates,
                    diag.noisy_pairs,
                    diag.noisy_pos,
                    diag.noisy_neg,
                    diag.stats.eta_histogram.len(),
                    diag.stats.eta_histogram
                )));
            }
            to_value(&diag)?
        }
        Stage::TrainHash => {
            let fs = load_database(cfg)?;
            let source = match variant {
                Variant::Distilled => art.distilled_pairs(),
                Variant::Star => art.noisy_pairs(),
            };
            let pairs = read_pairs(&source)?;
            if pairs.is_empty() && variant == Variant::Distilled {
                return Err(Error::EmptyDistilledSet(format!("{} holds no pairs", source.display())));
            }
            let out = train_hash_model(&fs, &pairs, cfg)?;
            write_training(
                &out,
                &art.hash_model(variant),
                &art.hash_loss(variant),
                &art.hash_objective(variant),
            )?;
            let mut v = to_value(&TrainSummary::new(&out, pairs.len()))?;
            let name = source.file_name().map(|n| n.to_string_lossy().into_owned());
            v["source"] = Value::String(name.unwrap_or_default());
            v
        }
        Stage::Encode => {
            let fs = load_database(cfg)?;
            let model = EncoderModel::load(&art.hash_model(variant))?;
            let codes = encode_features(&model, &fs, cfg.input_scaling)?;
            write_codes(&art.codes(variant), &codes)?;
            let mut queries = 0;
            if let Some(q) = load_queries(cfg)? {
                let qc = encode_features(&model, &q, cfg.input_scaling)?;
                write_codes(&art.query_codes(variant), &qc)?;
                queries = qc.n_items();
            }
            serde_json::json!({ "items": codes.n_items(), "queries": queries, "code_len": codes.code_len() })
        }
        Stage::Evaluate => {
            let labels = require(&cfg.labels, "labels")?;
            let (qc, ql) = match &cfg.query_labels {
                Some(ql) => (art.query_codes(variant), ql.clone()),
                None => (art.codes(variant), labels.to_path_buf()),
            };
            let db = read_codes(&art.codes(variant))?;
            let eval_cfg = EvalConfig {
                r_cutoff: db.n_items(),
                top_n: cfg.top_n.unwrap_or(db.n_items().min(1000)),
            };
            let report = evaluate_files(&art.codes(variant), &qc, labels, &ql, &eval_cfg)?;
            write_json(&art.report(variant), &report)?;
            serde_json::json!({ "map": report.map, "queries": read_codes(&qc)?.n_items() })
        }
    };
    Ok(StageRecord { stage, detail })
}

/// Loads codes and labels and runs all three metrics.
pub fn evaluate_files(
    codes_db: &Path,
    codes_query: &Path,
    labels_db: &Path,
    labels_query: &Path,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let db = read_codes(codes_db)?;
    let q = read_codes(codes_query)?;
    let dl = read_labels(labels_db)?;
    let ql = read_labels(labels_query)?;
    evaluate_codes(LabeledCodes::new(&q, &ql)?, LabeledCodes::new(&db, &dl)?, cfg)
}

fn run_stages(cfg: &PipelineConfig, variant: Variant, stages: &[Stage]) -> Result<PipelineOutcome> {
    cfg.validate()?;
    let art = cfg.artifacts();
    let mut log = StageLog {
        variant,
        stages: Vec::new(),
    };
    for &stage in stages {
        match run_stage(stage, cfg, variant) {
            Ok(rec) => log.stages.push(rec),
            Err(e) => {
                log.stages.push(StageRecord {
                    stage,
                    detail: serde_json::json!({ "error": e.to_string() }),
                });
                write_json(&art.stage_log(variant), &log)?;
                return Err(e);
            }
        }
    }
    write_json(&art.stage_log(variant), &log)?;
    let report = if log.ran(Stage::Evaluate) {
        Some(read_json(&art.report(variant))?)
    } else {
        None
    };
    Ok(PipelineOutcome {
        log,
        report,
        codes: art.codes(variant),
    })
}

fn with_evaluate(cfg: &PipelineConfig, stages: &[Stage]) -> Vec<Stage> {
    let mut v = stages.to_vec();
    if cfg.labels.is_some() {
        v.push(Stage::Evaluate);
    }
    v
}

/// Thresholds, noisy labels, eta training, distillation, hash training and
/// encoding, then evaluation when labels are configured.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let stages = with_evaluate(
        cfg,
        &[
            Stage::Thresholds,
            Stage::NoisyLabels,
            Stage::TrainEta,
            Stage::Distill,
            Stage::TrainHash,
            Stage::Encode,
        ],
    );
    run_stages(cfg, Variant::Distilled, &stages)
}

/// The same run with hash training on the noisy pairs; no eta training and
/// no distillation.
pub fn run_variant_star(cfg: &PipelineConfig) -> Result<PipelineOutcome> {
    let stages = with_evaluate(
        cfg,
        &[Stage::Thresholds, Stage::NoisyLabels, Stage::TrainHash, Stage::Encode],
    );
    run_stages(cfg, Variant::Star, &stages)
}
