use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use dhash_core::error::Result;
use dhash_core::eval::EvalConfig;
use dhash_core::formats::{read_codes, write_features, write_labels};
use dhash_core::ingest::ingest_csv;
use dhash_core::pipeline::{
    evaluate_files, run_pipeline, run_stage, run_variant_star, write_json, PipelineConfig, PipelineOutcome, Stage,
    Variant,
};
use dhash_core::synth::{write_synthetic, SyntheticSpec};

#[derive(Parser)]
#[command(name = "dhash", version, about = "Learning-to-hash from distilled pair labels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert CSV features (and optional 0/1 label columns) to binary files.
    Ingest(IngestArgs),
    /// Generate a labeled Gaussian-cluster dataset.
    Synth(SynthArgs),
    /// Estimate the distance thresholds.
    Thresholds(ConfigArgs),
    /// Build the noisy pair labels.
    NoisyLabels(ConfigArgs),
    /// Train the eta encoder on the noisy pairs.
    TrainEta(ConfigArgs),
    /// Select confidently labeled pairs.
    Distill(ConfigArgs),
    /// Train the hash encoder.
    TrainHash(VariantArgs),
    /// Encode database (and query) items.
    Encode(VariantArgs),
    /// Compute MAP, topN precision and the precision-recall curve.
    Evaluate(EvaluateArgs),
    /// Run every stage with distillation.
    Pipeline(ConfigArgs),
    /// Run every stage with hash training on the noisy pairs.
    PipelineStar(ConfigArgs),
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    features_csv: PathBuf,
    #[arg(long)]
    labels_csv: Option<PathBuf>,
    /// The first CSV row is data, not a header.
    #[arg(long)]
    no_header: bool,
    #[arg(long)]
    out_features: PathBuf,
    #[arg(long)]
    out_labels: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 3)]
    n_clusters: usize,
    #[arg(long, default_value_t = 200)]
    points_per_cluster: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0.35)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    queries_per_cluster: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Flags named after the config keys; each overrides the `--config` file.
#[derive(Args)]
struct ConfigArgs {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    o: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sample_budget: Option<usize>,
    /// Comma-separated hidden widths, e.g. 512,256.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    patience_window: Option<usize>,
    #[arg(long)]
    eta_logit_scale: Option<f64>,
    #[arg(long)]
    hash_logit_scale: Option<f64>,
    /// none or sqrt_dim.
    #[arg(long)]
    input_scaling: Option<String>,
    /// Fraction of candidate pairs to scan, or "off".
    #[arg(long)]
    subsample: Option<String>,
    /// Largest topN, or "auto".
    #[arg(long)]
    top_n: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long)]
    query_features: Option<PathBuf>,
    #[arg(long)]
    query_labels: Option<PathBuf>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let flags: [(&str, Option<String>); 24] = [
            ("o", self.o.map(|v| v.to_string())),
            ("p", self.p.map(|v| v.to_string())),
            ("k", self.k.map(|v| v.to_string())),
            ("alpha", self.alpha.map(|v| v.to_string())),
            ("beta", self.beta.map(|v| v.to_string())),
            ("sample_budget", self.sample_budget.map(|v| v.to_string())),
            ("hidden", self.hidden.clone()),
            ("batch_size", self.batch_size.map(|v| v.to_string())),
            ("learning_rate", self.learning_rate.map(|v| v.to_string())),
            ("momentum", self.momentum.map(|v| v.to_string())),
            ("max_iters", self.max_iters.map(|v| v.to_string())),
            ("tol", self.tol.map(|v| v.to_string())),
            ("patience_window", self.patience_window.map(|v| v.to_string())),
            ("eta_logit_scale", self.eta_logit_scale.map(|v| v.to_string())),
            ("hash_logit_scale", self.hash_logit_scale.map(|v| v.to_string())),
            ("input_scaling", self.input_scaling.clone()),
            ("subsample", self.subsample.clone()),
            ("top_n", self.top_n.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("features", self.features.as_ref().map(|p| p.display().to_string())),
            ("labels", self.labels.as_ref().map(|p| p.display().to_string())),
            ("query_features", self.query_features.as_ref().map(|p| p.display().to_string())),
            ("query_labels", self.query_labels.as_ref().map(|p| p.display().to_string())),
            ("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct VariantArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// distilled or star.
    #[arg(long, default_value = "distilled")]
    variant: Variant,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    inner: VariantArgs,
    /// Database codes; with the three paths below, evaluates these files
    /// directly instead of the artifact directory.
    #[arg(long, requires_all = ["codes_query", "labels_db", "labels_query", "out"])]
    codes_db: Option<PathBuf>,
    #[arg(long)]
    codes_query: Option<PathBuf>,
    #[arg(long)]
    labels_db: Option<PathBuf>,
    #[arg(long)]
    labels_query: Option<PathBuf>,
    /// Report path for the explicit form.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn print(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

fn stage(stage: Stage, args: &ConfigArgs, variant: Variant) -> Result<()> {
    let cfg = args.resolve()?;
    let rec = run_stage(stage, &cfg, variant)?;
    print(&serde_json::json!({ "stage": stage.name(), "detail": rec.detail }));
    Ok(())
}

fn summarize(out: PipelineOutcome) {
    print(&serde_json::json!({
        "variant": out.log.variant,
        "codes": out.codes.display().to_string(),
        "stages": out.log.stages.iter().map(|r| r.stage.name()).collect::<Vec<_>>(),
        "map": out.report.map(|r| r.map),
    }));
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => {
            let fs = ingest_csv(&a.features_csv, a.labels_csv.as_deref(), !a.no_header)?;
            write_features(&a.out_features, &fs)?;
            if let (Some(out), Some(labels)) = (&a.out_labels, fs.labels()) {
                write_labels(out, labels)?;
            }
            print(&serde_json::json!({ "items": fs.n_items(), "dim": fs.dim(), "labeled": fs.labels().is_some() }));
        }
        Command::Synth(a) => {
            let spec = SyntheticSpec {
                n_clusters: a.n_clusters,
                points_per_cluster: a.points_per_cluster,
                dim: a.dim,
                noise_sigma: a.noise_sigma,
                seed: a.seed,
            };
            let files = write_synthetic(&spec, a.queries_per_cluster, &a.out_dir)?;
            print(&serde_json::json!({
                "features": files.features.display().to_string(),
                "labels": files.labels.display().to_string(),
                "query_features": files.query_features.map(|p| p.display().to_string()),
                "query_labels": files.query_labels.map(|p| p.display().to_string()),
            }));
        }
        Command::Thresholds(a) => stage(Stage::Thresholds, &a, Variant::Distilled)?,
        Command::NoisyLabels(a) => stage(Stage::NoisyLabels, &a, Variant::Distilled)?,
        Command::TrainEta(a) => stage(Stage::TrainEta, &a, Variant::Distilled)?,
        Command::Distill(a) => stage(Stage::Distill, &a, Variant::Distilled)?,
        Command::TrainHash(a) => stage(Stage::TrainHash, &a.config, a.variant)?,
        Command::Encode(a) => stage(Stage::Encode, &a.config, a.variant)?,
        Command::Evaluate(a) => match (a.codes_db, a.codes_query, a.labels_db, a.labels_query, a.out) {
            (Some(db), Some(q), Some(ldb), Some(lq), Some(out)) => {
                let cfg = a.inner.config.resolve()?;
                let n = read_codes(&db)?.n_items();
                let eval = EvalConfig {
                    r_cutoff: n,
                    top_n: cfg.top_n.unwrap_or(n.min(1000)),
                };
                let report = evaluate_files(&db, &q, &ldb, &lq, &eval)?;
                write_json(&out, &report)?;
                print(&serde_json::json!({ "map": report.map, "report": out.display().to_string() }));
            }
            _ => stage(Stage::Evaluate, &a.inner.config, a.inner.variant)?,
        },
        Command::Pipeline(a) => summarize(run_pipeline(&a.resolve()?)?),
        Command::PipelineStar(a) => summarize(run_variant_star(&a.resolve()?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dhash: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
