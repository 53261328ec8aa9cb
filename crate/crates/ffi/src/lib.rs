//! C ABI over `dhash-core`.
//!
//! Every fallible call returns a [`DhStatus`]; on failure the message is
//! available from [`dh_last_error`] on the same thread. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Strings returned through `char **` are owned by the
//! caller and released with [`dh_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use dhash_core::codes::{hamming_distance, BinaryCodes};
use dhash_core::encoder::{EncoderModel, InputScaling};
use dhash_core::eval::{evaluate_codes, lsh_baseline, EvalConfig, LabeledCodes};
use dhash_core::features::FeatureSet;
use dhash_core::formats::{read_codes, read_features, read_labeled_features, write_codes};
use dhash_core::pipeline::{encode_features, run_pipeline, run_variant_star, PipelineConfig};
use dhash_core::synth::{synth_generate, SyntheticSpec};
use dhash_core::{theorem1_oracle, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhStatus {
    Ok = 0,
    InvalidArgument = 1,
    InvalidConfig = 2,
    EmptyDistilledSet = 3,
    Io = 4,
    NullPointer = 5,
    Panic = 6,
}

/// How feature rows are rescaled before the encoder sees them.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DhInputScaling {
    None = 0,
    SqrtDim = 1,
}

/// Feature matrix, optionally labeled.
pub struct DhFeatures(FeatureSet);

/// Bit-packed binary codes.
pub struct DhCodes(BinaryCodes);

/// A trained encoder.
pub struct DhEncoder(EncoderModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DhStatus {
    match e.exit_code() {
        2 => DhStatus::InvalidConfig,
        3 => DhStatus::EmptyDistilledSet,
        4 => DhStatus::Io,
        _ => DhStatus::InvalidArgument,
    }
}

enum Fail {
    Core(Error),
    Null(&'static str),
    Arg(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> DhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DhStatus::Ok
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            DhStatus::NullPointer
        }
        Ok(Err(Fail::Arg(m))) => {
            set_error(m);
            DhStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic".into());
            DhStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Arg(format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    *out = CString::new(s).map_err(|_| Fail::Arg("string contains NUL".into()))?.into_raw();
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn dh_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a feature file and, when `labels_path` is non-null, its labels.
///
/// # Safety
/// Paths must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dh_features_load(
    features_path: *const c_char,
    labels_path: *const c_char,
    out: *mut *mut DhFeatures,
) -> DhStatus {
    guard(|| {
        let f = PathBuf::from(as_str(features_path, "features_path")?);
        let fs = if labels_path.is_null() {
            read_features(&f)?
        } else {
            read_labeled_features(&f, &PathBuf::from(as_str(labels_path, "labels_path")?))?
        };
        put(out, DhFeatures(fs))
    })
}

/// Labeled Gaussian clusters around orthonormal centers.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dh_synth_generate(
    n_clusters: usize,
    points_per_cluster: usize,
    dim: usize,
    noise_sigma: f64,
    seed: u64,
    out: *mut *mut DhFeatures,
) -> DhStatus {
    guard(|| {
        let spec = SyntheticSpec {
            n_clusters,
            points_per_cluster,
            dim,
            noise_sigma,
            seed,
        };
        put(out, DhFeatures(synth_generate(&spec)?))
    })
}

/// # Safety
/// `f` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dh_features_n_items(f: *const DhFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.n_items())
}

/// # Safety
/// `f` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dh_features_dim(f: *const DhFeatures) -> usize {
    f.as_ref().map_or(0, |f| f.0.dim())
}

/// # Safety
/// `f` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dh_features_free(f: *mut DhFeatures) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dh_codes_load(path: *const c_char, out: *mut *mut DhCodes) -> DhStatus {
    guard(|| {
        let p = PathBuf::from(as_str(path, "path")?);
        put(out, DhCodes(read_codes(&p)?))
    })
}

/// # Safety
/// `codes` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dh_codes_save(codes: *const DhCodes, path: *const c_char) -> DhStatus {
    guard(|| {
        let c = as_ref(codes, "codes")?;
        write_codes(&PathBuf::from(as_str(path, "path")?), &c.0)?;
        Ok(())
    })
}

/// # Safety
/// `c` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dh_codes_n_items(c: *const DhCodes) -> usize {
    c.as_ref().map_or(0, |c| c.0.n_items())
}

/// # Safety
/// `c` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn dh_codes_code_len(c: *const DhCodes) -> usize {
    c.as_ref().map_or(0, |c| c.0.code_len())
}

/// # Safety
/// `c` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dh_codes_free(c: *mut DhCodes) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Hamming distance between row `i` of `a` and row `j` of `b`.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_hamming_distance(
    a: *const DhCodes,
    i: usize,
    b: *const DhCodes,
    j: usize,
    out: *mut u32,
) -> DhStatus {
    guard(|| {
        let (a, b) = (as_ref(a, "a")?, as_ref(b, "b")?);
        if i >= a.0.n_items() || j >= b.0.n_items() {
            return Err(Fail::Arg(format!("row index out of range ({i}, {j})")));
        }
        let d = hamming_distance(a.0.row(i), b.0.row(j))?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        *out = d;
        Ok(())
    })
}

/// Random-hyperplane codes; the same `seed` gives the same hyperplanes.
///
/// # Safety
/// `features` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_lsh_baseline(
    features: *const DhFeatures,
    code_len: usize,
    seed: u64,
    out: *mut *mut DhCodes,
) -> DhStatus {
    guard(|| {
        let f = as_ref(features, "features")?;
        put(out, DhCodes(lsh_baseline(&f.0, code_len, seed)?))
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_encoder_load(path: *const c_char, out: *mut *mut DhEncoder) -> DhStatus {
    guard(|| {
        let p = PathBuf::from(as_str(path, "path")?);
        put(out, DhEncoder(EncoderModel::load(&p)?))
    })
}

/// # Safety
/// `e` must be null or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn dh_encoder_free(e: *mut DhEncoder) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Forward pass and sign on every row. Pipelines use `SqrtDim` by default.
///
/// # Safety
/// Handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_encoder_encode(
    encoder: *const DhEncoder,
    features: *const DhFeatures,
    scaling: DhInputScaling,
    out: *mut *mut DhCodes,
) -> DhStatus {
    guard(|| {
        let (e, f) = (as_ref(encoder, "encoder")?, as_ref(features, "features")?);
        let scaling = match scaling {
            DhInputScaling::None => InputScaling::None,
            DhInputScaling::SqrtDim => InputScaling::SqrtDim,
        };
        put(out, DhCodes(encode_features(&e.0, &f.0, scaling)?))
    })
}

/// Evaluates `query_codes` against `db_codes`; relevance comes from the
/// labels of the two feature handles. `top_n = 0` means
/// `min(1000, database size)`. Writes the report as JSON.
///
/// # Safety
/// Handles must be live; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_evaluate_json(
    query_codes: *const DhCodes,
    query_features: *const DhFeatures,
    db_codes: *const DhCodes,
    db_features: *const DhFeatures,
    top_n: usize,
    out_json: *mut *mut c_char,
) -> DhStatus {
    guard(|| {
        let qc = as_ref(query_codes, "query_codes")?;
        let dc = as_ref(db_codes, "db_codes")?;
        let ql = as_ref(query_features, "query_features")?
            .0
            .labels()
            .ok_or_else(|| Fail::Arg("query features carry no labels".into()))?;
        let dl = as_ref(db_features, "db_features")?
            .0
            .labels()
            .ok_or_else(|| Fail::Arg("database features carry no labels".into()))?;
        let mut cfg = EvalConfig::for_database(dc.0.n_items());
        if top_n > 0 {
            cfg.top_n = top_n;
        }
        let report = evaluate_codes(LabeledCodes::new(&qc.0, ql)?, LabeledCodes::new(&dc.0, dl)?, &cfg)?;
        put_string(out_json, serde_json::to_string(&report).map_err(Error::from)?)
    })
}

/// Runs the full pipeline (or, with `star` nonzero, the variant without
/// distillation) from flat `key = value` config text. Writes the stage log
/// and report as JSON.
///
/// # Safety
/// `config_text` must be NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn dh_pipeline_run(config_text: *const c_char, star: i32, out_json: *mut *mut c_char) -> DhStatus {
    guard(|| {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(as_str(config_text, "config_text")?)?;
        let out = if star != 0 {
            run_variant_star(&cfg)?
        } else {
            run_pipeline(&cfg)?
        };
        let json = serde_json::json!({
            "log": out.log,
            "report": out.report,
            "codes": out.codes.display().to_string(),
        });
        put_string(out_json, json.to_string())
    })
}

/// Grid check of the selection rule; writes the number of counterexamples.
///
/// # Safety
/// `counterexamples` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dh_theorem1_oracle(grid_step: f64, counterexamples: *mut usize) -> DhStatus {
    guard(|| {
        let r = theorem1_oracle(grid_step)?;
        if counterexamples.is_null() {
            return Err(Fail::Null("counterexamples"));
        }
        *counterexamples = r.counterexamples.len();
        Ok(())
    })
}
