//! CSV ingest for precomputed features and multi-hot labels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{FeatureSet, LabelMatrix};

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let offset = e.position().map_or(0, |p| p.byte());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Format {
            path: path.to_path_buf(),
            offset,
            message: format!("{kind:?}"),
        },
    }
}

/// Reads a numeric CSV; every record must have the same width.
fn read_rows<T, F>(path: &Path, has_headers: bool, mut parse: F) -> Result<(Vec<T>, usize, usize)>
where
    F: FnMut(&str) -> Option<T>,
{
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(has_headers)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut values = Vec::new();
    let mut n = 0;
    let mut width = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let offset = rec.position().map_or(0, |p| p.byte());
        for field in &rec {
            let v = parse(field).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                offset,
                message: format!("record {}: cannot parse {field:?}", n + 1),
            })?;
            values.push(v);
        }
        if n == 0 {
            width = rec.len();
        }
        n += 1;
    }
    Ok((values, n, width))
}

/// Features from one CSV (one row per item) and optional labels from another
/// (one 0/1 column per class).
pub fn ingest_csv(features: &Path, labels: Option<&Path>, has_headers: bool) -> Result<FeatureSet> {
    let (data, n, d) = read_rows(features, has_headers, |s| s.parse::<f64>().ok())?;
    let fs = FeatureSet::new(n, d, data)?;
    match labels {
        None => Ok(fs),
        Some(path) => {
            let (bits, ln, c) = read_rows(path, has_headers, |s| match s {
                "0" => Some(0u8),
                "1" => Some(1u8),
                _ => None,
            })?;
            if ln != n {
                return Err(Error::InvalidFeatures(format!("{n} feature rows but {ln} label rows")));
            }
            fs.with_labels(LabelMatrix::new(ln, c, bits)?)
        }
    }
}
