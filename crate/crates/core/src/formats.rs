//! Little-endian binary artifact formats.
//!
//! | magic  | header                  | payload                                   |
//! |--------|-------------------------|-------------------------------------------|
//! | `DHF1` | u32 N, u32 D            | N*D f32, row-major                        |
//! | `DHL1` | u32 N, u32 C            | N*C bytes, 0/1 multi-hot                  |
//! | `DHC1` | u32 N, u32 K            | N rows of ceil(K/8) packed code bytes     |
//! | `DHP1` | u64 count               | count * (u32 i, u32 j, i8 s)              |
//! | `DHM1` | u32 L                   | per layer: u32 in, u32 out, out*in f32 W, out f32 b |
//!
//! Readers load the whole file and report failures with the byte offset at
//! which decoding went wrong.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::codes::{bytes_per_row, BinaryCodes};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, LabelMatrix};
use crate::pairs::{PairLabel, Sign};

pub const FEATURES_MAGIC: &[u8; 4] = b"DHF1";
pub const LABELS_MAGIC: &[u8; 4] = b"DHL1";
pub const CODES_MAGIC: &[u8; 4] = b"DHC1";
pub const PAIRS_MAGIC: &[u8; 4] = b"DHP1";
pub const MODEL_MAGIC: &[u8; 4] = b"DHM1";

/// Cursor over an in-memory file image.
pub(crate) struct ByteReader {
    path: PathBuf,
    buf: Vec<u8>,
    pos: usize,
}

impl ByteReader {
    pub fn open(path: &Path) -> Result<Self> {
        let buf = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            buf,
            pos: 0,
        })
    }

    pub fn error_at(&self, offset: usize, message: impl Into<String>) -> Error {
        Error::Format {
            path: self.path.clone(),
            offset: offset as u64,
            message: message.into(),
        }
    }

    pub fn offset(&self) -> usize {
        self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error_at(
                self.pos,
                format!("unexpected end of file reading {what} ({n} bytes needed)"),
            )),
        }
    }

    pub fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let got = self.take(4, "magic")?;
        if got != expected {
            let got = String::from_utf8_lossy(got).into_owned();
            return Err(self.error_at(
                0,
                format!(
                    "bad magic {got:?}, expected {:?}",
                    String::from_utf8_lossy(expected)
                ),
            ));
        }
        Ok(())
    }

    pub fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    pub fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    pub fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let bytes = self.take(n.saturating_mul(4), what)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        Ok(self.take(n, what)?.to_vec())
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(self.error_at(
                self.pos,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

fn header(magic: &[u8; 4], a: usize, b: usize) -> Result<Vec<u8>> {
    let mut out = magic.to_vec();
    for v in [a, b] {
        let v = u32::try_from(v)
            .map_err(|_| Error::InvalidArgument(format!("{v} does not fit in a u32 header field")))?;
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_features(fs: &FeatureSet) -> Result<Vec<u8>> {
    let mut out = header(FEATURES_MAGIC, fs.n_items(), fs.dim())?;
    out.reserve(fs.as_slice().len() * 4);
    for &x in fs.as_slice() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn write_features(path: &Path, fs: &FeatureSet) -> Result<()> {
    write_file(path, &encode_features(fs)?)
}

/// Reads a `DHF1` file. Labels are attached separately with [`read_labels`].
pub fn read_features(path: &Path) -> Result<FeatureSet> {
    let mut r = ByteReader::open(path)?;
    r.magic(FEATURES_MAGIC)?;
    let n = r.u32("item count")? as usize;
    let d = r.u32("dimension")? as usize;
    let start = r.offset();
    let raw = r.f32s(n * d, "feature payload")?;
    if let Some(pos) = raw.iter().position(|x| !x.is_finite()) {
        return Err(r.error_at(start + 4 * pos, "non-finite feature value"));
    }
    r.finish()?;
    FeatureSet::new(n, d, raw.into_iter().map(f64::from).collect()).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: 4,
        message: e.to_string(),
    })
}

pub fn write_labels(path: &Path, labels: &LabelMatrix) -> Result<()> {
    let mut out = header(LABELS_MAGIC, labels.n_items(), labels.n_classes())?;
    out.extend_from_slice(labels.as_bytes());
    write_file(path, &out)
}

pub fn read_labels(path: &Path) -> Result<LabelMatrix> {
    let mut r = ByteReader::open(path)?;
    r.magic(LABELS_MAGIC)?;
    let n = r.u32("item count")? as usize;
    let c = r.u32("class count")? as usize;
    let start = r.offset();
    let data = r.bytes(n * c, "label payload")?;
    if let Some(pos) = data.iter().position(|&b| b > 1) {
        return Err(r.error_at(start + pos, "label byte is not 0/1"));
    }
    if c > 0 {
        if let Some(row) = data.chunks_exact(c).position(|row| row.iter().all(|&b| b == 0)) {
            return Err(r.error_at(start + row * c, format!("label row {row} has no set bit")));
        }
    }
    r.finish()?;
    LabelMatrix::new(n, c, data).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: 4,
        message: e.to_string(),
    })
}

/// Features plus labels from a companion file.
pub fn read_labeled_features(features: &Path, labels: &Path) -> Result<FeatureSet> {
    let fs = read_features(features)?;
    let lm = read_labels(labels)?;
    fs.with_labels(lm).map_err(|e| Error::Format {
        path: labels.to_path_buf(),
        offset: 4,
        message: e.to_string(),
    })
}

pub fn encode_codes(codes: &BinaryCodes) -> Result<Vec<u8>> {
    let mut out = header(CODES_MAGIC, codes.n_items(), codes.code_len())?;
    out.extend_from_slice(codes.as_bytes());
    Ok(out)
}

pub fn write_codes(path: &Path, codes: &BinaryCodes) -> Result<()> {
    write_file(path, &encode_codes(codes)?)
}

pub fn read_codes(path: &Path) -> Result<BinaryCodes> {
    let mut r = ByteReader::open(path)?;
    r.magic(CODES_MAGIC)?;
    let n = r.u32("item count")? as usize;
    let k_offset = r.offset();
    let k = r.u32("code length")? as usize;
    if k == 0 {
        return Err(r.error_at(k_offset, "code length must be at least 1"));
    }
    let start = r.offset();
    let bits = r.bytes(n * bytes_per_row(k), "code payload")?;
    r.finish()?;
    BinaryCodes::from_packed(n, k, bits).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        offset: start as u64,
        message: e.to_string(),
    })
}

pub fn encode_pairs(pairs: &[PairLabel]) -> Result<Vec<u8>> {
    let mut out = PAIRS_MAGIC.to_vec();
    out.extend_from_slice(&(pairs.len() as u64).to_le_bytes());
    out.reserve(pairs.len() * 9);
    for p in pairs {
        for v in [p.i, p.j] {
            let v = u32::try_from(v)
                .map_err(|_| Error::InvalidArgument(format!("index {v} does not fit in u32")))?;
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(p.s.as_i8() as u8);
    }
    Ok(out)
}

pub fn write_pairs(path: &Path, pairs: &[PairLabel]) -> Result<()> {
    write_file(path, &encode_pairs(pairs)?)
}

/// Reads a `DHP1` pair list. Records must have `i < j` and appear in
/// strictly increasing `(i, j)` order.
pub fn read_pairs(path: &Path) -> Result<Vec<PairLabel>> {
    let mut r = ByteReader::open(path)?;
    r.magic(PAIRS_MAGIC)?;
    let count = r.u64("pair count")? as usize;
    let mut pairs: Vec<PairLabel> = Vec::with_capacity(count.min(1 << 24));
    for _ in 0..count {
        let at = r.offset();
        let i = r.u32("pair index i")? as usize;
        let j = r.u32("pair index j")? as usize;
        let s = r.bytes(1, "pair label")?[0] as i8;
        let s = Sign::from_i8(s).ok_or_else(|| r.error_at(at + 8, format!("label {s} not in {{+1,-1}}")))?;
        if i >= j {
            return Err(r.error_at(at, format!("pair ({i}, {j}) violates i < j")));
        }
        if let Some(prev) = pairs.last() {
            if (prev.i, prev.j) >= (i, j) {
                return Err(r.error_at(at, format!("pair ({i}, {j}) duplicated or out of order")));
            }
        }
        pairs.push(PairLabel { i, j, s });
    }
    r.finish()?;
    Ok(pairs)
}
