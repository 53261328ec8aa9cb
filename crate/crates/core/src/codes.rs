//! Bit-packed `{-1, +1}^K` hash codes.
//!
//! Layout: one row per item, `ceil(K / 8)` bytes per row. Bit `j` of a code
//! lives in byte `j / 8` at bit position `j % 8`; a set bit means `+1`, a
//! clear bit `-1`. Padding bits past `K` in the last byte are always zero,
//! which lets the Hamming kernel popcount whole words without masking.

use crate::error::{Error, Result};

#[inline]
pub fn bytes_per_row(code_len: usize) -> usize {
    code_len.div_ceil(8)
}

/// Pack a `±1` sign row into bytes. Any nonnegative entry packs as `+1`.
pub fn pack_signs(signs: &[i8]) -> Vec<u8> {
    let mut out = vec![0u8; bytes_per_row(signs.len())];
    for (j, &s) in signs.iter().enumerate() {
        if s >= 0 {
            out[j / 8] |= 1 << (j % 8);
        }
    }
    out
}

pub fn unpack_signs(bytes: &[u8], code_len: usize) -> Vec<i8> {
    (0..code_len)
        .map(|j| if bytes[j / 8] >> (j % 8) & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// A borrowed packed code row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRef<'a> {
    bytes: &'a [u8],
    code_len: usize,
}

impl<'a> CodeRef<'a> {
    /// Wraps packed bytes; fails if the length or padding is inconsistent with `code_len`.
    pub fn new(bytes: &'a [u8], code_len: usize) -> Result<Self> {
        if bytes.len() != bytes_per_row(code_len) {
            return Err(Error::DimensionMismatch {
                expected: bytes_per_row(code_len),
                actual: bytes.len(),
            });
        }
        if !padding_is_clear(bytes, code_len) {
            return Err(Error::InvalidArgument("nonzero padding bits in code row".into()));
        }
        Ok(Self { bytes, code_len })
    }

    pub fn code_len(&self) -> usize {
        self.code_len
    }

    pub fn bytes(&self) -> &'a [u8] {
        self.bytes
    }

    pub fn to_signs(&self) -> Vec<i8> {
        unpack_signs(self.bytes, self.code_len)
    }
}

fn padding_is_clear(row: &[u8], code_len: usize) -> bool {
    let used = code_len % 8;
    used == 0 || row.last().is_none_or(|&b| b >> used == 0)
}

#[inline]
fn popcount_xor(a: &[u8], b: &[u8]) -> u32 {
    let mut total = 0u32;
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in ca.by_ref().zip(cb.by_ref()) {
        let x = u64::from_le_bytes(x.try_into().unwrap());
        let y = u64::from_le_bytes(y.try_into().unwrap());
        total += (x ^ y).count_ones();
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        total += (x ^ y).count_ones();
    }
    total
}

pub fn hamming_distance(a: CodeRef<'_>, b: CodeRef<'_>) -> Result<u32> {
    if a.code_len != b.code_len {
        return Err(Error::DimensionMismatch {
            expected: a.code_len,
            actual: b.code_len,
        });
    }
    Ok(popcount_xor(a.bytes, b.bytes))
}

/// `{-1,+1}` inner product, `K - 2 * hamming`.
pub fn inner_product_codes(a: CodeRef<'_>, b: CodeRef<'_>) -> Result<i32> {
    let h = hamming_distance(a, b)?;
    Ok(a.code_len as i32 - 2 * h as i32)
}

/// `N` packed codes of a common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryCodes {
    n_items: usize,
    code_len: usize,
    bits: Vec<u8>,
}

impl BinaryCodes {
    pub fn with_capacity(code_len: usize, n_items: usize) -> Result<Self> {
        if code_len == 0 {
            return Err(Error::InvalidArgument("code length must be at least 1".into()));
        }
        Ok(Self {
            n_items: 0,
            code_len,
            bits: Vec::with_capacity(n_items * bytes_per_row(code_len)),
        })
    }

    /// Build from already-packed rows, validating length and padding.
    pub fn from_packed(n_items: usize, code_len: usize, bits: Vec<u8>) -> Result<Self> {
        if code_len == 0 {
            return Err(Error::InvalidArgument("code length must be at least 1".into()));
        }
        let row = bytes_per_row(code_len);
        if bits.len() != n_items * row {
            return Err(Error::DimensionMismatch {
                expected: n_items * row,
                actual: bits.len(),
            });
        }
        if !bits.chunks_exact(row).all(|r| padding_is_clear(r, code_len)) {
            return Err(Error::InvalidArgument("nonzero padding bits in code row".into()));
        }
        Ok(Self {
            n_items,
            code_len,
            bits,
        })
    }

    pub fn from_sign_rows<R: AsRef<[i8]>>(code_len: usize, rows: &[R]) -> Result<Self> {
        let mut codes = Self::with_capacity(code_len, rows.len())?;
        for r in rows {
            codes.push_signs(r.as_ref())?;
        }
        Ok(codes)
    }

    pub fn push_signs(&mut self, signs: &[i8]) -> Result<()> {
        if signs.len() != self.code_len {
            return Err(Error::DimensionMismatch {
                expected: self.code_len,
                actual: signs.len(),
            });
        }
        self.bits.extend(pack_signs(signs));
        self.n_items += 1;
        Ok(())
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn code_len(&self) -> usize {
        self.code_len
    }

    pub fn bytes_per_row(&self) -> usize {
        bytes_per_row(self.code_len)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bits
    }

    pub fn row(&self, i: usize) -> CodeRef<'_> {
        let w = self.bytes_per_row();
        CodeRef {
            bytes: &self.bits[i * w..(i + 1) * w],
            code_len: self.code_len,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = CodeRef<'_>> {
        (0..self.n_items).map(|i| self.row(i))
    }
}
