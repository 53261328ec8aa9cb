use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairwise similarity label in `{+1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Sign::Pos),
            -1 => Some(Sign::Neg),
            _ => None,
        }
    }

    pub fn from_bool(similar: bool) -> Self {
        if similar {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }
}

/// A labeled unordered pair, stored with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PairLabel {
    pub i: usize,
    pub j: usize,
    pub s: Sign,
}

impl PairLabel {
    /// Normalizes the order so that `i < j`; self-pairs are rejected.
    pub fn new(a: usize, b: usize, s: Sign) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidArgument(format!("self-pair ({a}, {a})")));
        }
        Ok(Self {
            i: a.min(b),
            j: a.max(b),
            s,
        })
    }
}

/// Checks the shared pair-list invariants: `i < j < n_items`, no duplicates.
/// The list must already be sorted by `(i, j)`.
pub(crate) fn validate_sorted_pairs(pairs: &[PairLabel], n_items: usize) -> Result<()> {
    for (k, p) in pairs.iter().enumerate() {
        if p.i >= p.j || p.j >= n_items {
            return Err(Error::InvalidArgument(format!(
                "pair {k} = ({}, {}) violates i < j < {n_items}",
                p.i, p.j
            )));
        }
        if k > 0 && (pairs[k - 1].i, pairs[k - 1].j) >= (p.i, p.j) {
            return Err(Error::InvalidArgument(format!(
                "pair {k} = ({}, {}) is duplicated or out of order",
                p.i, p.j
            )));
        }
    }
    Ok(())
}
