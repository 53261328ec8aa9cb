use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;

/// How feature rows are presented to the encoder.
///
/// Unit-norm rows put a Glorot-initialized network deep in the flat region
/// around `z = 0`, where the pairwise loss barely moves at `lr = 1e-3`.
/// `SqrtDim` rescales every row to Euclidean norm `sqrt(D)` (unit RMS entry),
/// which keeps the direction, and so every cosine distance, intact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputScaling {
    None,
    #[default]
    SqrtDim,
}

impl InputScaling {
    pub fn apply<'a>(self, features: &'a FeatureSet) -> Result<Cow<'a, FeatureSet>> {
        match self {
            InputScaling::None => Ok(Cow::Borrowed(features)),
            InputScaling::SqrtDim => {
                let target = (features.dim() as f64).sqrt();
                let norms = features.row_norms()?;
                let mut data = Vec::with_capacity(features.as_slice().len());
                for (row, n) in features.rows().zip(norms) {
                    data.extend(row.iter().map(|v| v * target / n));
                }
                let mut scaled = FeatureSet::new(features.n_items(), features.dim(), data)?;
                if let Some(l) = features.labels() {
                    scaled = scaled.with_labels(l.clone())?;
                }
                Ok(Cow::Owned(scaled))
            }
        }
    }
}

impl fmt::Display for InputScaling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InputScaling::None => "none",
            InputScaling::SqrtDim => "sqrt_dim",
        })
    }
}

impl FromStr for InputScaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InputScaling::None),
            "sqrt_dim" | "sqrt-dim" => Ok(InputScaling::SqrtDim),
            other => Err(Error::InvalidConfig(format!(
                "unknown input scaling {other:?} (expected none or sqrt_dim)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::cosine_distance;

    #[test]
    fn sqrt_dim_rescales_rows_and_keeps_directions() {
        let fs = FeatureSet::from_rows(&[[3.0, 4.0, 0.0, 0.0], [0.0, 0.0, 0.5, 0.0], [1.0, 1.0, 1.0, 1.0]]).unwrap();
        let s = InputScaling::SqrtDim.apply(&fs).unwrap();
        for (i, r) in s.rows().enumerate() {
            let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((n - 2.0).abs() < 1e-12);
            for j in 0..3 {
                let a = cosine_distance(fs.row(i), fs.row(j)).unwrap();
                let b = cosine_distance(r, s.row(j)).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
        assert_eq!(s.row(0), &[1.2, 1.6, 0.0, 0.0]);
        assert!(matches!(InputScaling::None.apply(&fs).unwrap(), Cow::Borrowed(_)));
    }

    #[test]
    fn parse_round_trip() {
        for v in [InputScaling::None, InputScaling::SqrtDim] {
            assert_eq!(v.to_string().parse::<InputScaling>().unwrap(), v);
        }
        assert!("l2".parse::<InputScaling>().is_err());
    }
}
