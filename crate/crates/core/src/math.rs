//! Scalar and vector kernels shared by every stage.

use crate::error::{Error, Result};

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// `1 - cos(u, v)`, in `[0, 2]`.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            actual: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::DegenerateVector);
    }
    Ok(cosine_distance_prenormed(u, v, nu, nv))
}

/// Cosine distance with the norms already known (both nonzero).
#[inline]
pub(crate) fn cosine_distance_prenormed(u: &[f64], v: &[f64], nu: f64, nv: f64) -> f64 {
    let c = dot(u, v) / (nu * nv);
    (1.0 - c).clamp(0.0, 2.0)
}

/// Logistic sigmoid, evaluated without overflow for any finite input.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)`, stable on both tails.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Sign binarization with `sign(0) = +1`.
pub fn sign_binarize(v: &[f64]) -> Vec<i8> {
    v.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_distance_examples() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn cosine_distance_rejects_zero_vector() {
        let err = cosine_distance(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err.to_string(), "degenerate feature vector");
        assert!(matches!(
            cosine_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid(0.0), 0.5);
        for x in [40.0, 100.0, 1e6, f64::MAX] {
            assert!((1.0 - sigmoid(x)).abs() < 1e-12);
            assert!(sigmoid(-x) >= 0.0);
        }
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for i in -200..=200 {
            let x = i as f64 * 0.1;
            let naive = (1.0 + x.exp()).ln();
            assert!((softplus(x) - naive).abs() < 1e-12, "x={x}");
        }
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0);
    }

    #[test]
    fn sign_binarize_examples() {
        assert_eq!(sign_binarize(&[0.3, -0.2, 0.0]), vec![1, -1, 1]);
        assert_eq!(sign_binarize(&[-1.0, -0.5, -1e-300]), vec![-1, -1, -1]);
        let v = [0.7, -0.1, 0.0, 2.5];
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let (a, b) = (sign_binarize(&v), sign_binarize(&neg));
        for k in 0..v.len() {
            if v[k] != 0.0 {
                assert_eq!(a[k], -b[k]);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn sigmoid_is_monotone_and_symmetric(x in -500.0f64..500.0, dx in 0.0f64..10.0) {
            proptest::prop_assert!(sigmoid(x + dx) >= sigmoid(x));
            proptest::prop_assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
        }

        #[test]
        fn cosine_distance_is_scale_invariant(
            u in proptest::collection::vec(-10.0f64..10.0, 5),
            v in proptest::collection::vec(-10.0f64..10.0, 5),
            c in 0.01f64..100.0,
        ) {
            proptest::prop_assume!(norm(&u) > 1e-3 && norm(&v) > 1e-3);
            let scaled: Vec<f64> = u.iter().map(|x| x * c).collect();
            let d0 = cosine_distance(&u, &v).unwrap();
            let d1 = cosine_distance(&scaled, &v).unwrap();
            proptest::prop_assert!((d0 - d1).abs() < 1e-12);
            proptest::prop_assert!(cosine_distance(&u, &u).unwrap().abs() < 1e-12);
            proptest::prop_assert!((0.0..=2.0).contains(&d0));
        }
    }
}
