//! Floating point abstraction shared by every numeric module.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the models, factorizations and metrics are generic over.
///
/// Implemented for `f32` and `f64`. `EXACT_DIGITS` is the number of
/// significant decimal digits that round-trips every value of the type
/// through text.
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Sum
    + Send
    + Sync
    + 'static
{
    const EXACT_DIGITS: usize;

    /// Converts an `f64` constant. Every constant used in this crate is
    /// representable (possibly rounded) in both implementations.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal converts to scalar")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Formats with enough digits to parse back to the identical bits.
    fn exact_string(self) -> String {
        format!("{:.*e}", Self::EXACT_DIGITS - 1, self)
    }
}

impl Scalar for f32 {
    const EXACT_DIGITS: usize = 9;
}

impl Scalar for f64 {
    const EXACT_DIGITS: usize = 17;
}

/// `log(sum(exp(xs)))` computed without overflow. Empty input gives `-inf`.
pub fn log_sum_exp<T: Scalar>(xs: impl IntoIterator<Item = T> + Clone) -> T {
    let max = xs
        .clone()
        .into_iter()
        .fold(T::neg_infinity(), |m, x| if x > m { x } else { m });
    if max == T::neg_infinity() {
        return max;
    }
    if max.is_infinite() {
        return max;
    }
    let sum: T = xs.into_iter().map(|x| (x - max).exp()).sum();
    max + sum.ln()
}

pub(crate) fn all_finite<T: Scalar>(xs: &[T]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

pub(crate) fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_string_round_trips() {
        for &x in &[
            0.1f64,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
        ] {
            let back: f64 = x.exact_string().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
        for &x in &[0.1f32, 1.0 / 3.0, -7.5e-30] {
            let back: f32 = x.exact_string().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn log_sum_exp_is_stable() {
        let v = log_sum_exp([-1.0e4f64, -1.0e4 - 1.0]);
        assert!((v - (-1.0e4 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-9);
        assert_eq!(log_sum_exp(Vec::<f64>::new()), f64::NEG_INFINITY);
        assert!((log_sum_exp([0.0f32, 0.0]) - 2f32.ln()).abs() < 1e-6);
    }
}
