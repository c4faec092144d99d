//! Scalar abstractions.
//!
//! Feature weights, solver state and decision values are generic over
//! [`Scalar`] (implemented for `f32` and `f64`). Evaluation metrics are
//! generic over the weaker [`MetricScalar`], which is also implemented for
//! exact rationals so that metric identities can be checked without rounding.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Num};

/// Floating point type used for features, weights and solver arithmetic.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Name written into model files.
    const NAME: &'static str;

    fn from_f64_lossy(value: f64) -> Self;

    fn to_f64_lossless(self) -> f64;
}

impl Scalar for f32 {
    const NAME: &'static str = "f32";

    fn from_f64_lossy(value: f64) -> Self {
        value as f32
    }

    fn to_f64_lossless(self) -> f64 {
        f64::from(self)
    }
}

impl Scalar for f64 {
    const NAME: &'static str = "f64";

    fn from_f64_lossy(value: f64) -> Self {
        value
    }

    fn to_f64_lossless(self) -> f64 {
        self
    }
}

/// Shorthand for lifting an `f64` literal into `F`.
#[inline]
pub(crate) fn lit<F: Scalar>(value: f64) -> F {
    F::from_f64_lossy(value)
}

/// Number type for precision/recall/F1 arithmetic.
pub trait MetricScalar: Num + Clone + PartialOrd + Debug {
    fn from_count(count: u64) -> Self;

    fn to_f64(&self) -> f64;
}

impl MetricScalar for f32 {
    fn from_count(count: u64) -> Self {
        count as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }
}

impl MetricScalar for f64 {
    fn from_count(count: u64) -> Self {
        count as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl MetricScalar for Ratio<i64> {
    fn from_count(count: u64) -> Self {
        Ratio::from_integer(i64::try_from(count).expect("count exceeds i64 range"))
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}
