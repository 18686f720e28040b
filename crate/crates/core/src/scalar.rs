//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the simulator can run on.
///
/// Implemented for `f32` and `f64`. Constants are written as `F::lit(1e-5)`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + FromStr + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    fn lit(value: f64) -> Self;

    /// Lossy widening used when handing values to `f64`-only helpers.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    #[inline]
    fn lit(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn lit(value: f64) -> Self {
        value
    }
}

/// Arithmetic mean; `None` on an empty iterator.
pub(crate) fn mean<F: Scalar>(values: impl IntoIterator<Item = F>) -> Option<F> {
    let mut n = 0usize;
    let mut acc = F::zero();
    for v in values {
        acc = acc + v;
        n += 1;
    }
    if n == 0 {
        None
    } else {
        Some(acc / F::from_usize(n)?)
    }
}
