//! Scalar abstraction for the numerical core.
//!
//! Everything in this crate is generic over [`Scalar`], a floating-point
//! type with enough surface to run the geometry, the integrators and the
//! solvers. `f64` is the working precision for all shipped tolerances;
//! `f32` is supported for callers that trade accuracy for footprint.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar usable throughout the crate.
///
/// Implemented for `f32` and `f64` via the blanket impl below.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, panicking only for types that cannot
    /// represent ordinary finite constants (none of the supported ones).
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant must convert into Scalar")
    }

    /// Conversion from `usize` counts (block counts, node counts).
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize count must convert into Scalar")
    }

    /// `self` as `f64` for reporting and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar must convert into f64")
    }

    /// Machine epsilon of the concrete type.
    #[inline]
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + Sum<T> + Debug + Display + Send + Sync + 'static
{
}

/// `ln(1 + exp(x))` free `log(a) + log1p(exp(b - a))` combination:
/// numerically stable `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        let x: f64 = Scalar::of(2.5);
        assert_eq!(x, 2.5);
        let y: f32 = Scalar::of(0.25);
        assert_eq!(y, 0.25);
        assert_eq!(f64::of_usize(12), 12.0);
    }

    #[test]
    fn log_add_exp_matches_direct_sum() {
        let v = log_add_exp(2.0f64.ln(), 3.0f64.ln());
        assert!((v - 5.0f64.ln()).abs() < 1e-14);
        // Large arguments that would overflow a direct exp.
        let big = log_add_exp(900.0f64, 901.0);
        assert!((big - (901.0 + (1.0 + (-1.0f64).exp()).ln())).abs() < 1e-12);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
    }
}
