//! Scalar abstraction for probability and log-likelihood arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the probability and likelihood code:
/// `f32` or `f64`. All model math is written against this trait; `f64` is the
/// default everywhere user-facing (see the aliases at the crate root).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum<Self> + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for literals and RNG draws.
    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Real")
    }

    /// Exact ratio of two counts; zero when the denominator is zero.
    #[inline]
    fn ratio_of(num: usize, den: usize) -> Self {
        if den == 0 {
            Self::zero()
        } else {
            Self::from_usize(num).expect("count fits in Real")
                / Self::from_usize(den).expect("count fits in Real")
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}
