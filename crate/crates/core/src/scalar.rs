use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the formula layer is generic over.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values at all, which no supported type does.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative tolerance never tighter than a few ulps of `T`.
#[inline]
pub(crate) fn floor_tol<T: Scalar>(tol: f64, ulps: f64) -> T {
    let eps = T::epsilon().as_f64() * ulps;
    T::lit(tol.max(eps))
}

/// `(1 - exp(-d r)) / d`, equal to `r` at `d = 0`.
#[inline]
pub fn discount_ratio<T: Scalar>(d: T, r: T) -> T {
    if d == T::zero() {
        r
    } else {
        -(-d * r).exp_m1() / d
    }
}

/// `(exp(k t) - 1) / k`, equal to `t` at `k = 0`.
#[inline]
pub fn growth_ratio<T: Scalar>(k: T, t: T) -> T {
    if k == T::zero() {
        t
    } else {
        (k * t).exp_m1() / k
    }
}

#[inline]
pub(crate) fn complex_finite<T: Scalar>(z: num_complex::Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
