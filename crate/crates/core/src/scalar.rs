use std::fmt::{Debug, Display, LowerExp};
use std::str::FromStr;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real floating-point scalar the solver is generic over (`f32` or `f64`).
///
/// Every tolerance in the crate is expressed through [`Real::lit`], so the
/// numerical thresholds are calibrated for `f64`; `f32` is usable for the
/// algebraic pieces (partial fractions, weight conversions, quadrature) and for
/// low-lying spectral parameters.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + LowerExp
    + FromStr
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("index representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub(crate) fn is_finite<T: Real>(z: Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// Square root with `arg ∈ [-π/2, π/2)`, the branch used for `ρ = √λ`.
pub fn sqrt_branch<T: Real>(lambda: Complex<T>) -> Complex<T> {
    let r = lambda.sqrt();
    if r.re == T::zero() && r.im > T::zero() {
        -r
    } else {
        r
    }
}

/// Argument in `[-π, π)`.
pub(crate) fn arg_half_open<T: Real>(z: Complex<T>) -> T {
    let a = z.arg();
    if a >= T::PI() {
        a - T::PI() - T::PI()
    } else {
        a
    }
}
