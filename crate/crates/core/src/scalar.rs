//! Real scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the simulator is instantiated over: `f32` or `f64`.
///
/// Besides the usual arithmetic, each type carries the two tolerances used by
/// validating constructors. They are scaled to the precision of the type, so
/// `f64` checks unitarity to `1e-12` while `f32` settles for `1e-5`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Tolerance for direct linear algebra: norms, unitarity, single products.
    fn linalg_tol() -> Self;

    /// Tolerance for quantities produced by a chain of operations.
    fn derived_tol() -> Self;

    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Real for f64 {
    fn linalg_tol() -> Self {
        1e-12
    }

    fn derived_tol() -> Self {
        1e-10
    }
}

impl Real for f32 {
    fn linalg_tol() -> Self {
        1e-5
    }

    fn derived_tol() -> Self {
        1e-4
    }
}

/// Complex amplitude over a [`Real`] scalar.
pub type Amplitude<T> = Complex<T>;

#[cfg(test)]
pub(crate) fn c<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub(crate) fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub(crate) fn cis<T: Real>(phase: T) -> Complex<T> {
    Complex::new(phase.cos(), phase.sin())
}

#[inline]
pub(crate) fn is_finite<T: Real>(z: &Complex<T>) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
