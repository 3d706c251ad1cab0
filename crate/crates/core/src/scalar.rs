//! Scalar abstraction shared by every numeric kernel in the crate.
//!
//! All detectors, objectives and transforms are written against [`Real`],
//! which is implemented for `f32` and `f64`. The `*64` aliases at the crate
//! root pin the double-precision instantiation used by the harness and CLI.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rustfft::FftNum;
use std::fmt::{Debug, Display};
use std::iter::Sum;

pub use num_complex::Complex;

/// Floating-point scalar usable by the detectors.
///
/// `FftNum` pulls in `Signed`, whose `abs`/`signum` collide with the `Float`
/// methods of the same name; call sites use `Float::abs(x)` explicitly.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + FftNum + Default + Display + Debug + Sum + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 constant representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("finite scalar converts to f64")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize representable")
    }
}

impl Real for f64 {
    #[inline]
    fn erfc(self) -> f64 {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erfc(self) -> f32 {
        libm::erfcf(self)
    }
}

/// Squared Euclidean norm of a complex vector.
pub fn norm_sqr<S: Real>(v: &[Complex<S>]) -> S {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Euclidean norm of a complex vector.
pub fn norm<S: Real>(v: &[Complex<S>]) -> S {
    norm_sqr(v).sqrt()
}

/// `‖a − b‖` for complex vectors of equal length.
pub fn dist<S: Real>(a: &[Complex<S>], b: &[Complex<S>]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<S>()
        .sqrt()
}

/// Real inner product `⟨a, b⟩ = Re(aᴴb)`, i.e. the inner product of the
/// real embeddings `(Re a, Im a)` and `(Re b, Im b)`.
pub fn real_dot<S: Real>(a: &[Complex<S>], b: &[Complex<S>]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}
