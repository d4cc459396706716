//! Scalar abstractions shared by every module.
//!
//! Real-valued computations are generic over [`Real`] (`f32` or `f64`).
//! Group arithmetic that only needs a commutative ring with a floor, such as
//! the Heisenberg group law and its coset reduction, is generic over
//! [`Scalar`], which additionally covers exact rationals.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Floating point: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// A commutative ring with an integer floor.
pub trait Scalar: Clone + PartialOrd + Debug + Num + Neg<Output = Self> + Send + Sync {
    fn from_int(n: i128) -> Self;

    /// Largest integer not exceeding `self`.
    fn int_floor(&self) -> Self;

    /// `self - floor(self)`, always in `[0, 1)`.
    fn unit_fract(&self) -> Self {
        self.clone() - self.int_floor()
    }
}

macro_rules! impl_scalar_float {
    ($f:ty) => {
        impl Scalar for $f {
            fn from_int(n: i128) -> Self {
                n as $f
            }

            fn int_floor(&self) -> Self {
                Float::floor(*self)
            }

            fn unit_fract(&self) -> Self {
                clamp_unit(*self - Float::floor(*self))
            }
        }
    };
}

impl_scalar_float!(f32);
impl_scalar_float!(f64);

macro_rules! impl_scalar_ratio {
    ($i:ty) => {
        impl Scalar for Ratio<$i> {
            fn from_int(n: i128) -> Self {
                Ratio::from_integer(<$i>::try_from(n).expect("integer out of range"))
            }

            fn int_floor(&self) -> Self {
                self.floor()
            }
        }
    };
}

impl_scalar_ratio!(i64);
impl_scalar_ratio!(i128);

impl Scalar for BigRational {
    fn from_int(n: i128) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn int_floor(&self) -> Self {
        self.floor()
    }
}

/// Maps a value that should lie in `[0, 1)` but may have rounded up to 1.
///
/// `{-tiny}` evaluates to exactly 1.0 in floating point; the circle point is 0.
#[inline]
pub fn clamp_unit<T: Float>(x: T) -> T {
    if x >= T::one() || x < T::zero() {
        T::zero()
    } else {
        x
    }
}

/// `e(x) = exp(2πix)`.
#[inline]
pub fn e<T: Real>(x: T) -> Complex<T> {
    let theta = T::TAU() * x;
    Complex::new(theta.cos(), theta.sin())
}

/// `e(frac / 2^128)` for a phase held as a 128-bit fraction of a turn.
///
/// The phase is folded into `[-1/2, 1/2)` before conversion so the angle
/// passed to `sin`/`cos` never exceeds π in magnitude.
#[inline]
pub fn e_fixed<T: Real>(frac: u128) -> Complex<T> {
    let signed = frac as i128;
    let turns = (signed >> 75) as f64 * 2f64.powi(-53);
    e(T::from_f64(turns).expect("f64 converts"))
}

/// Circular distance on `ℝ/ℤ`.
#[inline]
pub fn circle_dist<T: Float>(a: T, b: T) -> T {
    let d = (a - b).abs();
    let d = d - d.floor();
    d.min(T::one() - d)
}
