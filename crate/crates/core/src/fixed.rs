//! Signed 128.128 fixed-point arithmetic.
//!
//! A [`Fixed`] holds `int + frac / 2^128` with `int` the floor of the value.
//! It carries the fractional information that double precision loses once
//! arguments such as `√2·n³` reach 10¹⁸: products with integers are exact,
//! and a product of two fixed-point values is truncated toward −∞ by less
//! than 2⁻¹²⁸.

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_traits::{Float, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalar::{clamp_unit, Real};

const LOW: u128 = u64::MAX as u128;
const HALF: u128 = 1 << 127;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed {
    int: i128,
    frac: u128,
}

/// Full 256-bit product of two 128-bit words as `(high, low)`.
pub(crate) fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    let (a1, a0) = (a >> 64, a & LOW);
    let (b1, b0) = (b >> 64, b & LOW);
    let p00 = a0 * b0;
    let p01 = a0 * b1;
    let p10 = a1 * b0;
    let p11 = a1 * b1;
    let mid = (p00 >> 64) + (p01 & LOW) + (p10 & LOW);
    let lo = (p00 & LOW) | (mid << 64);
    let hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    (hi, lo)
}

impl Fixed {
    pub const ZERO: Fixed = Fixed { int: 0, frac: 0 };
    pub const ONE: Fixed = Fixed { int: 1, frac: 0 };
    pub const HALF: Fixed = Fixed { int: 0, frac: HALF };

    pub const fn new(int: i128, frac: u128) -> Self {
        Fixed { int, frac }
    }

    pub const fn from_int(int: i128) -> Self {
        Fixed { int, frac: 0 }
    }

    /// The value `frac / 2^128`.
    pub const fn from_frac(frac: u128) -> Self {
        Fixed { int: 0, frac }
    }

    /// Exact conversion of a binary floating-point value. Bits below 2⁻¹²⁸
    /// are truncated toward −∞.
    pub fn from_float<F: Float>(x: F) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        let (mantissa, exponent, sign) = x.integer_decode();
        let mag = if exponent >= 0 {
            let int = i128::try_from(mantissa)
                .ok()
                .and_then(|m| m.checked_mul(1i128.checked_shl(exponent as u32)?))
                .filter(|_| exponent < 126)
                .ok_or(Error::Overflow("fixed-point conversion"))?;
            Fixed::from_int(int)
        } else {
            let shift = (-exponent) as u32;
            let m = mantissa as u128;
            let int = if shift >= 128 { 0 } else { (m >> shift) as i128 };
            let frac = if shift > 128 {
                let s = shift - 128;
                if s >= 128 {
                    0
                } else {
                    m >> s
                }
            } else if shift == 128 {
                m
            } else {
                m << (128 - shift)
            };
            Fixed { int, frac }
        };
        if sign < 0 {
            mag.checked_neg().ok_or(Error::Overflow("fixed-point conversion"))
        } else {
            Ok(mag)
        }
    }

    /// `floor(num / den · 2^128) / 2^128`, exact to the last bit.
    pub fn from_ratio(num: i128, den: i128) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        let (num, den) = if den < 0 {
            (
                num.checked_neg().ok_or(Error::Overflow("ratio"))?,
                den.checked_neg().ok_or(Error::Overflow("ratio"))?,
            )
        } else {
            (num, den)
        };
        let int = num.div_euclid(den);
        let rem = num.rem_euclid(den) as u128;
        Ok(Fixed {
            int,
            frac: fraction_bits(rem, den as u128),
        })
    }

    /// `floor(value / 2^128)` of a scaled big integer, as a fixed-point value.
    pub fn from_scaled_bigint(scaled: &BigInt) -> Result<Self> {
        let unit = BigInt::from(1u8) << 128;
        let (q, r) = scaled.div_mod_floor(&unit);
        let int = q.to_i128().ok_or(Error::Overflow("fixed-point conversion"))?;
        let frac = r.to_u128().expect("remainder below 2^128");
        Ok(Fixed { int, frac })
    }

    /// `value · 2^128` as a big integer; exact.
    pub fn to_scaled_bigint(self) -> BigInt {
        (BigInt::from(self.int) << 128) + BigInt::from_biguint(Sign::Plus, self.frac.into())
    }

    #[inline]
    pub fn floor(self) -> i128 {
        self.int
    }

    #[inline]
    pub fn ceil(self) -> i128 {
        self.int + i128::from(self.frac != 0)
    }

    /// `⌊x + 1/2⌋`, ties rounded up.
    #[inline]
    pub fn round_half_up(self) -> i128 {
        self.int + i128::from(self.frac >= HALF)
    }

    /// The fractional part as a 128-bit fraction of one.
    #[inline]
    pub fn frac_bits(self) -> u128 {
        self.frac
    }

    #[inline]
    pub fn fract(self) -> Fixed {
        Fixed::from_frac(self.frac)
    }

    pub fn is_integer(self) -> bool {
        self.frac == 0
    }

    /// Fractional part rounded down to the nearest double; always in `[0, 1)`.
    #[inline]
    pub fn frac_f64(self) -> f64 {
        (self.frac >> 75) as f64 * 2f64.powi(-53)
    }

    pub fn frac_to<T: Real>(self) -> T {
        clamp_unit(T::from_f64(self.frac_f64()).expect("f64 converts"))
    }

    /// Fractional part rounded to the nearest `T`, with a result that rounds
    /// up to 1 mapped to 0.
    pub fn frac_nearest<T: Real>(self) -> T {
        clamp_unit(T::from_f64(Fixed::from_frac(self.frac).to_f64()).expect("f64 converts"))
    }

    /// Nearest double, up to ties decided below 2⁻⁶⁴.
    pub fn to_f64(self) -> f64 {
        let tiny = self.int == 0 && self.frac >> 64 == 0;
        if self.int.unsigned_abs() < 1 << 62 && !tiny {
            let wide = (self.int << 64) | (self.frac >> 64) as i128;
            return wide as f64 * 2f64.powi(-64);
        }
        self.int as f64 + self.frac as f64 * 2f64.powi(-128)
    }

    pub fn to_real<T: Real>(self) -> T {
        T::from_f64(self.to_f64()).expect("f64 converts")
    }

    pub fn checked_neg(self) -> Option<Fixed> {
        if self.frac == 0 {
            Some(Fixed::from_int(self.int.checked_neg()?))
        } else {
            Some(Fixed {
                int: self.int.checked_neg()?.checked_sub(1)?,
                frac: self.frac.wrapping_neg(),
            })
        }
    }

    pub fn checked_add(self, other: Fixed) -> Option<Fixed> {
        let (frac, carry) = self.frac.overflowing_add(other.frac);
        let int = self
            .int
            .checked_add(other.int)?
            .checked_add(i128::from(carry))?;
        Some(Fixed { int, frac })
    }

    pub fn checked_sub(self, other: Fixed) -> Option<Fixed> {
        self.checked_add(other.checked_neg()?)
    }

    /// Exact product with an integer.
    pub fn checked_mul_int(self, n: i128) -> Option<Fixed> {
        if n == i128::MIN {
            return None;
        }
        let mag = n.unsigned_abs();
        let (hi, lo) = mul_wide(self.frac, mag);
        let int = self
            .int
            .checked_mul(mag as i128)?
            .checked_add(hi as i128)?;
        let product = Fixed { int, frac: lo };
        if n < 0 {
            product.checked_neg()
        } else {
            Some(product)
        }
    }

    /// Product of two fixed-point values, truncated toward −∞ below 2⁻¹²⁸.
    pub fn checked_mul(self, other: Fixed) -> Option<Fixed> {
        let whole = self.checked_mul_int(other.int)?;
        let cross = Fixed::from_frac(other.frac).checked_mul_int(self.int)?;
        let tail = Fixed::from_frac(mul_wide(self.frac, other.frac).0);
        whole.checked_add(cross)?.checked_add(tail)
    }

    pub fn add(self, other: Fixed) -> Result<Fixed> {
        self.checked_add(other).ok_or(Error::Overflow("fixed-point add"))
    }

    pub fn sub(self, other: Fixed) -> Result<Fixed> {
        self.checked_sub(other)
            .ok_or(Error::Overflow("fixed-point subtract"))
    }

    pub fn mul_int(self, n: i128) -> Result<Fixed> {
        self.checked_mul_int(n)
            .ok_or(Error::Overflow("fixed-point product"))
    }

    pub fn mul(self, other: Fixed) -> Result<Fixed> {
        self.checked_mul(other)
            .ok_or(Error::Overflow("fixed-point product"))
    }

    /// Distance to the nearest integer, as a double.
    pub fn dist_to_integer(self) -> f64 {
        let f = self.frac_f64();
        f.min(1.0 - f)
    }
}

/// `floor(rem · 2^128 / den)` for `rem < den`, by restoring long division.
fn fraction_bits(mut rem: u128, den: u128) -> u128 {
    debug_assert!(rem < den);
    if rem.is_zero() {
        return 0;
    }
    let mut frac = 0u128;
    for _ in 0..128 {
        let overflow = rem >> 127 == 1;
        rem <<= 1;
        frac <<= 1;
        if overflow || rem >= den {
            rem = rem.wrapping_sub(den);
            frac |= 1;
        }
    }
    frac
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(x: Fixed) -> BigInt {
        x.to_scaled_bigint()
    }

    #[test]
    fn float_round_trip() {
        for x in [0.0, 1.5, -1.5, -0.25, 3.25, 2f64.powi(-100), -7.0, 1e20, 0.1] {
            let f = Fixed::from_float(x).unwrap();
            assert_eq!(f.to_f64(), x, "{x}");
        }
        assert_eq!(Fixed::from_float(-1e-300).unwrap().to_f64(), 0.0);
        assert_eq!(Fixed::from_float(-0.25).unwrap(), Fixed::new(-1, 3 << 126));
        assert!(Fixed::from_float(f64::NAN).is_err());
        assert!(Fixed::from_float(1e40).is_err());
    }

    #[test]
    fn ratio_bits() {
        let third = Fixed::from_ratio(1, 3).unwrap();
        assert_eq!(third.frac_bits(), u128::MAX / 3);
        let minus = Fixed::from_ratio(-1, 4).unwrap();
        assert_eq!(minus, Fixed::new(-1, 3 << 126));
        let big_den = Fixed::from_ratio(1, i128::MAX).unwrap();
        assert_eq!(big_den.floor(), 0);
        assert_eq!(big_den.frac_bits(), 2);
    }

    #[test]
    fn brackets() {
        let x = Fixed::from_float(2.5).unwrap();
        assert_eq!((x.floor(), x.ceil(), x.round_half_up()), (2, 3, 3));
        let y = Fixed::from_float(-2.5).unwrap();
        assert_eq!((y.floor(), y.ceil(), y.round_half_up()), (-3, -2, -2));
        let z = Fixed::from_int(4);
        assert_eq!((z.floor(), z.ceil(), z.round_half_up()), (4, 4, 4));
    }

    #[test]
    fn mul_matches_bigint() {
        let a = Fixed::new(-3, 0x1234_5678_9abc_def0_1122_3344_5566_7788);
        let b = Fixed::new(7, 0xfedc_ba98_7654_3210_0f1e_2d3c_4b5a_6978);
        let exact = big(a) * big(b);
        let expected = Fixed::from_scaled_bigint(&(exact >> 128)).unwrap();
        assert_eq!(a.checked_mul(b).unwrap(), expected);
    }

    #[test]
    fn overflow_detected() {
        assert!(Fixed::from_int(i128::MAX).checked_add(Fixed::ONE).is_none());
        assert!(Fixed::from_int(1 << 100).checked_mul_int(1 << 30).is_none());
        assert!(Fixed::ONE.checked_mul_int(i128::MIN).is_none());
    }
}
