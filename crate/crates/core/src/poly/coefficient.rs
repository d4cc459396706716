use std::fmt;

use num_bigint::BigInt;
use num_integer::Roots;
use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, One, Signed, Zero};

use crate::error::{Error, Result};
use crate::fixed::Fixed;

/// `floor(π · 2^256)`.
const PI_SCALED_HEX: &str = "3243f6a8885a308d313198a2e03707344a4093822299f31d0082efa98ec4e6c89";

/// Named irrational constants a coefficient may carry symbolically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Surd {
    /// `√k` for a non-square `k`.
    Sqrt(u64),
    Pi,
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Surd::Sqrt(k) => write!(f, "sqrt({k})"),
            Surd::Pi => f.write_str("pi"),
        }
    }
}

/// Provenance of a coefficient. Rationality questions are answered from the
/// tag alone.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CoefficientTag {
    Rational(Ratio<i64>),
    /// `scale · surd` with a nonzero rational scale.
    Irrational { scale: Ratio<i64>, surd: Surd },
    /// A decimal literal or computed real with no exactness claim.
    Generic,
}

/// A real polynomial coefficient: its double value, a 128.128 fixed-point
/// value for high-precision fractional parts, and its provenance tag.
#[derive(Clone, Debug)]
pub struct Coefficient {
    value: f64,
    fixed: Fixed,
    tag: CoefficientTag,
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        self.tag == other.tag && self.value.to_bits() == other.value.to_bits()
    }
}

impl Coefficient {
    pub fn zero() -> Self {
        Self::integer(0)
    }

    pub fn integer(k: i64) -> Self {
        Self::from_ratio(Ratio::from_integer(k))
    }

    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(Self::from_ratio(Ratio::new(num, den)))
    }

    pub fn from_ratio(r: Ratio<i64>) -> Self {
        let fixed = Fixed::from_ratio(*r.numer() as i128, *r.denom() as i128)
            .expect("nonzero denominator");
        Coefficient {
            value: *r.numer() as f64 / *r.denom() as f64,
            fixed,
            tag: CoefficientTag::Rational(r),
        }
    }

    /// `√k`; rational when `k` is a perfect square.
    pub fn sqrt(k: u64) -> Self {
        Self::scaled_surd(Ratio::one(), Surd::Sqrt(k)).expect("unit scale")
    }

    pub fn pi() -> Self {
        Self::scaled_surd(Ratio::one(), Surd::Pi).expect("unit scale")
    }

    /// `scale · surd`, collapsing to a rational when the product is rational.
    pub fn scaled_surd(scale: Ratio<i64>, surd: Surd) -> Result<Self> {
        if scale.is_zero() {
            return Ok(Self::zero());
        }
        if let Surd::Sqrt(k) = surd {
            let root = k.sqrt();
            if root * root == k {
                let root = i64::try_from(root).map_err(|_| Error::Overflow("sqrt coefficient"))?;
                let r = scale
                    .checked_mul(&Ratio::from_integer(root))
                    .ok_or(Error::Overflow("sqrt coefficient"))?;
                return Ok(Self::from_ratio(r));
            }
        }
        let fixed = surd_fixed(&scale, surd)?;
        Ok(Coefficient {
            value: fixed.to_f64(),
            fixed,
            tag: CoefficientTag::Irrational { scale, surd },
        })
    }

    /// An untagged real.
    pub fn real(x: f64) -> Result<Self> {
        Ok(Coefficient {
            value: x,
            fixed: Fixed::from_float(x)?,
            tag: CoefficientTag::Generic,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn fixed(&self) -> Fixed {
        self.fixed
    }

    pub fn tag(&self) -> &CoefficientTag {
        &self.tag
    }

    pub fn as_rational(&self) -> Option<Ratio<i64>> {
        match self.tag {
            CoefficientTag::Rational(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.tag, CoefficientTag::Rational(r) if r.is_zero())
            || (self.tag == CoefficientTag::Generic && self.value == 0.0)
    }

    /// Symbolic name for irrational tags, e.g. `1/2*sqrt(2)`.
    pub fn name(&self) -> Option<String> {
        match &self.tag {
            CoefficientTag::Irrational { .. } => Some(self.to_string()),
            _ => None,
        }
    }

    /// Product with a rational, keeping the tag class.
    pub fn scale(&self, by: Ratio<i64>) -> Result<Self> {
        match &self.tag {
            CoefficientTag::Rational(r) => Ok(Self::from_ratio(
                r.checked_mul(&by).ok_or(Error::Overflow("coefficient scale"))?,
            )),
            CoefficientTag::Irrational { scale, surd } => Self::scaled_surd(
                scale
                    .checked_mul(&by)
                    .ok_or(Error::Overflow("coefficient scale"))?,
                *surd,
            ),
            CoefficientTag::Generic => {
                Self::real(self.value * (*by.numer() as f64) / (*by.denom() as f64))
            }
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(Ratio::from_integer(-1))
            .expect("negation of an in-range coefficient")
    }

    /// Sum of two coefficients. Defined when both are rational, or when one
    /// is zero; a mixed sum would need a symbolic sum tag.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        if other.is_zero() {
            return Ok(self.clone());
        }
        if self.is_zero() {
            return Ok(other.clone());
        }
        match (&self.tag, &other.tag) {
            (CoefficientTag::Rational(a), CoefficientTag::Rational(b)) => Ok(Self::from_ratio(
                a.checked_add(b).ok_or(Error::Overflow("coefficient sum"))?,
            )),
            (CoefficientTag::Generic, CoefficientTag::Generic) => {
                Self::real(self.value + other.value)
            }
            _ => Err(Error::invalid(format!(
                "cannot combine coefficients {self} and {other} in one term"
            ))),
        }
    }
}

fn surd_fixed(scale: &Ratio<i64>, surd: Surd) -> Result<Fixed> {
    let num = BigInt::from(*scale.numer());
    let den = BigInt::from(*scale.denom());
    let negative = num.is_negative();
    let mag = num.abs();
    // Floor of |scale| · surd · 2^128; the surd is irrational so the exact
    // product is never an integer and the floor of the negation is −floor − 1.
    let floor_mag = match surd {
        Surd::Sqrt(k) => {
            let radicand: BigInt = (&mag * &mag * BigInt::from(k)) << 256u32;
            radicand.sqrt() / &den
        }
        Surd::Pi => {
            let pi = BigInt::parse_bytes(PI_SCALED_HEX.as_bytes(), 16).expect("valid hex");
            (mag * pi) / (den << 128u32)
        }
    };
    let scaled = if negative {
        -floor_mag - BigInt::from(1)
    } else {
        floor_mag
    };
    Fixed::from_scaled_bigint(&scaled)
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.tag {
            CoefficientTag::Rational(r) => write!(f, "{r}"),
            CoefficientTag::Irrational { scale, surd } => {
                if scale.is_one() {
                    write!(f, "{surd}")
                } else if *scale == -Ratio::one() {
                    write!(f, "-{surd}")
                } else {
                    write!(f, "{scale}*{surd}")
                }
            }
            CoefficientTag::Generic => write!(f, "{:?}", self.value),
        }
    }
}

impl Coefficient {
    /// Parses a coefficient literal: `p/q`, an integer, `sqrt(k)`, `pi`, an
    /// optional rational multiplier such as `1/2*sqrt(2)`, or a decimal.
    pub fn parse(text: &str) -> Result<Self> {
        let poly = super::parse::parse_coordinate(text)?;
        match poly.as_slice() {
            [] => Ok(Coefficient::zero()),
            [(0, c)] => Ok(c.clone()),
            _ => Err(Error::Parse {
                column: 1,
                message: format!("`{text}` is not a single coefficient"),
            }),
        }
    }

}
