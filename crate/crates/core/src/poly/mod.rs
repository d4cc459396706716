//! Real vector polynomials `q: ℝ → ℝ^ℓ`, their brackets and fractional parts.
//!
//! Evaluation has three routes:
//!
//! * [`VectorPolynomial::eval`]: Horner's rule in a [`Real`] type, for
//!   arbitrary real arguments.
//! * [`VectorPolynomial::eval_exact`]: exact rational arithmetic, available
//!   when every coefficient carries a rational tag.
//! * [`VectorPolynomial::eval_int`]: 128.128 fixed point at integer
//!   arguments. Rational terms are accumulated exactly over a common
//!   denominator before conversion, so fractional parts land exactly on
//!   `{0, 1/b, …}` when they should. Integer parts are exact `i128` with
//!   overflow reported as an error.

mod coefficient;
mod parse;

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{Float, Zero};

pub use coefficient::{Coefficient, CoefficientTag, Surd};

use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::scalar::{clamp_unit, Real};

/// Distance to the nearest integer below which a real-path bracket is
/// flagged as potentially unstable.
pub const NEAR_INTEGER: f64 = 1.0 / (1u64 << 40) as f64;

/// Rational part of one coordinate over a common denominator.
#[derive(Clone, Debug, PartialEq)]
struct RationalPlan {
    /// `numerators[h] / denominator` is the rational coefficient of `x^h`.
    numerators: Vec<i128>,
    denominator: i128,
}

/// `q(x) = Σ_h a_{j,h} x^h` in each coordinate `j`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorPolynomial {
    degree: usize,
    coeffs: Vec<Vec<Coefficient>>,
    plans: Vec<RationalPlan>,
}

/// Outcome of the exact rationality test for `q_j − q_j(0)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rationality {
    /// Every nonconstant coefficient is rational; `denominator` is their
    /// least common denominator.
    RationalModConstant { denominator: u64 },
    /// Some nonconstant coefficient is tagged irrational.
    Irrational,
    /// Untagged reals present; no verdict is drawn from floating values.
    Indeterminate,
}

impl VectorPolynomial {
    /// Builds from an `ℓ × (d+1)` table; entry `(j, h)` multiplies `x^h` in
    /// coordinate `j`.
    pub fn new(coeffs: Vec<Vec<Coefficient>>) -> Result<Self> {
        let Some(first) = coeffs.first() else {
            return Err(Error::invalid("a vector polynomial needs ℓ ≥ 1"));
        };
        let width = first.len();
        if width == 0 {
            return Err(Error::invalid("coefficient rows must be nonempty"));
        }
        if let Some(bad) = coeffs.iter().find(|row| row.len() != width) {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: bad.len(),
            });
        }
        let plans = coeffs
            .iter()
            .map(|row| rational_plan(row))
            .collect::<Result<_>>()?;
        Ok(VectorPolynomial {
            degree: width - 1,
            coeffs,
            plans,
        })
    }

    /// Builds from ragged rows, padding with zeros to a common degree.
    pub fn from_rows(rows: Vec<Vec<Coefficient>>) -> Result<Self> {
        let width = rows.iter().map(Vec::len).max().unwrap_or(0).max(1);
        let padded = rows
            .into_iter()
            .map(|mut r| {
                r.resize(width, Coefficient::zero());
                r
            })
            .collect();
        Self::new(padded)
    }

    /// The scalar polynomial `Σ c_h x^h`.
    pub fn scalar(coeffs: Vec<Coefficient>) -> Result<Self> {
        Self::new(vec![coeffs])
    }

    /// The zero polynomial into `ℝ^ℓ`.
    pub fn zero(ell: usize) -> Result<Self> {
        Self::new(vec![vec![Coefficient::zero()]; ell])
    }

    /// Parses one literal per coordinate.
    pub fn parse<S: AsRef<str>>(coordinates: &[S]) -> Result<Self> {
        let rows = coordinates
            .iter()
            .map(|text| {
                let terms = parse::parse_coordinate(text.as_ref())?;
                let width = terms.last().map_or(1, |(h, _)| *h as usize + 1);
                let mut row = vec![Coefficient::zero(); width];
                for (h, c) in terms {
                    row[h as usize] = c;
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows)
    }

    pub fn ell(&self) -> usize {
        self.coeffs.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coefficient(&self, j: usize, h: usize) -> &Coefficient {
        &self.coeffs[j][h]
    }

    pub fn coefficients(&self) -> &[Vec<Coefficient>] {
        &self.coeffs
    }

    /// Coordinate `j` as a scalar polynomial.
    pub fn coordinate(&self, j: usize) -> Result<Self> {
        let row = self.coeffs.get(j).ok_or(Error::IndexOutOfRange {
            index: j,
            count: self.ell(),
        })?;
        Self::new(vec![row.clone()])
    }

    /// `−q`.
    pub fn neg(&self) -> Self {
        let rows = self
            .coeffs
            .iter()
            .map(|row| row.iter().map(Coefficient::neg).collect())
            .collect();
        Self::new(rows).expect("same shape")
    }

    /// `q + c` in every coordinate, for a rational constant `c`.
    pub fn shift_constant(&self, c: Ratio<i64>) -> Result<Self> {
        let shift = Coefficient::from_ratio(c);
        let rows = self
            .coeffs
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[0] = row[0].try_add(&shift)?;
                Ok(row)
            })
            .collect::<Result<_>>()?;
        Self::new(rows)
    }

    /// Places `q` at coordinates `offset..offset+ℓ` of an `ℝ^total` valued
    /// polynomial that is zero elsewhere.
    pub fn embed(&self, total: usize, offset: usize) -> Result<Self> {
        if offset + self.ell() > total {
            return Err(Error::DimensionMismatch {
                expected: total,
                found: offset + self.ell(),
            });
        }
        let mut rows = vec![vec![Coefficient::zero(); self.degree + 1]; total];
        for (j, row) in self.coeffs.iter().enumerate() {
            rows[offset + j] = row.clone();
        }
        Self::new(rows)
    }

    /// `q(t)` by Horner's rule on the double values of the coefficients.
    pub fn eval<T: Real>(&self, t: T) -> Vec<T> {
        self.coeffs
            .iter()
            .map(|row| {
                row.iter().rev().fold(T::zero(), |acc, c| {
                    acc * t + T::from_f64(c.value()).expect("f64 converts")
                })
            })
            .collect()
    }

    /// `q(t)` together with a per-coordinate flag set when the value lies
    /// within 2⁻⁴⁰ of an integer, where a floor taken on the real path may
    /// be off by one.
    pub fn eval_audited<T: Real>(&self, t: T) -> (Vec<T>, Vec<bool>) {
        let values = self.eval(t);
        let eps = T::from_f64(NEAR_INTEGER).expect("f64 converts");
        let flags = values.iter().map(|v| (*v - v.round()).abs() < eps).collect();
        (values, flags)
    }

    /// Exact evaluation; `None` unless every coefficient is rational-tagged.
    pub fn eval_exact(&self, t: &BigRational) -> Option<Vec<BigRational>> {
        self.coeffs
            .iter()
            .map(|row| {
                row.iter().rev().try_fold(BigRational::zero(), |acc, c| {
                    let r = c.as_rational()?;
                    let r = BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()));
                    Some(acc * t + r)
                })
            })
            .collect()
    }

    /// `q(n)` in 128.128 fixed point.
    pub fn eval_int(&self, n: i128) -> Result<Vec<Fixed>> {
        (0..self.ell()).map(|j| self.eval_int_coord(j, n)).collect()
    }

    pub fn eval_int_coord(&self, j: usize, n: i128) -> Result<Fixed> {
        let plan = &self.plans[j];
        let row = &self.coeffs[j];
        let mut rational = 0i128;
        let mut real = Fixed::ZERO;
        let mut power = 1i128;
        for (h, c) in row.iter().enumerate() {
            if h > 0 {
                power = power.checked_mul(n).ok_or(Error::Overflow("n^h"))?;
            }
            if c.as_rational().is_some() {
                let term = plan.numerators[h]
                    .checked_mul(power)
                    .ok_or(Error::Overflow("rational term"))?;
                rational = rational
                    .checked_add(term)
                    .ok_or(Error::Overflow("rational term"))?;
            } else {
                real = real.add(c.fixed().mul_int(power)?)?;
            }
        }
        let rational = if plan.denominator == 1 {
            Fixed::from_int(rational)
        } else {
            Fixed::from_ratio(rational, plan.denominator)?
        };
        rational.add(real)
    }

    /// Least common denominator of the rational coefficients of coordinate
    /// `j` (1 if there are none).
    pub fn rational_denominator(&self, j: usize) -> i128 {
        self.plans[j].denominator
    }

    /// `b·(q_j(n) − q_j(0)) mod b` for a rational-mod-constant coordinate
    /// with denominator `b`; the fractional part of `q_j(n) − q_j(0)` is
    /// this residue over `b`. Exact modular arithmetic, valid for all `n`.
    pub fn rational_residue(&self, j: usize, n: i128) -> Result<u64> {
        let b = match self.classify_rational(j) {
            Rationality::RationalModConstant { denominator } => denominator as i128,
            _ => return Err(Error::invalid("coordinate is not rational modulo constants")),
        };
        if b > 1 << 62 {
            return Err(Error::Overflow("rational residue denominator"));
        }
        let nm = n.rem_euclid(b);
        let mut acc = 0i128;
        let mut power = 1i128;
        for h in 1..=self.degree {
            power = (power * nm) % b;
            // integer coefficient of x^h after multiplying by b
            let r = self.coeffs[j][h].as_rational().expect("rational coordinate");
            let c = (*r.numer() as i128) * (b / *r.denom() as i128);
            acc = (acc + c.rem_euclid(b) * power) % b;
        }
        Ok(acc.rem_euclid(b) as u64)
    }

    /// Exact rationality classification of `q_j − q_j(0)` from tags.
    pub fn classify_rational(&self, j: usize) -> Rationality {
        let nonconstant = &self.coeffs[j][1..];
        if nonconstant
            .iter()
            .any(|c| matches!(c.tag(), CoefficientTag::Irrational { .. }))
        {
            return Rationality::Irrational;
        }
        let mut lcm = 1u64;
        for c in nonconstant {
            match c.as_rational() {
                Some(r) => lcm = lcm.lcm(&(*r.denom() as u64)),
                None if c.is_zero() => {}
                None => return Rationality::Indeterminate,
            }
        }
        Rationality::RationalModConstant { denominator: lcm }
    }
}

fn rational_plan(row: &[Coefficient]) -> Result<RationalPlan> {
    let mut denominator = 1i128;
    for c in row {
        if let Some(r) = c.as_rational() {
            denominator = denominator.lcm(&(*r.denom() as i128));
        }
    }
    let numerators = row
        .iter()
        .map(|c| match c.as_rational() {
            Some(r) => (*r.numer() as i128)
                .checked_mul(denominator / *r.denom() as i128)
                .ok_or(Error::Overflow("common denominator")),
            None => Ok(0),
        })
        .collect::<Result<_>>()?;
    Ok(RationalPlan {
        numerators,
        denominator,
    })
}

impl fmt::Display for VectorPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coords: Vec<String> = (0..self.ell()).map(|j| self.literal(j)).collect();
        write!(f, "({})", coords.join(", "))
    }
}

impl VectorPolynomial {
    /// Literal for coordinate `j` in the syntax accepted by [`Self::parse`].
    pub fn literal(&self, j: usize) -> String {
        let mut out = String::new();
        for (h, c) in self.coeffs[j].iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let text = c.to_string();
            let (negative, body) = match text.strip_prefix('-') {
                Some(rest) => (true, rest.to_string()),
                None => (false, text),
            };
            if out.is_empty() {
                if negative {
                    out.push('-');
                }
            } else {
                out.push_str(if negative { " - " } else { " + " });
            }
            out.push_str(&body);
            if h > 0 {
                out.push_str(&format!("*x^{h}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

/// How each coordinate of `q_i(n)` is mapped to an integer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BracketKind {
    Floor,
    Ceil,
    /// `[x] = ⌊x + 1/2⌋`.
    Nearest,
}

impl BracketKind {
    pub fn apply(self, x: Fixed) -> i128 {
        match self {
            BracketKind::Floor => x.floor(),
            BracketKind::Ceil => x.ceil(),
            BracketKind::Nearest => x.round_half_up(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BracketKind::Floor => "floor",
            BracketKind::Ceil => "ceil",
            BracketKind::Nearest => "nearest",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "floor" => Some(BracketKind::Floor),
            "ceil" => Some(BracketKind::Ceil),
            "nearest" => Some(BracketKind::Nearest),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BracketMap {
    kinds: Vec<BracketKind>,
}

impl BracketMap {
    pub fn new(kinds: Vec<BracketKind>) -> Self {
        BracketMap { kinds }
    }

    pub fn uniform(kind: BracketKind, ell: usize) -> Self {
        BracketMap {
            kinds: vec![kind; ell],
        }
    }

    pub fn floor(ell: usize) -> Self {
        Self::uniform(BracketKind::Floor, ell)
    }

    pub fn kinds(&self) -> &[BracketKind] {
        &self.kinds
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Places this map at `offset` inside a map of width `total`, padding
    /// with floors.
    pub fn embed(&self, total: usize, offset: usize) -> Self {
        let mut kinds = vec![BracketKind::Floor; total];
        kinds[offset..offset + self.len()].copy_from_slice(&self.kinds);
        BracketMap { kinds }
    }

    pub fn apply_fixed(&self, x: &[Fixed]) -> Result<Vec<i128>> {
        if x.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: x.len(),
            });
        }
        Ok(x.iter().zip(&self.kinds).map(|(v, k)| k.apply(*v)).collect())
    }
}

/// Maps each coordinate by its bracket kind. The conversion to fixed point
/// is exact, so `⌊x + 1/2⌋` is the true value even where `x + 0.5` would
/// round in floating point.
pub fn bracket<T: Float>(x: &[T], b: &BracketMap) -> Result<Vec<i128>> {
    let fixed = x
        .iter()
        .map(|v| Fixed::from_float(*v))
        .collect::<Result<Vec<_>>>()?;
    b.apply_fixed(&fixed)
}

/// `x − ⌊x⌋` coordinate-wise, in `[0, 1)`.
pub fn fractional<T: Float>(x: &[T]) -> Vec<T> {
    x.iter().map(|v| clamp_unit(*v - v.floor())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn q(text: &[&str]) -> VectorPolynomial {
        VectorPolynomial::parse(text).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_eq!(q(&["sqrt(2)*x"]).eval(1.0), vec![SQRT_2]);
        assert_eq!(q(&["x", "x^2"]).eval(3.0), vec![3.0, 9.0]);
        let p = q(&["1/3*x + 1/7"]);
        let two = BigRational::from_integer(2.into());
        assert_eq!(
            p.eval_exact(&two).unwrap(),
            vec![BigRational::new(17.into(), 21.into())]
        );
        assert!(q(&["sqrt(2)*x"]).eval_exact(&two).is_none());
        assert_eq!(p.eval_int(2).unwrap()[0], Fixed::from_ratio(17, 21).unwrap());
    }

    #[test]
    fn eval_at_zero_is_constant_column() {
        let p = q(&["pi + x^3", "-2/5 - sqrt(3)*x"]);
        assert_eq!(p.eval(0.0), vec![std::f64::consts::PI, -0.4]);
        assert_eq!(p.eval_int(0).unwrap()[0], Coefficient::pi().fixed());
    }

    #[test]
    fn bracket_examples() {
        let floor = BracketMap::floor(2);
        assert_eq!(bracket(&[-1.5, 2.999], &floor).unwrap(), vec![-2, 2]);
        let nearest = BracketMap::uniform(BracketKind::Nearest, 1);
        assert_eq!(bracket(&[2.5], &nearest).unwrap(), vec![3]);
        let ceil = BracketMap::uniform(BracketKind::Ceil, 1);
        assert_eq!(bracket(&[-0.25], &ceil).unwrap(), vec![0]);
        assert!(matches!(
            bracket(&[f64::NAN], &ceil),
            Err(Error::NonFinite)
        ));
        // fl(x + 0.5) rounds up to 1.0 here; the exact bracket does not
        let x = 0.49999999999999994;
        assert_eq!(bracket(&[x], &nearest).unwrap(), vec![0]);
    }

    #[test]
    fn fractional_examples() {
        assert_eq!(fractional(&[3.25]), vec![0.25]);
        assert_eq!(fractional(&[-0.25]), vec![0.75]);
        let f = fractional(&[SQRT_2, -SQRT_2]);
        assert!((f[0] - 0.41421356237309515).abs() < 1e-15);
        assert!((f[1] - 0.5857864376269049).abs() < 1e-15);
        assert!((f[0] + f[1] - 1.0).abs() < 1e-15);
        assert_eq!(fractional(&[-1e-20]), vec![0.0]);
    }

    #[test]
    fn classification() {
        let p = q(&["1/3*x + pi"]);
        assert_eq!(
            p.classify_rational(0),
            Rationality::RationalModConstant { denominator: 3 }
        );
        assert_eq!(q(&["sqrt(2)*x"]).classify_rational(0), Rationality::Irrational);
        assert_eq!(
            q(&["0.3333333333*x"]).classify_rational(0),
            Rationality::Indeterminate
        );
        assert_eq!(
            q(&["0.5 + 3*x"]).classify_rational(0),
            Rationality::RationalModConstant { denominator: 1 }
        );
    }

    #[test]
    fn rational_residues_exact() {
        let p = q(&["1/3*x + 1/7"]);
        for n in -50..50 {
            let r = p.rational_residue(0, n).unwrap();
            let exact = BigRational::new((n - 0).into(), 3.into());
            let frac = &exact - exact.floor();
            assert_eq!(frac, BigRational::new((r as i64).into(), 3.into()));
        }
    }

    #[test]
    fn eval_int_overflow_reported() {
        let p = q(&["x^3"]);
        assert!(p.eval_int(1_000_000).is_ok());
        assert!(matches!(
            p.eval_int(1i128 << 50),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn hazard_flag() {
        let p = q(&["x"]);
        let (_, flags) = p.eval_audited(3.0 + 1e-14);
        assert_eq!(flags, vec![true]);
        let (_, flags) = p.eval_audited(3.25);
        assert_eq!(flags, vec![false]);
    }

    #[test]
    fn literal_round_trip() {
        let p = q(&["-1/2*sqrt(2)*x^2 + 0.25*x - 3", "pi*x^3", "0"]);
        let texts: Vec<String> = (0..p.ell()).map(|j| p.literal(j)).collect();
        assert_eq!(texts[0], "-3 + 0.25*x^1 - 1/2*sqrt(2)*x^2");
        assert_eq!(VectorPolynomial::parse(&texts).unwrap(), p);
    }
}
