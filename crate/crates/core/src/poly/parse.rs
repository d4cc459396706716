//! Polynomial literal syntax.
//!
//! One coordinate is a signed sum of terms. A term is a `*`-separated product
//! of factors, each one of
//!
//! * an integer `7` or a fraction `p/q` (exact rational),
//! * a decimal `0.25`, `1e-3` (generic real; no exactness claim),
//! * `sqrt(k)` or `pi` (irrational, at most one per term),
//! * `x` or `x^h` (at most one per term).
//!
//! Terms of equal degree are summed when their coefficients can be combined
//! exactly (both rational, or both generic); otherwise parsing fails.
//! Whitespace is insignificant.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{CheckedMul, One};

use super::coefficient::{Coefficient, Surd};
use crate::error::{Error, Result};

struct Cursor<'a> {
    text: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            text: text.as_bytes(),
            pos: 0,
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            column: self.pos + 1,
            message: message.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.text.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        self.skip_ws();
        if self.text[self.pos..].starts_with(word.as_bytes()) {
            self.pos += word.len();
            true
        } else {
            false
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.text.len() && self.text[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.text[start..self.pos]).expect("ascii")
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let d = self.digits();
        if d.is_empty() {
            return self.error("expected an integer");
        }
        d.parse().or_else(|_| self.error("integer out of range"))
    }
}

enum Numeric {
    Exact(Ratio<i64>),
    Decimal(f64),
}

struct Term {
    numeric: Numeric,
    surd: Option<Surd>,
    power: Option<u32>,
}

fn parse_number(cur: &mut Cursor<'_>) -> Result<Numeric> {
    cur.skip_ws();
    let start = cur.pos;
    cur.digits();
    let mut decimal = false;
    if cur.pos < cur.text.len() && cur.text[cur.pos] == b'.' {
        decimal = true;
        cur.pos += 1;
        cur.digits();
    }
    if cur.pos < cur.text.len() && matches!(cur.text[cur.pos], b'e' | b'E') {
        decimal = true;
        cur.pos += 1;
        if cur.pos < cur.text.len() && matches!(cur.text[cur.pos], b'+' | b'-') {
            cur.pos += 1;
        }
        if cur.digits().is_empty() {
            return cur.error("malformed exponent");
        }
    }
    let lexeme = std::str::from_utf8(&cur.text[start..cur.pos]).expect("ascii");
    if decimal {
        let value: f64 = lexeme
            .parse()
            .or_else(|_| cur.error(format!("malformed decimal `{lexeme}`")))?;
        return Ok(Numeric::Decimal(value));
    }
    let num: i64 = lexeme
        .parse()
        .or_else(|_| cur.error("integer out of range"))?;
    if cur.peek() == Some(b'/') {
        cur.pos += 1;
        let den = cur.integer()?;
        if den == 0 {
            return cur.error("zero denominator");
        }
        let den = i64::try_from(den).or_else(|_| cur.error("denominator out of range"))?;
        return Ok(Numeric::Exact(Ratio::new(num, den)));
    }
    Ok(Numeric::Exact(Ratio::from_integer(num)))
}

fn parse_term(cur: &mut Cursor<'_>, negative: bool) -> Result<Term> {
    let mut term = Term {
        numeric: Numeric::Exact(Ratio::from_integer(if negative { -1 } else { 1 })),
        surd: None,
        power: None,
    };
    loop {
        match cur.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let n = parse_number(cur)?;
                term.numeric = match (term.numeric, n) {
                    (Numeric::Exact(a), Numeric::Exact(b)) => Numeric::Exact(
                        a.checked_mul(&b)
                            .map_or_else(|| cur.error("coefficient overflow"), Ok)?,
                    ),
                    (Numeric::Exact(a), Numeric::Decimal(b))
                    | (Numeric::Decimal(b), Numeric::Exact(a)) => {
                        Numeric::Decimal(b * (*a.numer() as f64) / (*a.denom() as f64))
                    }
                    (Numeric::Decimal(a), Numeric::Decimal(b)) => Numeric::Decimal(a * b),
                };
            }
            Some(b's') => {
                if !cur.eat_word("sqrt") || !cur.eat(b'(') {
                    return cur.error("expected `sqrt(k)`");
                }
                let k = cur.integer()?;
                if !cur.eat(b')') {
                    return cur.error("expected `)`");
                }
                if term.surd.replace(Surd::Sqrt(k)).is_some() {
                    return cur.error("at most one irrational factor per term");
                }
            }
            Some(b'p') => {
                if !cur.eat_word("pi") {
                    return cur.error("unknown identifier");
                }
                if term.surd.replace(Surd::Pi).is_some() {
                    return cur.error("at most one irrational factor per term");
                }
            }
            Some(b'x') => {
                cur.pos += 1;
                let h = if cur.eat(b'^') {
                    u32::try_from(cur.integer()?).or_else(|_| cur.error("degree out of range"))?
                } else {
                    1
                };
                if term.power.replace(h).is_some() {
                    return cur.error("at most one power of x per term");
                }
            }
            Some(_) => return cur.error("unexpected character"),
            None => return cur.error("unexpected end of input"),
        }
        if !cur.eat(b'*') {
            return Ok(term);
        }
    }
}

fn term_coefficient(term: Term) -> Result<Coefficient> {
    match (term.numeric, term.surd) {
        (Numeric::Exact(r), None) => Ok(Coefficient::from_ratio(r)),
        (Numeric::Exact(r), Some(s)) => Coefficient::scaled_surd(r, s),
        (Numeric::Decimal(v), None) => Coefficient::real(v),
        (Numeric::Decimal(v), Some(s)) => {
            Coefficient::real(v * Coefficient::scaled_surd(Ratio::one(), s)?.value())
        }
    }
}

/// Parses one coordinate into `(degree, coefficient)` pairs, ascending by
/// degree, zero coefficients dropped.
pub(crate) fn parse_coordinate(text: &str) -> Result<Vec<(u32, Coefficient)>> {
    let mut cur = Cursor::new(text);
    let mut terms: BTreeMap<u32, Coefficient> = BTreeMap::new();
    if cur.peek().is_none() {
        return cur.error("empty polynomial");
    }
    let mut first = true;
    loop {
        let negative = if cur.eat(b'-') {
            true
        } else if cur.eat(b'+') {
            false
        } else if first {
            false
        } else {
            return cur.error("expected `+` or `-`");
        };
        first = false;
        let column = cur.pos + 1;
        let term = parse_term(&mut cur, negative)?;
        let degree = term.power.unwrap_or(0);
        let coefficient = term_coefficient(term)?;
        let combined = match terms.get(&degree) {
            Some(prev) => prev.try_add(&coefficient).map_err(|e| Error::Parse {
                column,
                message: e.to_string(),
            })?,
            None => coefficient,
        };
        terms.insert(degree, combined);
        if cur.peek().is_none() {
            break;
        }
    }
    Ok(terms.into_iter().filter(|(_, c)| !c.is_zero()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terms_and_signs() {
        let t = parse_coordinate("1/3*x + 1/7").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].1.as_rational(), Some(Ratio::new(1, 7)));
        assert_eq!(t[1], (1, Coefficient::rational(1, 3).unwrap()));

        let t = parse_coordinate("-sqrt(2)*x^2 - x + 3").unwrap();
        assert_eq!(t[0].1.as_rational(), Some(Ratio::from_integer(3)));
        assert_eq!(t[1].1.as_rational(), Some(Ratio::from_integer(-1)));
        assert_eq!(t[2].1.to_string(), "-sqrt(2)");
    }

    #[test]
    fn combines_rationals_only() {
        let t = parse_coordinate("x/1").unwrap_err();
        assert!(matches!(t, Error::Parse { .. }));
        let t = parse_coordinate("1/2*x + 1/3*x").unwrap();
        assert_eq!(t[0].1.as_rational(), Some(Ratio::new(5, 6)));
        assert!(parse_coordinate("sqrt(2)*x + x").is_err());
        assert!(parse_coordinate("x - x").unwrap().is_empty());
    }

    #[test]
    fn error_columns() {
        match parse_coordinate("x + y") {
            Err(Error::Parse { column, .. }) => assert_eq!(column, 5),
            other => panic!("{other:?}"),
        }
        assert!(parse_coordinate("").is_err());
        assert!(parse_coordinate("1/0*x").is_err());
        assert!(parse_coordinate("x^2*x").is_err());
        assert!(parse_coordinate("sqrt(2)*pi").is_err());
    }

    #[test]
    fn decimals_are_generic() {
        let t = parse_coordinate("0.3333333333*x").unwrap();
        assert_eq!(*t[0].1.tag(), super::super::CoefficientTag::Generic);
        let t = parse_coordinate("2.5*sqrt(2)").unwrap();
        assert_eq!(*t[0].1.tag(), super::super::CoefficientTag::Generic);
    }
}
