//! Weyl sums and fractional-part hit densities `#{n : {q(n)} ∈ [1−δ, 1)}`
//! over integer windows and over primes along `rp + s`.
//!
//! Fractional parts come from [`VectorPolynomial::eval_int_coord`], so the
//! rational part of `q(n)` is exact and tagged irrational coefficients carry
//! 128 fractional bits. The threshold `1 − δ` is a dyadic rational for any
//! double `δ`, so the comparison `{q(n)} ≥ 1 − δ` is exact whenever `q` is
//! rational.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex;

use crate::averaging::PrimeSieve;
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::poly::{Rationality, VectorPolynomial};
use crate::reduce::{try_par_count, try_par_sum_map};
use crate::scalar::{e_fixed, Real};

/// Largest attained-residue set the rational shortcut will enumerate.
pub const MAX_RESIDUE_CLASSES: u64 = 1 << 22;

/// The index set a density is taken over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Enumeration {
    /// `n ∈ [start, end)`.
    Window { start: i128, end: i128 },
    /// `rp + s` for primes `p ≤ n`.
    Primes { n: u64, r: i128, s: i128 },
}

impl fmt::Display for Enumeration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Enumeration::Window { start, end } => write!(f, "[{start}, {end})"),
            Enumeration::Primes { n, r, s } => write!(f, "{r}p+{s}, p <= {n}"),
        }
    }
}

/// How a density was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    /// Decided from the finite set of attained fractional parts; no hits.
    ExactZero,
    /// Counted by enumeration.
    Numeric,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::ExactZero => "exact-zero",
            Verdict::Numeric => "numeric",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityReport {
    pub delta: f64,
    pub enumeration: Enumeration,
    pub hits: u64,
    pub total: u64,
    /// `hits / total`, in `[0, 1]`.
    pub density: f64,
    pub verdict: Verdict,
}

impl DensityReport {
    fn new(delta: f64, enumeration: Enumeration, hits: u64, total: u64, verdict: Verdict) -> Self {
        DensityReport {
            delta,
            enumeration,
            hits,
            total,
            density: hits as f64 / total as f64,
            verdict,
        }
    }
}

fn scalar(q: &VectorPolynomial) -> Result<()> {
    if q.ell() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: q.ell(),
        });
    }
    Ok(())
}

fn window_len(start: i128, end: i128) -> Result<u64> {
    if start >= end {
        return Err(Error::EmptyRange { start, end });
    }
    u64::try_from(end - start).map_err(|_| Error::Overflow("window length"))
}

/// The 128-bit fraction `1 − δ`; `{x} ∈ [1−δ, 1)` iff `frac_bits(x) ≥` it.
fn threshold(delta: f64) -> Result<u128> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} outside (0,1)")));
    }
    Ok(Fixed::ONE.sub(Fixed::from_float(delta)?)?.frac_bits())
}

fn affine(r: i128, s: i128, p: u64) -> Result<i128> {
    r.checked_mul(i128::from(p))
        .and_then(|v| v.checked_add(s))
        .ok_or(Error::Overflow("rp + s"))
}

/// `(1/(N−M)) Σ_{M ≤ n < N} e(q(n))` for a scalar polynomial.
pub fn weyl_sum<T: Real>(q: &VectorPolynomial, start: i128, end: i128) -> Result<Complex<T>> {
    scalar(q)?;
    let len = window_len(start, end)?;
    let sum = try_par_sum_map(len, |k| {
        let v = q.eval_int_coord(0, start + i128::from(k))?;
        Ok(e_fixed::<T>(v.frac_bits()))
    })?;
    Ok(sum / T::from_u64(len).expect("u64 converts"))
}

/// Whether some attained fractional part `{q(0) + res/b}` reaches the
/// threshold. `None` when `q − q(0)` is not known to be rational or the
/// residue set is too large to list.
fn rational_reaches(
    q: &VectorPolynomial,
    thr: u128,
    residues: impl FnOnce(u64) -> Result<Option<BTreeSet<u64>>>,
) -> Result<Option<bool>> {
    let b = match q.classify_rational(0) {
        Rationality::RationalModConstant { denominator } if denominator <= 1 << 62 => denominator,
        _ => return Ok(None),
    };
    let Some(set) = residues(b)? else {
        return Ok(None);
    };
    let q0 = q.eval_int_coord(0, 0)?;
    for res in set {
        let v = q0.add(Fixed::from_ratio(i128::from(res), i128::from(b))?)?;
        if v.frac_bits() >= thr {
            return Ok(Some(true));
        }
    }
    Ok(Some(false))
}

/// Residues `b(q(n) − q(0)) mod b` attained on `[start, end)`; residues
/// depend only on `n mod b`.
fn window_residues(q: &VectorPolynomial, start: i128, len: u64, b: u64) -> Result<Option<BTreeSet<u64>>> {
    let span = len.min(b);
    if span > MAX_RESIDUE_CLASSES {
        return Ok(None);
    }
    (0..span)
        .map(|k| q.rational_residue(0, start + i128::from(k)))
        .collect::<Result<_>>()
        .map(Some)
}

/// Density of `n ∈ [start, end)` with `{q(n)} ∈ [1−δ, 1)`.
pub fn hit_density(q: &VectorPolynomial, delta: f64, start: i128, end: i128) -> Result<DensityReport> {
    scalar(q)?;
    let thr = threshold(delta)?;
    let len = window_len(start, end)?;
    let enumeration = Enumeration::Window { start, end };
    if rational_reaches(q, thr, |b| window_residues(q, start, len, b))? == Some(false) {
        return Ok(DensityReport::new(delta, enumeration, 0, len, Verdict::ExactZero));
    }
    let hits = try_par_count(len, |k| {
        Ok(q.eval_int_coord(0, start + i128::from(k))?.frac_bits() >= thr)
    })?;
    Ok(DensityReport::new(delta, enumeration, hits, len, Verdict::Numeric))
}

/// Density of primes `p ≤ N` with `{q(rp + s)} ∈ [1−δ, 1)`, normalized by
/// `π(N)`.
pub fn hit_density_primes(
    q: &VectorPolynomial,
    delta: f64,
    n: u64,
    r: i128,
    s: i128,
    sieve: &PrimeSieve,
) -> Result<DensityReport> {
    scalar(q)?;
    let thr = threshold(delta)?;
    if n < 2 {
        return Err(Error::invalid(format!("prime density needs N ≥ 2, got {n}")));
    }
    if r < 1 {
        return Err(Error::invalid(format!("prime density needs r ≥ 1, got {r}")));
    }
    let primes = sieve.primes_up_to(n)?;
    let total = primes.len() as u64;
    let enumeration = Enumeration::Primes { n, r, s };
    let residues = |b: u64| -> Result<Option<BTreeSet<u64>>> {
        let mut set = BTreeSet::new();
        for &p in &primes {
            set.insert(q.rational_residue(0, affine(r, s, p)?)?);
            if set.len() as u64 == b {
                break;
            }
            if set.len() as u64 > MAX_RESIDUE_CLASSES {
                return Ok(None);
            }
        }
        Ok(Some(set))
    };
    if rational_reaches(q, thr, residues)? == Some(false) {
        return Ok(DensityReport::new(delta, enumeration, 0, total, Verdict::ExactZero));
    }
    let hits = try_par_count(total, |k| {
        let idx = affine(r, s, primes[k as usize])?;
        Ok(q.eval_int_coord(0, idx)?.frac_bits() >= thr)
    })?;
    Ok(DensityReport::new(delta, enumeration, hits, total, Verdict::Numeric))
}

/// One report per `δ` in a strictly descending grid.
pub fn density_limit_scan(
    q: &VectorPolynomial,
    deltas: &[f64],
    enumeration: Enumeration,
    sieve: Option<&PrimeSieve>,
) -> Result<Vec<DensityReport>> {
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("delta grid must be strictly descending"));
    }
    deltas
        .iter()
        .map(|&delta| match enumeration {
            Enumeration::Window { start, end } => hit_density(q, delta, start, end),
            Enumeration::Primes { n, r, s } => {
                let sieve = sieve.ok_or(Error::SieveUnavailable {
                    requested: n,
                    limit: 0,
                })?;
                hit_density_primes(q, delta, n, r, s, sieve)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::DEFAULT_SIEVE_BUDGET;

    fn poly(text: &str) -> VectorPolynomial {
        VectorPolynomial::parse(&[text]).unwrap()
    }

    #[test]
    fn weyl_trivial() {
        let w: Complex<f64> = weyl_sum(&poly("1/2*x"), 0, 2).unwrap();
        assert!(w.norm() < 1e-15);
        let w: Complex<f64> = weyl_sum(&poly("3*x^2 - x + 4"), -50, 77).unwrap();
        assert_eq!(w, Complex::new(1.0, 0.0));
        assert!(weyl_sum::<f64>(&poly("x"), 3, 3).is_err());
    }

    #[test]
    fn rational_exact_zero() {
        let q = poly("1/3*x + 1/7");
        let rep = hit_density(&q, 0.05, 0, 100_000).unwrap();
        assert_eq!(rep.verdict, Verdict::ExactZero);
        assert_eq!(rep.density, 0.0);
        // 17/21 ≈ 0.8095 is attained
        let rep = hit_density(&q, 0.2, 0, 3000).unwrap();
        assert_eq!(rep.verdict, Verdict::Numeric);
        assert_eq!(rep.hits, 1000);
    }

    #[test]
    fn constant_half() {
        let rep = hit_density(&poly("x + 1/2"), 0.6, 1, 500).unwrap();
        assert_eq!(rep.density, 1.0);
        let rep = hit_density(&poly("x + 1/2"), 0.5, 1, 500).unwrap();
        assert_eq!(rep.density, 1.0);
        let rep = hit_density(&poly("x + 1/2"), 0.49, 1, 500).unwrap();
        assert_eq!(rep.verdict, Verdict::ExactZero);
    }

    #[test]
    fn primes_progression() {
        let sieve = PrimeSieve::build(10_000, DEFAULT_SIEVE_BUDGET).unwrap();
        let q = poly("1/4*x");
        let rep = hit_density_primes(&q, 0.1, 10_000, 2, 1, &sieve).unwrap();
        // p = 2 gives {5/4} = 1/4; every odd p gives 3/4
        assert_eq!(rep.verdict, Verdict::ExactZero);
        let rep = hit_density_primes(&q, 0.3, 10_000, 2, 1, &sieve).unwrap();
        assert_eq!(rep.hits, rep.total - 1);
        let rep = hit_density_primes(&poly("1/3*x + 1/7"), 0.05, 10_000, 1, 0, &sieve).unwrap();
        assert_eq!(rep.verdict, Verdict::ExactZero);
    }

    #[test]
    fn scan_is_monotone() {
        let q = poly("sqrt(2)*x");
        let deltas: Vec<f64> = (1..=6).map(|k| 0.5f64.powi(k)).collect();
        let reps = density_limit_scan(&q, &deltas, Enumeration::Window { start: 1, end: 20_000 }, None).unwrap();
        assert!(reps.windows(2).all(|w| w[1].hits <= w[0].hits));
        assert!(density_limit_scan(&q, &[0.1, 0.2], Enumeration::Window { start: 1, end: 5 }, None).is_err());
        assert!(hit_density(&q, 1.0, 0, 5).is_err());
    }
}
