//! Cesàro and prime averages of sequences, and the approximation errors
//! `avg |α − ψ|` under either scheme.
//!
//! Every average is a fixed-order tree sum (see [`crate::reduce`]), so values
//! do not depend on the number of worker threads.

mod sieve;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

pub use sieve::{PrimeSieve, CACHE_MAGIC, CHECKPOINT_STRIDE, DEFAULT_SIEVE_BUDGET};

use crate::correlate::Sequence;
use crate::error::{Error, Result};
use crate::reduce::try_par_sum_map;
use crate::scalar::Real;

/// The index set and weights of an average.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AveragingScheme {
    /// `1/(N−M) Σ_{M ≤ n < N}`.
    Cesaro { start: i128, end: i128 },
    /// `1/π(N) Σ_{p ≤ N}` at the indices `rp + s`.
    Primes { n: u64, r: i128, s: i128 },
}

impl AveragingScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AveragingScheme::Cesaro { start, end } if start >= end => {
                Err(Error::EmptyRange { start, end })
            }
            AveragingScheme::Primes { n, .. } if n < 2 => {
                Err(Error::invalid(format!("prime average needs N ≥ 2, got {n}")))
            }
            AveragingScheme::Primes { r, .. } if r < 1 => {
                Err(Error::invalid(format!("prime average needs r ≥ 1, got {r}")))
            }
            _ => Ok(()),
        }
    }

    /// Largest integer the scheme needs a sieve for.
    pub fn sieve_limit(&self) -> Option<u64> {
        match self {
            AveragingScheme::Cesaro { .. } => None,
            AveragingScheme::Primes { n, .. } => Some(*n),
        }
    }
}

/// `cesaro:M:N` or `primes:N:r:s`.
impl fmt::Display for AveragingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AveragingScheme::Cesaro { start, end } => write!(f, "cesaro:{start}:{end}"),
            AveragingScheme::Primes { n, r, s } => write!(f, "primes:{n}:{r}:{s}"),
        }
    }
}

impl FromStr for AveragingScheme {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(':').collect();
        let int = |s: &str| {
            s.trim()
                .parse::<i128>()
                .map_err(|_| Error::invalid(format!("`{s}` is not an integer")))
        };
        let scheme = match parts.as_slice() {
            ["cesaro", m, n] => AveragingScheme::Cesaro {
                start: int(m)?,
                end: int(n)?,
            },
            ["primes", n, r, s] => AveragingScheme::Primes {
                n: u64::try_from(int(n)?).map_err(|_| Error::invalid("N must be ≥ 2"))?,
                r: int(r)?,
                s: int(s)?,
            },
            _ => return Err(Error::invalid(format!("unknown averaging scheme `{text}`"))),
        };
        scheme.validate()?;
        Ok(scheme)
    }
}

fn range_len(start: i128, end: i128) -> Result<u64> {
    if start >= end {
        return Err(Error::EmptyRange { start, end });
    }
    u64::try_from(end - start).map_err(|_| Error::Overflow("range length"))
}

fn as_real<T: Real>(v: u64) -> T {
    T::from_u64(v).expect("u64 converts")
}

/// `1/(N−M) Σ_{n=M}^{N−1} seq(n)`.
pub fn cesaro_average<T: Real, S: Sequence<T> + ?Sized>(seq: &S, start: i128, end: i128) -> Result<Complex<T>> {
    let len = range_len(start, end)?;
    let sum = try_par_sum_map(len, |k| seq.at(start + i128::from(k)))?;
    Ok(sum / as_real::<T>(len))
}

/// `1/π(N) Σ_{p ≤ N} seq(rp + s)`.
pub fn prime_average<T: Real, S: Sequence<T> + ?Sized>(
    seq: &S,
    sieve: &PrimeSieve,
    n: u64,
    r: i128,
    s: i128,
) -> Result<Complex<T>> {
    AveragingScheme::Primes { n, r, s }.validate()?;
    let primes = sieve.primes_up_to(n)?;
    let sum = try_par_sum_map(primes.len() as u64, |k| {
        let p = i128::from(primes[k as usize]);
        let idx = r
            .checked_mul(p)
            .and_then(|v| v.checked_add(s))
            .ok_or(Error::Overflow("rp + s"))?;
        seq.at(idx)
    })?;
    Ok(sum / as_real::<T>(primes.len() as u64))
}

/// The average of `seq` under `scheme`. Prime schemes need a sieve
/// covering `N`.
pub fn average<T: Real, S: Sequence<T> + ?Sized>(
    seq: &S,
    scheme: &AveragingScheme,
    sieve: Option<&PrimeSieve>,
) -> Result<Complex<T>> {
    scheme.validate()?;
    match *scheme {
        AveragingScheme::Cesaro { start, end } => cesaro_average(seq, start, end),
        AveragingScheme::Primes { n, r, s } => {
            let sieve = sieve.ok_or(Error::SieveUnavailable {
                requested: n,
                limit: 0,
            })?;
            prime_average(seq, sieve, n, r, s)
        }
    }
}

/// The scheme average of `|α(n) − ψ(n)|`.
pub fn approximation_error<T: Real, A, B>(
    alpha: &A,
    psi: &B,
    scheme: &AveragingScheme,
    sieve: Option<&PrimeSieve>,
) -> Result<T>
where
    A: Sequence<T> + ?Sized,
    B: Sequence<T> + ?Sized,
{
    let gap = |n: i128| -> Result<Complex<T>> {
        Ok(Complex::new((alpha.at(n)? - psi.at(n)?).norm(), T::zero()))
    };
    Ok(average(&gap, scheme, sieve)?.re)
}

/// Approximation error over one window of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowError<T> {
    pub start: i128,
    pub end: i128,
    pub error: T,
}

/// Cesàro errors over the windows `[M, M + length)` for each start `M`.
pub fn window_sweep<T: Real, A, B>(
    alpha: &A,
    psi: &B,
    length: u64,
    starts: &[i128],
) -> Result<Vec<WindowError<T>>>
where
    A: Sequence<T> + ?Sized,
    B: Sequence<T> + ?Sized,
{
    if length == 0 {
        return Err(Error::invalid("window length must be ≥ 1"));
    }
    starts
        .iter()
        .map(|&start| {
            let end = start
                .checked_add(i128::from(length))
                .ok_or(Error::Overflow("window end"))?;
            let scheme = AveragingScheme::Cesaro { start, end };
            Ok(WindowError {
                start,
                end,
                error: approximation_error(alpha, psi, &scheme, None)?,
            })
        })
        .collect()
}

/// The geometric start grid `0, 10^k, …` used by the default sweep:
/// `count` starts spread log-uniformly up to `max_start`.
pub fn sweep_starts(count: usize, max_start: i128) -> Vec<i128> {
    if count <= 1 {
        return vec![0];
    }
    let top = (max_start.max(1) as f64).ln();
    std::iter::once(0)
        .chain((1..count).map(|k| (top * k as f64 / (count - 1) as f64).exp().round() as i128))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::e;
    use num_traits::Zero;

    fn constant(c: f64) -> impl Sequence<f64> {
        move |_: i128| Ok(Complex::new(c, 0.0))
    }

    #[test]
    fn cesaro_examples() {
        assert_eq!(cesaro_average(&constant(0.5), 3, 10).unwrap(), Complex::new(0.5, 0.0));
        let alt = |n: i128| Ok(Complex::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0));
        assert_eq!(cesaro_average(&alt, 0, 1000).unwrap(), Complex::zero());
        assert!(matches!(
            cesaro_average(&alt, 5, 5),
            Err(Error::EmptyRange { .. })
        ));
    }

    #[test]
    fn prime_examples() {
        let sieve = PrimeSieve::build(100, DEFAULT_SIEVE_BUDGET).unwrap();
        let even = |n: i128| Ok(Complex::new(if n % 2 == 0 { 1.0 } else { 0.0 }, 0.0));
        let v: Complex<f64> = prime_average(&even, &sieve, 100, 1, 0).unwrap();
        assert_eq!(v.re, 1.0 / 25.0);
        assert!(matches!(
            prime_average(&even, &sieve, 101, 1, 0),
            Err(Error::SieveUnavailable { .. })
        ));
        let c: Complex<f64> = prime_average(&constant(2.0), &sieve, 100, 3, 1).unwrap();
        assert!((c.re - 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors_and_schemes() {
        let a = |n: i128| Ok(e(n as f64 * 0.1));
        let scheme: AveragingScheme = "cesaro:1:500".parse().unwrap();
        assert_eq!(approximation_error::<f64, _, _>(&a, &a, &scheme, None).unwrap(), 0.0);
        let err = approximation_error::<f64, _, _>(&constant(1.0), &constant(0.0), &scheme, None).unwrap();
        assert_eq!(err, 1.0);
        assert_eq!(scheme.to_string(), "cesaro:1:500");
        let p: AveragingScheme = "primes:1000:2:1".parse().unwrap();
        assert_eq!(p, AveragingScheme::Primes { n: 1000, r: 2, s: 1 });
        assert!("primes:1000:0:1".parse::<AveragingScheme>().is_err());
        assert!("cesaro:5:5".parse::<AveragingScheme>().is_err());
    }

    #[test]
    fn sweep() {
        let starts = sweep_starts(10, 1_000_000_000);
        assert_eq!(starts.len(), 10);
        assert_eq!(starts[0], 0);
        assert_eq!(*starts.last().unwrap(), 1_000_000_000);
        let rows = window_sweep::<f64, _, _>(&constant(1.0), &constant(0.5), 100, &starts[..3]).unwrap();
        assert!(rows.iter().all(|w| w.error == 0.5 && w.end - w.start == 100));
    }
}
