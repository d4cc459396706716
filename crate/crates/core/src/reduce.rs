//! Reproducible parallel reductions.
//!
//! Index ranges are cut into chunks of [`CHUNK`] consecutive indices. Each
//! chunk is summed pairwise, the chunk sums are collected in index order and
//! summed pairwise again. The tree depends only on the range length, so the
//! result is bit-identical for every worker count.

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;

use crate::error::Result;
use crate::scalar::Real;

/// Indices per leaf chunk.
pub const CHUNK: u64 = 1024;

/// Pairwise (tree) sum in a fixed order.
pub fn pairwise_sum<V: Copy + Zero>(values: &[V]) -> V {
    match values.len() {
        0 => V::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// `Σ_{i < len} f(i)` with the chunked tree order.
pub fn try_par_sum_map<T, F>(len: u64, f: F) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(u64) -> Result<Complex<T>> + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK).min(len);
            let leaf = (c * CHUNK..end).map(&f).collect::<Result<Vec<_>>>()?;
            Ok(pairwise_sum(&leaf))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&partial))
}

/// Infallible form of [`try_par_sum_map`].
pub fn par_sum_map<T, F>(len: u64, f: F) -> Complex<T>
where
    T: Real,
    F: Fn(u64) -> Complex<T> + Sync,
{
    try_par_sum_map(len, |i| Ok(f(i))).expect("infallible")
}

/// Number of `i < len` with `pred(i)`, in parallel.
pub fn try_par_count<F>(len: u64, pred: F) -> Result<u64>
where
    F: Fn(u64) -> Result<bool> + Sync,
{
    let chunks = len.div_ceil(CHUNK * 16);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let end = ((c + 1) * CHUNK * 16).min(len);
            let mut hits = 0u64;
            for i in c * CHUNK * 16..end {
                hits += u64::from(pred(i)?);
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_serial_tree_for_any_pool() {
        let f = |i: u64| Complex::new((i as f64 * 0.37).sin(), 1.0 / (1.0 + i as f64));
        let reference = par_sum_map(100_003, f);
        for threads in [1, 3, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let got = pool.install(|| par_sum_map(100_003, f));
            assert_eq!(got.re.to_bits(), reference.re.to_bits());
            assert_eq!(got.im.to_bits(), reference.im.to_bits());
        }
    }

    #[test]
    fn counts_and_empty() {
        assert_eq!(try_par_count(100_000, |i| Ok(i % 7 == 0)).unwrap(), 14_286);
        assert_eq!(par_sum_map::<f64, _>(0, |_| Complex::new(1.0, 0.0)), Complex::zero());
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }
}
