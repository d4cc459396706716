//! Segmented sieve of Eratosthenes with a persistent bitset cache.
//!
//! Cache layout: the magic bytes `NCSV1`, the limit `N` as a little-endian
//! `u64`, then the bitset as little-endian `u64` words, bit `k` of word `w`
//! standing for the integer `64w + k`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const CACHE_MAGIC: &[u8; 5] = b"NCSV1";

/// Default memory budget for the bitset, in bytes.
pub const DEFAULT_SIEVE_BUDGET: u64 = 1 << 30;

/// Spacing of the stored prime-counting checkpoints.
pub const CHECKPOINT_STRIDE: u64 = 1 << 16;

const CHECKPOINT_WORDS: usize = (CHECKPOINT_STRIDE / 64) as usize;

/// Words per sieve segment; segments are sieved in parallel.
const SEGMENT_WORDS: usize = 1 << 12;

/// Primality of every integer in `[0, N]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeSieve {
    limit: u64,
    bits: Vec<u64>,
    /// `checkpoints[k]` is the number of primes below `k · 2^16`.
    checkpoints: Vec<u64>,
}

fn words_for(limit: u64) -> Result<usize> {
    usize::try_from(limit / 64 + 1).map_err(|_| Error::Overflow("sieve size"))
}

fn small_primes(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::new();
    for p in 2..=limit {
        if !composite[p] {
            out.push(p as u64);
            let mut m = p * p;
            while m <= limit {
                composite[m] = true;
                m += p;
            }
        }
    }
    out
}

impl PrimeSieve {
    /// Sieves `[0, limit]`. Fails when the bitset would exceed `budget`
    /// bytes.
    pub fn build(limit: u64, budget: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::invalid(format!("sieve limit {limit} below 2")));
        }
        let bytes = (limit / 64 + 1).saturating_mul(8);
        if bytes > budget {
            return Err(Error::SieveTooLarge {
                requested: limit,
                budget,
            });
        }
        let words = words_for(limit)?;
        let base = small_primes(limit.isqrt());
        let mut bits = vec![0u64; words];
        bits.par_chunks_mut(SEGMENT_WORDS)
            .enumerate()
            .for_each(|(segment, chunk)| {
                let lo = (segment * SEGMENT_WORDS) as u64 * 64;
                let hi = (lo + chunk.len() as u64 * 64).min(limit + 1);
                chunk.fill(u64::MAX);
                for v in lo..lo.max(2).min(hi) {
                    let k = (v - lo) as usize;
                    chunk[k / 64] &= !(1 << (k % 64));
                }
                for v in hi..lo + chunk.len() as u64 * 64 {
                    let k = (v - lo) as usize;
                    chunk[k / 64] &= !(1 << (k % 64));
                }
                for &p in &base {
                    if p * p >= hi {
                        break;
                    }
                    let mut m = (p * p).max(lo.div_ceil(p) * p);
                    while m < hi {
                        let k = (m - lo) as usize;
                        chunk[k / 64] &= !(1 << (k % 64));
                        m += p;
                    }
                }
            });
        Ok(Self::from_bits(limit, bits))
    }

    fn from_bits(limit: u64, bits: Vec<u64>) -> Self {
        let mut checkpoints = Vec::with_capacity(bits.len() / CHECKPOINT_WORDS + 1);
        let mut running = 0u64;
        for (w, word) in bits.iter().enumerate() {
            if w % CHECKPOINT_WORDS == 0 {
                checkpoints.push(running);
            }
            running += u64::from(word.count_ones());
        }
        PrimeSieve {
            limit,
            bits,
            checkpoints,
        }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn covers(&self, n: u64) -> bool {
        n <= self.limit
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n <= self.limit && self.bits[(n / 64) as usize] >> (n % 64) & 1 == 1
    }

    /// `π(n) = |ℙ ∩ [1, n]|` for `n ≤ N`.
    pub fn pi(&self, n: u64) -> Result<u64> {
        self.require(n)?;
        let word = (n / 64) as usize;
        let block = word / CHECKPOINT_WORDS;
        let mut count = self.checkpoints[block];
        for w in &self.bits[block * CHECKPOINT_WORDS..word] {
            count += u64::from(w.count_ones());
        }
        let keep = if n % 64 == 63 {
            u64::MAX
        } else {
            (1u64 << (n % 64 + 1)) - 1
        };
        Ok(count + u64::from((self.bits[word] & keep).count_ones()))
    }

    /// Number of primes up to `N`.
    pub fn count(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// The primes in `[2, n]`, ascending.
    pub fn primes_up_to(&self, n: u64) -> Result<Vec<u64>> {
        self.require(n)?;
        let last = (n / 64) as usize;
        let mut out = Vec::with_capacity(self.pi(n)? as usize);
        for (w, &word) in self.bits[..=last].iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let k = bits.trailing_zeros() as u64;
                let p = w as u64 * 64 + k;
                if p > n {
                    break;
                }
                out.push(p);
                bits &= bits - 1;
            }
        }
        Ok(out)
    }

    fn require(&self, n: u64) -> Result<()> {
        if n <= self.limit {
            Ok(())
        } else {
            Err(Error::SieveUnavailable {
                requested: n,
                limit: self.limit,
            })
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(13 + self.bits.len() * 8);
        bytes.extend_from_slice(CACHE_MAGIC);
        bytes.extend_from_slice(&self.limit.to_le_bytes());
        for w in &self.bits {
            bytes.extend_from_slice(&w.to_le_bytes());
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("partial");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&bytes)?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut file = fs::File::open(path)?;
        let mut header = [0u8; 13];
        file.read_exact(&mut header)
            .map_err(|_| Error::BadCache("truncated header".into()))?;
        if &header[..5] != CACHE_MAGIC {
            return Err(Error::BadCache("magic mismatch".into()));
        }
        let limit = u64::from_le_bytes(header[5..].try_into().expect("8 bytes"));
        if limit < 2 {
            return Err(Error::BadCache(format!("limit {limit} below 2")));
        }
        let words = words_for(limit)?;
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;
        if raw.len() != words * 8 {
            return Err(Error::BadCache(format!(
                "expected {} bitset bytes, found {}",
                words * 8,
                raw.len()
            )));
        }
        let bits = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(Self::from_bits(limit, bits))
    }

    /// Loads the cache at `path` when it covers `limit`; otherwise sieves
    /// and rewrites the cache. An unreadable or foreign cache is replaced.
    pub fn load_or_build(path: &Path, limit: u64, budget: u64) -> Result<Self> {
        if let Ok(sieve) = Self::load(path) {
            if sieve.covers(limit) {
                return Ok(sieve);
            }
        }
        let sieve = Self::build(limit, budget)?;
        sieve.save(path)?;
        Ok(sieve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_limits() {
        let s = PrimeSieve::build(10, DEFAULT_SIEVE_BUDGET).unwrap();
        assert_eq!(s.primes_up_to(10).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(s.pi(10).unwrap(), 4);
        let s = PrimeSieve::build(2, DEFAULT_SIEVE_BUDGET).unwrap();
        assert_eq!(s.primes_up_to(2).unwrap(), vec![2]);
        assert!(PrimeSieve::build(1, DEFAULT_SIEVE_BUDGET).is_err());
        assert!(matches!(
            PrimeSieve::build(1 << 20, 1024),
            Err(Error::SieveTooLarge { .. })
        ));
    }

    #[test]
    fn spans_segments() {
        let n = 3 * SEGMENT_WORDS as u64 * 64 + 17;
        let s = PrimeSieve::build(n, DEFAULT_SIEVE_BUDGET).unwrap();
        let naive = |k: u64| k >= 2 && (2..).take_while(|d| d * d <= k).all(|d| k % d != 0);
        for k in (0..=n).step_by(97).chain(n - 300..=n) {
            assert_eq!(s.is_prime(k), naive(k), "{k}");
        }
        assert_eq!(s.pi(n).unwrap(), s.count());
        assert!(!s.is_prime(n + 1));
    }

    #[test]
    fn cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sieve");
        let s = PrimeSieve::load_or_build(&path, 1000, DEFAULT_SIEVE_BUDGET).unwrap();
        assert_eq!(PrimeSieve::load(&path).unwrap(), s);
        let again = PrimeSieve::load_or_build(&path, 500, DEFAULT_SIEVE_BUDGET).unwrap();
        assert_eq!(again.limit(), 1000);
        fs::write(&path, b"XXXXX\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(PrimeSieve::load(&path), Err(Error::BadCache(_))));
        let rebuilt = PrimeSieve::load_or_build(&path, 100, DEFAULT_SIEVE_BUDGET).unwrap();
        assert_eq!(rebuilt.pi(100).unwrap(), 25);
    }
}
