//! The k-th divisor function: single points, bulk sieving and exact moments.
//!
//! `τ_k(n)` counts ordered factorizations `n = n_1 ⋯ n_k`. It is multiplicative
//! with `τ_k(p^α) = binom(α + k - 1, k - 1)`, which is all the sieve uses: each
//! segment strips prime powers `p^α` for every `p ≤ √hi` and multiplies in the
//! corresponding binomial factor. Whatever is left after stripping is a single
//! prime and contributes a factor `k`.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::arith::{binomial, factorize, primes_up_to};
use crate::error::{invalid, Error, Result};

/// Default entries per sieve segment.
pub const DEFAULT_SEGMENT_LEN: usize = 1 << 22;

/// Default cap on materialized table length (1 GiB of 64-bit entries).
pub const DEFAULT_BUDGET_ENTRIES: u64 = 1 << 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveConfig {
    /// Entries per segment; segments are sieved independently.
    pub segment_len: usize,
    /// Maximum number of entries a materialized [`DivisorTable`] may hold.
    pub budget_entries: u64,
}

impl Default for SieveConfig {
    fn default() -> Self {
        SieveConfig {
            segment_len: DEFAULT_SEGMENT_LEN,
            budget_entries: DEFAULT_BUDGET_ENTRIES,
        }
    }
}

impl SieveConfig {
    /// Budget expressed in megabytes of 64-bit entries.
    pub fn with_budget_mb(mut self, mb: u64) -> Self {
        self.budget_entries = mb.saturating_mul(1 << 20) / 8;
        self
    }
}

/// Exact values of `τ_k` on `[lo, hi]` with first and second moments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTable {
    k: u32,
    lo: u64,
    hi: u64,
    values: Vec<u64>,
    sum1: u128,
    sum2: u128,
}

impl DivisorTable {
    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn lo(&self) -> u64 {
        self.lo
    }

    pub fn hi(&self) -> u64 {
        self.hi
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    /// `Σ τ_k(n)` over the table range.
    pub fn sum1(&self) -> u128 {
        self.sum1
    }

    /// `Σ τ_k(n)²` over the table range.
    pub fn sum2(&self) -> u128 {
        self.sum2
    }

    /// `τ_k(n)` if `n` lies in the table.
    pub fn get(&self, n: u64) -> Option<u64> {
        if n < self.lo || n > self.hi {
            return None;
        }
        Some(self.values[(n - self.lo) as usize])
    }

    /// Whether the table holds `τ_k` on all of `[1, n]`.
    pub fn covers_prefix(&self, k: u32, n: u64) -> bool {
        self.k == k && self.lo == 1 && self.hi >= n
    }

    fn from_values(k: u32, lo: u64, values: Vec<u64>) -> Self {
        let hi = lo + values.len() as u64 - 1;
        let (sum1, sum2) = moments(&values);
        DivisorTable {
            k,
            lo,
            hi,
            values,
            sum1,
            sum2,
        }
    }

    /// Writes the little-endian dump: `k`, `lo`, `hi` as u64, then one u64 per entry.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.k as u64).to_le_bytes())?;
        w.write_all(&self.lo.to_le_bytes())?;
        w.write_all(&self.hi.to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a dump produced by [`DivisorTable::write_dump`].
    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let k = next(&mut r)?;
        let lo = next(&mut r)?;
        let hi = next(&mut r)?;
        if k < 2 || k > u32::MAX as u64 || lo < 1 || hi < lo {
            return Err(invalid(format!("corrupt dump header k={k} lo={lo} hi={hi}")));
        }
        let len = hi - lo + 1;
        let mut values = Vec::with_capacity(len as usize);
        for _ in 0..len {
            values.push(next(&mut r)?);
        }
        Ok(DivisorTable::from_values(k as u32, lo, values))
    }
}

fn moments(values: &[u64]) -> (u128, u128) {
    values.iter().fold((0u128, 0u128), |(s1, s2), &v| {
        let v = v as u128;
        (s1 + v, s2 + v * v)
    })
}

fn check_k(k: u32) -> Result<()> {
    if k < 2 {
        return Err(invalid(format!("divisor order k must be >= 2, got {k}")));
    }
    Ok(())
}

/// `τ_k(n)` from the prime factorization of `n`.
pub fn tau_k_point(k: u32, n: u64) -> Result<u64> {
    check_k(k)?;
    if n < 1 {
        return Err(invalid("n must be >= 1"));
    }
    let mut acc: u64 = 1;
    for (_, alpha) in factorize(n) {
        let factor = binomial(alpha as u64 + k as u64 - 1, k as u64 - 1)
            .and_then(|b| u64::try_from(b).ok())
            .ok_or(Error::Overflow("tau_k_point"))?;
        acc = acc.checked_mul(factor).ok_or(Error::Overflow("tau_k_point"))?;
    }
    Ok(acc)
}

/// Prime-power factors `binom(α + k - 1, k - 1)` for `α = 0..=64`; `None` marks overflow.
fn prime_power_factors(k: u32) -> Vec<Option<u64>> {
    (0..=64u64)
        .map(|alpha| {
            binomial(alpha + k as u64 - 1, k as u64 - 1).and_then(|b| u64::try_from(b).ok())
        })
        .collect()
}

struct SegmentSieve {
    k: u32,
    primes: Vec<u64>,
    factors: Vec<Option<u64>>,
}

impl SegmentSieve {
    fn new(k: u32, hi: u64) -> Self {
        let root = (hi as f64).sqrt() as u64 + 1;
        SegmentSieve {
            k,
            primes: primes_up_to(root),
            factors: prime_power_factors(k),
        }
    }

    /// `τ_k` on `[lo, lo + len)`.
    fn run(&self, lo: u64, len: usize) -> Result<Vec<u64>> {
        let hi = lo + len as u64 - 1;
        let mut rest: Vec<u64> = (lo..=hi).collect();
        let mut tau = vec![1u64; len];
        for &p in &self.primes {
            if p * p > hi {
                break;
            }
            let first = lo.div_ceil(p) * p;
            let mut idx = (first - lo) as usize;
            while idx < len {
                let mut alpha = 0usize;
                let mut m = rest[idx];
                while m % p == 0 {
                    m /= p;
                    alpha += 1;
                }
                rest[idx] = m;
                let f = self.factors[alpha].ok_or(Error::Overflow("sieve_tau_k"))?;
                tau[idx] = tau[idx]
                    .checked_mul(f)
                    .ok_or(Error::Overflow("sieve_tau_k"))?;
                idx += p as usize;
            }
        }
        let k = self.k as u64;
        for (t, &m) in tau.iter_mut().zip(&rest) {
            if m > 1 {
                *t = t.checked_mul(k).ok_or(Error::Overflow("sieve_tau_k"))?;
            }
        }
        Ok(tau)
    }
}

fn segments(lo: u64, hi: u64, segment_len: usize) -> Vec<(u64, usize)> {
    let step = segment_len.max(1) as u64;
    let mut out = Vec::new();
    let mut start = lo;
    while start <= hi {
        let end = (start + step - 1).min(hi);
        out.push((start, (end - start + 1) as usize));
        start = end + 1;
    }
    out
}

fn check_range(lo: u64, hi: u64) -> Result<()> {
    if lo < 1 || hi < lo {
        return Err(invalid(format!("need 1 <= lo <= hi, got lo={lo} hi={hi}")));
    }
    Ok(())
}

/// Materializes `τ_k` on `[lo, hi]`, sieving segments in parallel.
pub fn sieve_tau_k(k: u32, lo: u64, hi: u64, cfg: &SieveConfig) -> Result<DivisorTable> {
    check_k(k)?;
    check_range(lo, hi)?;
    let len = hi - lo + 1;
    if len > cfg.budget_entries {
        return Err(Error::ResourceLimit {
            what: "divisor table",
            required: len,
            budget: cfg.budget_entries,
        });
    }
    let sieve = SegmentSieve::new(k, hi);
    let parts: Vec<Vec<u64>> = segments(lo, hi, cfg.segment_len)
        .into_par_iter()
        .map(|(start, n)| sieve.run(start, n))
        .collect::<Result<_>>()?;
    let values = parts.concat();
    Ok(DivisorTable::from_values(k, lo, values))
}

/// Streams `τ_k` on `[lo, hi]` segment by segment, in increasing order.
///
/// The callback receives the first integer of the segment and its values.
pub fn for_each_segment<F>(k: u32, lo: u64, hi: u64, cfg: &SieveConfig, mut f: F) -> Result<()>
where
    F: FnMut(u64, &[u64]),
{
    check_k(k)?;
    check_range(lo, hi)?;
    let sieve = SegmentSieve::new(k, hi);
    for (start, n) in segments(lo, hi, cfg.segment_len) {
        let values = sieve.run(start, n)?;
        f(start, &values);
    }
    Ok(())
}

/// `Σ_{n ≤ x} τ_k(n)`, exact.
pub fn partial_sum_tau(k: u32, x: u64, cfg: &SieveConfig) -> Result<u128> {
    if x < 1 {
        return Err(invalid("X must be >= 1"));
    }
    let mut total = 0u128;
    for_each_segment(k, 1, x, cfg, |_, vals| {
        total += vals.iter().map(|&v| v as u128).sum::<u128>();
    })?;
    Ok(total)
}

/// `Σ_{n ≤ x} τ_k(n)²`, exact.
pub fn square_moment_tau(k: u32, x: u64, cfg: &SieveConfig) -> Result<u128> {
    if x < 1 {
        return Err(invalid("X must be >= 1"));
    }
    let mut total = 0u128;
    for_each_segment(k, 1, x, cfg, |_, vals| {
        total += moments(vals).1;
    })?;
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn divisor_count_brute(n: u64) -> u64 {
        (1..=n).filter(|d| n % d == 0).count() as u64
    }

    // τ_k by recursion over the first factor: τ_k(n) = Σ_{d | n} τ_{k-1}(n / d).
    fn tau_k_brute(k: u32, n: u64) -> u64 {
        if k == 1 {
            return 1;
        }
        (1..=n)
            .filter(|d| n % d == 0)
            .map(|d| tau_k_brute(k - 1, n / d))
            .sum()
    }

    #[test]
    fn point_examples() {
        assert_eq!(tau_k_point(2, 1).unwrap(), 1);
        assert_eq!(tau_k_point(3, 4).unwrap(), 6);
        assert_eq!(tau_k_point(2, 12).unwrap(), 6);
        assert_eq!(divisor_count_brute(12), 6);
        assert_eq!(tau_k_brute(3, 4), 6);
    }

    #[test]
    fn point_rejects_bad_arguments() {
        assert!(matches!(tau_k_point(1, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(tau_k_point(2, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sieve_examples() {
        let cfg = SieveConfig::default();
        let t = sieve_tau_k(2, 1, 6, &cfg).unwrap();
        assert_eq!(t.values(), &[1, 2, 2, 3, 2, 4]);
        let t = sieve_tau_k(4, 8, 8, &cfg).unwrap();
        assert_eq!(t.values(), &[20]);
        let t = sieve_tau_k(3, 1, 1, &cfg).unwrap();
        assert_eq!((t.values(), t.sum1(), t.sum2()), (&[1u64][..], 1, 1));
    }

    #[test]
    fn sieve_matches_brute_force_small() {
        let cfg = SieveConfig {
            segment_len: 7,
            ..Default::default()
        };
        for k in 2..=5 {
            let t = sieve_tau_k(k, 1, 200, &cfg).unwrap();
            for n in 1..=200 {
                assert_eq!(t.get(n).unwrap(), tau_k_brute(k, n), "k={k} n={n}");
            }
        }
    }

    #[test]
    fn sieve_budget_is_enforced() {
        let cfg = SieveConfig {
            budget_entries: 10,
            ..Default::default()
        };
        assert!(matches!(
            sieve_tau_k(2, 1, 11, &cfg),
            Err(Error::ResourceLimit { required: 11, .. })
        ));
    }

    #[test]
    fn partial_sums_and_moments() {
        let cfg = SieveConfig::default();
        assert_eq!(partial_sum_tau(2, 1, &cfg).unwrap(), 1);
        let brute: u64 = (1..=100u64).map(|d| 100 / d).sum();
        assert_eq!(partial_sum_tau(2, 100, &cfg).unwrap(), brute as u128);
        let brute3: u64 = (1..=10).map(|n| tau_k_brute(3, n)).sum();
        assert_eq!(partial_sum_tau(3, 10, &cfg).unwrap(), brute3 as u128);
        assert_eq!(square_moment_tau(2, 1, &cfg).unwrap(), 1);
        assert_eq!(square_moment_tau(2, 4, &cfg).unwrap(), 18);
        assert_eq!(square_moment_tau(4, 2, &cfg).unwrap(), 17);
    }

    #[test]
    fn dump_round_trip() {
        let t = sieve_tau_k(3, 5, 40, &SieveConfig::default()).unwrap();
        let mut buf = Vec::new();
        t.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * (3 + 36));
        assert_eq!(&buf[0..8], &3u64.to_le_bytes());
        let back = DivisorTable::read_dump(&buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn segment_boundaries_cover_range() {
        let segs = segments(5, 17, 4);
        assert_eq!(segs, vec![(5, 4), (9, 4), (13, 4), (17, 1)]);
    }
}
