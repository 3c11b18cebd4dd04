//! Prime sieving, Goldbach decomposition counts `D(N)`, the constants
//! `C_0` and `Theta(N)`, and the comet datasets.
//!
//! `D(N)` counts unordered decompositions `N = p + q` with primes
//! `p <= q`, matching the published example lists (nine decompositions
//! for 90).

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Primality table over `[0, limit]`, built by the Sieve of Eratosthenes.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    limit: usize,
    is_prime: Vec<bool>,
}

/// Upper bound above which a sieve allocation is refused outright.
const SIEVE_LIMIT_CAP: usize = 1 << 33;

pub fn sieve(limit: usize) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(Error::domain("sieve limit must be >= 2".to_string()));
    }
    if limit > SIEVE_LIMIT_CAP {
        return Err(Error::domain(format!(
            "sieve limit {limit} exceeds the configured cap {SIEVE_LIMIT_CAP}"
        )));
    }
    let mut is_prime = vec![true; limit + 1];
    is_prime[0] = false;
    is_prime[1] = false;
    let mut p = 2usize;
    while p * p <= limit {
        if is_prime[p] {
            let mut m = p * p;
            while m <= limit {
                is_prime[m] = false;
                m += p;
            }
        }
        p += 1;
    }
    Ok(PrimeTable { limit, is_prime })
}

impl PrimeTable {
    pub fn limit(&self) -> usize {
        self.limit
    }

    #[inline]
    pub fn is_prime(&self, n: usize) -> bool {
        n <= self.limit && self.is_prime[n]
    }

    /// Prime counting function `pi(x)`.
    pub fn pi(&self, x: usize) -> usize {
        self.is_prime[..=x.min(self.limit)]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    pub fn primes(&self) -> impl Iterator<Item = usize> + '_ {
        self.is_prime
            .iter()
            .enumerate()
            .filter_map(|(n, &b)| b.then_some(n))
    }
}

/// Number of unordered prime decompositions of the even number `N`.
pub fn d_count(n: usize, pt: &PrimeTable) -> Result<u64> {
    if n % 2 != 0 || n < 4 || n > pt.limit() {
        return Err(Error::domain(format!(
            "d_count needs even 4 <= N <= {}, got {n}",
            pt.limit()
        )));
    }
    let mut count = 0u64;
    for p in 2..=n / 2 {
        if pt.is_prime(p) && pt.is_prime(n - p) {
            count += 1;
        }
    }
    Ok(count)
}

/// Smallest prime `p` with `N - p` prime, if any. Cheap existence check
/// for Goldbach sweeps, where the full count is not needed.
pub fn goldbach_witness(n: usize, pt: &PrimeTable) -> Result<Option<usize>> {
    if n % 2 != 0 || n < 4 || n > pt.limit() {
        return Err(Error::domain(format!(
            "goldbach_witness needs even 4 <= N <= {}, got {n}",
            pt.limit()
        )));
    }
    for p in 2..=n / 2 {
        if pt.is_prime(p) && pt.is_prime(n - p) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Truncated twin-prime constant `prod_{2 < p <= limit} (1 - 1/(p-1)^2)`.
///
/// Decreasing in the cutoff; at `limit = 1e6` the value is within a few
/// 1e-5 of the limit 0.66016...
pub fn twin_prime_constant(prime_limit: usize) -> Result<f64> {
    let pt = sieve(prime_limit)?;
    let mut product = 1.0f64;
    for p in pt.primes().skip(1) {
        let d = (p as f64) - 1.0;
        product *= 1.0 - 1.0 / (d * d);
    }
    Ok(product)
}

/// `Theta(N) = C_N N / log^2 N` with
/// `C_N = C_0 prod_{p | N, p > 2} (1 + 1/(p-2))`.
pub fn theta(n: usize, c0: f64) -> Result<f64> {
    if n % 2 != 0 || n < 4 {
        return Err(Error::domain(format!("theta needs even N >= 4, got {n}")));
    }
    let mut c_n = c0;
    let mut m = n;
    while m % 2 == 0 {
        m /= 2;
    }
    let mut p = 3usize;
    while p * p <= m {
        if m % p == 0 {
            c_n *= 1.0 + 1.0 / (p as f64 - 2.0);
            while m % p == 0 {
                m /= p;
            }
        }
        p += 2;
    }
    if m > 1 {
        c_n *= 1.0 + 1.0 / (m as f64 - 2.0);
    }
    let log_n = (n as f64).ln();
    Ok(c_n * n as f64 / (log_n * log_n))
}

/// Which even numbers a comet dataset includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CometFilter {
    /// Every even `N` in `[4, max_n]`.
    All,
    /// Only `N = 12 p` for prime `p`.
    MultiplesOf12P,
}

/// One comet row: `(N, D(N), 2 Theta(N), N/2 mod 3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoldbachRecord {
    pub n: usize,
    pub d: u64,
    pub two_theta: f64,
    pub color_class: u8,
}

/// Comet dataset for `N <= max_n`, in increasing `N`. Rows are computed
/// in parallel; ordering is deterministic.
pub fn comet_records(
    max_n: usize,
    filter: CometFilter,
    pt: &PrimeTable,
    c0: f64,
) -> Result<Vec<GoldbachRecord>> {
    if max_n > pt.limit() {
        return Err(Error::domain(format!(
            "comet max N {max_n} exceeds the sieve limit {}",
            pt.limit()
        )));
    }
    let ns: Vec<usize> = match filter {
        CometFilter::All => (4..=max_n).step_by(2).collect(),
        CometFilter::MultiplesOf12P => pt
            .primes()
            .map(|p| 12 * p)
            .take_while(|&n| n <= max_n)
            .collect(),
    };
    ns.par_iter()
        .map(|&n| {
            Ok(GoldbachRecord {
                n,
                d: d_count(n, pt)?,
                two_theta: 2.0 * theta(n, c0)?,
                color_class: ((n / 2) % 3) as u8,
            })
        })
        .collect()
}
