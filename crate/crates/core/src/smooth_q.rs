//! Exact counting of `Y`-smooth integers up to `X`.

use rayon::prelude::*;
use serde::Serialize;

use crate::dickman_xi::RhoTable;
use crate::{Error, Result};

/// Largest sieve the crate will allocate unless the caller raises the cap.
pub const DEFAULT_SIEVE_CAP: u64 = 200_000_000;

/// Default cap on the length of [`SmoothSieve::psi_enumerate`] output.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

const PAR_CHUNK: usize = 1 << 16;

/// Smallest-prime-factor table for `2..=limit`.
#[derive(Debug, Clone)]
pub struct SmoothSieve {
    spf: Vec<u32>,
}

/// Result of a `psi(X, Y)` count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiResult {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub count: u64,
    /// `log X / log Y`; absent when `Y <= 1`.
    pub u: Option<f64>,
}

impl SmoothSieve {
    /// Linear sieve of smallest prime factors up to `limit`.
    pub fn build(limit: u64) -> Result<Self> {
        Self::build_with_cap(limit, DEFAULT_SIEVE_CAP)
    }

    pub fn build_with_cap(limit: u64, cap: u64) -> Result<Self> {
        if limit < 2 {
            return Err(Error::invalid(format!("sieve limit {limit} must be >= 2")));
        }
        if limit > cap || limit > u32::MAX as u64 {
            return Err(Error::cap(
                format!("sieve limit {limit}"),
                cap.min(u32::MAX as u64),
            ));
        }
        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > si || m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        Ok(Self { spf })
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        if n < 2 {
            return Err(Error::domain("smallest prime factor needs n >= 2"));
        }
        Ok(self.spf[n as usize] as u64)
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(n >= 2 && self.spf[n as usize] as u64 == n)
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.limit() {
            return Err(Error::OutOfRange {
                what: "n",
                value: n as f64,
                limit: self.limit() as f64,
            });
        }
        Ok(())
    }

    /// Largest prime divisor of `n`, with `P(1) = 1`.
    pub fn largest_prime_factor(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        let mut m = n as usize;
        let mut p = 1;
        while m > 1 {
            p = self.spf[m];
            m /= p as usize;
        }
        Ok(p as u64)
    }

    /// Prime factorisation `[(p, e), ...]` in increasing `p`.
    pub fn factor(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        self.check(n)?;
        let mut m = n as usize;
        let mut out: Vec<(u64, u32)> = Vec::new();
        while m > 1 {
            let p = self.spf[m] as u64;
            m /= p as usize;
            match out.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => out.push((p, 1)),
            }
        }
        Ok(out)
    }

    #[inline]
    fn smooth_unchecked(&self, n: usize, y: u64) -> bool {
        let mut m = n;
        while m > 1 {
            let p = self.spf[m];
            if p as u64 > y {
                return false;
            }
            m /= p as usize;
        }
        true
    }

    pub fn is_smooth(&self, n: u64, y: u64) -> Result<bool> {
        self.check(n)?;
        Ok(self.smooth_unchecked(n as usize, y))
    }

    fn bounds(&self, x: f64, y: f64) -> Result<(usize, u64)> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::domain("psi needs finite X and Y"));
        }
        if y < 1.0 {
            return Err(Error::domain(format!("psi needs Y >= 1, got {y}")));
        }
        if x > self.limit() as f64 {
            return Err(Error::OutOfRange {
                what: "X",
                value: x,
                limit: self.limit() as f64,
            });
        }
        let top = if x < 1.0 { 0 } else { x.floor() as usize };
        Ok((top, y.floor() as u64))
    }

    /// Exact `psi(X, Y)`: the number of `n <= X` with no prime factor above `Y`.
    ///
    /// Large ranges are split into chunks counted in parallel; the result is
    /// identical to a sequential scan.
    pub fn psi(&self, x: f64, y: f64) -> Result<PsiResult> {
        let (top, yi) = self.bounds(x, y)?;
        let count = if top < 4 * PAR_CHUNK {
            (1..=top).filter(|&n| self.smooth_unchecked(n, yi)).count() as u64
        } else {
            (0..top.div_ceil(PAR_CHUNK))
                .into_par_iter()
                .map(|c| {
                    let lo = c * PAR_CHUNK + 1;
                    let hi = ((c + 1) * PAR_CHUNK).min(top);
                    (lo..=hi).filter(|&n| self.smooth_unchecked(n, yi)).count() as u64
                })
                .sum()
        };
        let u = (y > 1.0).then(|| if x >= 1.0 { x.ln() / y.ln() } else { 0.0 });
        Ok(PsiResult { x, y, count, u })
    }

    /// All `Y`-smooth `n <= X` in ascending order.
    pub fn psi_enumerate(&self, x: f64, y: f64, cap: u64) -> Result<Vec<u64>> {
        let (top, yi) = self.bounds(x, y)?;
        let mut out = Vec::new();
        for n in 1..=top {
            if self.smooth_unchecked(n, yi) {
                if out.len() as u64 >= cap {
                    return Err(Error::cap("smooth enumeration length", cap));
                }
                out.push(n as u64);
            }
        }
        Ok(out)
    }
}

/// `X rho(u)` with `u = log X / log Y`: the main term of the smooth count.
pub fn hildebrand_estimate(table: &RhoTable, x: f64, y: f64) -> Result<f64> {
    if !(y >= 2.0) {
        return Err(Error::domain(format!(
            "Hildebrand estimate needs Y >= 2, got {y}"
        )));
    }
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "Hildebrand estimate needs X >= 1, got {x}"
        )));
    }
    let u = x.ln() / y.ln();
    Ok(x * table.rho(u)?)
}
