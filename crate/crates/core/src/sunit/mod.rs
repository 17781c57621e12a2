//! S-unit equations `a_1 x_1 + ... + a_n x_n = 1` over the rationals.
//!
//! All arithmetic is exact (`BigRational`). S-units are read up to sign:
//! `x = ±prod p^e` with `p` in `S` and `e` in `Z`.
//!
//! Besides solution search and the degeneracy test this module hosts the
//! pigeonhole construction of many solutions ([`construct_thm1`]), lifting of
//! solutions to more variables ([`lift_solutions`]) and the minimal degree of a
//! polynomial vanishing on a point set ([`min_vanishing_degree`]).

mod construct;
mod degree;
mod poly;

pub use construct::{construct_thm1, ConstructionReport, Thm1Limits};
pub use degree::{matrix_rank, min_vanishing_degree};
pub use poly::{lemma6_check, lemma6_fuzz, Lemma6Check, Lemma6Fuzz, Polynomial};

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::primes::is_prime;
use crate::{Error, Result};

/// Parse `p/q`, `p`, or a decimal-free signed integer ratio.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<BigInt>().map_err(|_| bad())?,
            d.trim().parse::<BigInt>().map_err(|_| bad())?,
        ),
        None => (s.parse::<BigInt>().map_err(|_| bad())?, BigInt::one()),
    };
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Comma-separated list of rationals.
pub fn parse_rational_list(s: &str) -> Result<Vec<BigRational>> {
    s.split(',').map(parse_rational).collect()
}

pub(crate) fn ser_rationals<S: Serializer>(
    v: &[BigRational],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|q| q.to_string()))
}

pub(crate) fn ser_rational<S: Serializer>(
    v: &BigRational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// Coefficients `a` and a prime set `S`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SUnitInstance {
    #[serde(serialize_with = "ser_rationals")]
    pub a: Vec<BigRational>,
    #[serde(rename = "S")]
    pub s: Vec<u64>,
}

impl SUnitInstance {
    pub fn new(a: Vec<BigRational>, mut s: Vec<u64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::invalid(
                "an S-unit equation needs at least one coefficient",
            ));
        }
        if a.iter().any(Zero::is_zero) {
            return Err(Error::invalid("coefficients must be nonzero"));
        }
        s.sort_unstable();
        if s.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("prime set has repeated entries"));
        }
        if let Some(p) = s.iter().find(|&&p| !is_prime(p)) {
            return Err(Error::invalid(format!("{p} in S is not prime")));
        }
        Ok(Self { a, s })
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    /// `sum a_i x_i`.
    pub fn evaluate(&self, x: &[BigRational]) -> BigRational {
        self.a.iter().zip(x).map(|(a, x)| a * x).sum()
    }

    /// Whether `x` solves the equation with every coordinate an S-unit.
    pub fn is_solution(&self, x: &[BigRational]) -> bool {
        x.len() == self.n()
            && self.evaluate(x).is_one()
            && x.iter().all(|q| is_s_unit(q, &self.s).unwrap_or(false))
    }
}

/// A solution vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Solution {
    #[serde(serialize_with = "ser_rationals")]
    pub x: Vec<BigRational>,
}

fn strip_primes(mut n: BigInt, s: &[u64]) -> BigInt {
    for &p in s {
        let p = BigInt::from(p);
        loop {
            let (q, r) = n.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            n = q;
        }
    }
    n
}

/// Whether numerator and denominator of `q` factor over `s`, sign ignored.
pub fn is_s_unit(q: &BigRational, s: &[u64]) -> Result<bool> {
    if q.is_zero() {
        return Err(Error::domain("0 is not an S-unit"));
    }
    let num = strip_primes(q.numer().abs(), s);
    let den = strip_primes(q.denom().abs(), s);
    Ok(num.is_one() && den.is_one())
}

/// Primes dividing the numerator or denominator of `q`, ascending.
pub fn rational_prime_support(q: &BigRational) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in [q.numer().abs(), q.denom().abs()] {
        let v: u64 = part
            .try_into()
            .map_err(|_| Error::invalid(format!("{q} too large to factor")))?;
        out.extend(crate::primes::prime_divisors(v));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// `±prod p^e` over `S` with `|e| <= bound`, ascending.
fn box_values(s: &[u64], bound: u32) -> Vec<BigRational> {
    let mut vals = vec![BigRational::one()];
    for &p in s {
        let p = BigRational::from_integer(BigInt::from(p));
        let mut next = Vec::with_capacity(vals.len() * (2 * bound as usize + 1));
        for v in &vals {
            for e in -(bound as i32)..=bound as i32 {
                next.push(v * p.pow(e));
            }
        }
        vals = next;
    }
    let mut signed: Vec<BigRational> = vals
        .iter()
        .map(|v| -v)
        .chain(vals.iter().cloned())
        .collect();
    signed.sort();
    signed
}

/// All solutions whose first `n - 1` coordinates are `±prod p^e` with
/// `|e| <= exponent_bound`; the last coordinate is solved for and kept when it
/// is a nonzero S-unit. Results are sorted.
pub fn enumerate_solutions(
    inst: &SUnitInstance,
    exponent_bound: u32,
    work_cap: u64,
) -> Result<Vec<Solution>> {
    let n = inst.n();
    let per_coord = 2u128 * (2 * exponent_bound as u128 + 1).pow(inst.s.len() as u32);
    let work = per_coord
        .checked_pow(n as u32 - 1)
        .unwrap_or(u128::MAX)
        .saturating_mul(n as u128);
    if work > work_cap as u128 {
        return Err(Error::cap(
            format!("S-unit search over {work} candidate terms"),
            work_cap,
        ));
    }
    let vals = box_values(&inst.s, exponent_bound);
    let last = &inst.a[n - 1];
    let mut out = Vec::new();
    let mut idx = vec![0usize; n - 1];
    loop {
        let mut x: Vec<BigRational> = idx.iter().map(|&i| vals[i].clone()).collect();
        let partial: BigRational = inst.a.iter().zip(&x).map(|(a, x)| a * x).sum();
        let xn = (BigRational::one() - partial) / last;
        if !xn.is_zero() && is_s_unit(&xn, &inst.s)? {
            x.push(xn);
            out.push(Solution { x });
        }
        // odometer
        let mut k = 0;
        loop {
            if k == idx.len() {
                out.sort();
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < vals.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// True iff no non-empty proper subset of `terms` sums to zero.
pub fn nondegenerate_terms(terms: &[BigRational]) -> Result<bool> {
    let n = terms.len();
    if n > 20 {
        return Err(Error::cap("non-degeneracy check over 2^n subsets", 20));
    }
    if n < 2 {
        return Ok(true);
    }
    let full = (1u32 << n) - 1;
    for mask in 1..full {
        let mut s = BigRational::zero();
        for (i, t) in terms.iter().enumerate() {
            if mask >> i & 1 == 1 {
                s += t;
            }
        }
        if s.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Non-degeneracy of a solution: no vanishing proper subsum of `a_i x_i`.
pub fn check_nondegenerate(inst: &SUnitInstance, sol: &Solution) -> Result<bool> {
    if sol.x.len() != inst.n() {
        return Err(Error::invalid(
            "solution length does not match the instance",
        ));
    }
    let terms: Vec<BigRational> = inst.a.iter().zip(&sol.x).map(|(a, x)| a * x).collect();
    nondegenerate_terms(&terms)
}

fn sums_to_one(x: &[BigRational]) -> bool {
    x.iter().sum::<BigRational>().is_one()
}

/// Lift solutions `y` of `y_1 + ... + y_{n-1} = 1` and `z` of `z_1 + z_2 = 1`
/// to `(y_1, ..., y_{n-2}, y_{n-1} z_1, y_{n-1} z_2)`; duplicates are dropped,
/// first occurrence kept.
pub fn lift_solutions(u: &[Solution], z: &[Solution]) -> Result<Vec<Solution>> {
    for y in u {
        if y.x.len() < 2 || !sums_to_one(&y.x) {
            return Err(Error::invalid(
                "every lifted solution must have >= 2 coordinates summing to 1",
            ));
        }
        if y.x.len() != u[0].x.len() {
            return Err(Error::invalid("lifted solutions differ in length"));
        }
    }
    for w in z {
        if w.x.len() != 2 || !sums_to_one(&w.x) {
            return Err(Error::invalid(
                "the two-term solutions must be pairs summing to 1",
            ));
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for y in u {
        let (head, tail) = y.x.split_at(y.x.len() - 1);
        for w in z {
            let mut x = head.to_vec();
            x.push(&tail[0] * &w.x[0]);
            x.push(&tail[0] * &w.x[1]);
            let sol = Solution { x };
            if seen.insert(sol.clone()) {
                out.push(sol);
            }
        }
    }
    Ok(out)
}
