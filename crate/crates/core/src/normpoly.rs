//! Norm-form equations `|N(α0 + α1 x)| = p_1^z_1 ... p_s^z_s` over quadratic
//! fields of class number one.
//!
//! Elements are integer pairs `(a, b)` meaning `a + b ω` in the integral basis
//! `{1, ω}`, with `ω = (1 + sqrt d)/2` when `d ≡ 1 (mod 4)` and `ω = sqrt d`
//! otherwise. Writing `ω² = t ω - c`, the norm form is `a² + t a b + c b²`.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::bounds::thm3_exponent;
use crate::primes::{is_prime, prime_divisors, primes_up_to};
use crate::quad_ideals::{QuadField, SplitType};
use crate::smooth_q::SmoothSieve;
use crate::{Error, Result};

/// `(t, c)` with `ω² = t ω - c`.
fn basis_constants(field: &QuadField) -> (i128, i128) {
    let d = field.d as i128;
    if d.rem_euclid(4) == 1 {
        (1, (1 - d) / 4)
    } else {
        (0, -d)
    }
}

fn is_square(v: i128) -> bool {
    if v < 0 {
        return false;
    }
    let r = (v as f64).sqrt() as i128;
    (r.saturating_sub(2)..=r + 2).any(|k| k >= 0 && k * k == v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadElement {
    pub field: QuadField,
    pub a: i64,
    pub b: i64,
}

impl QuadElement {
    pub fn new(field: QuadField, a: i64, b: i64) -> Result<Self> {
        if !field.class_number_one {
            return Err(Error::domain(format!(
                "Q(sqrt({})) is not in the supported class-number-one list",
                field.d
            )));
        }
        Ok(Self { field, a, b })
    }

    /// Parses `a,b`.
    pub fn parse(field: QuadField, text: &str) -> Result<Self> {
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        let [a, b] = parts[..] else {
            return Err(Error::Parse(format!(
                "element {text:?} is not of the form a,b"
            )));
        };
        let num = |s: &str| {
            s.parse::<i64>()
                .map_err(|e| Error::Parse(format!("{s:?}: {e}")))
        };
        Self::new(field, num(a)?, num(b)?)
    }

    /// Signed norm.
    pub fn norm(&self) -> i128 {
        let (t, c) = basis_constants(&self.field);
        let (a, b) = (self.a as i128, self.b as i128);
        a * a + t * a * b + c * b * b
    }

    pub fn trace(&self) -> i128 {
        let (t, _) = basis_constants(&self.field);
        2 * self.a as i128 + t * self.b as i128
    }

    /// `true` when the element generates the whole field, i.e. the
    /// discriminant of its characteristic polynomial is not a square.
    pub fn generates_field(&self) -> bool {
        !is_square(self.trace() * self.trace() - 4 * self.norm())
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field != other.field {
            return Err(Error::invalid("elements live in different fields"));
        }
        Ok(())
    }
}

impl fmt::Display for QuadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

impl Serialize for QuadElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OrderedPrime {
    pub p: u64,
    pub k: u32,
    pub norm: u64,
}

/// Rational primes sorted by the smallest norm `p^k` of a prime ideal above
/// them, ties by `p`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrderedPrimeList {
    pub entries: Vec<OrderedPrime>,
}

impl OrderedPrimeList {
    pub fn primes(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.p).collect()
    }

    /// Norm of the last entry.
    pub fn y(&self) -> u64 {
        self.entries.last().map_or(1, |e| e.norm)
    }
}

/// The first `s` primes under the smallest-ideal-norm ordering.
pub fn order_primes(field: &QuadField, s: usize) -> Result<OrderedPrimeList> {
    if s == 0 {
        return Err(Error::invalid("s must be >= 1"));
    }
    let mut limit = (2.0 * s as f64 * (s as f64 + 2.0).ln()) as u64 + 64;
    loop {
        let mut entries: Vec<OrderedPrime> = primes_up_to(limit)
            .into_iter()
            .map(|p| {
                let first = field.splitting(p).expect("sieved primes are prime")[0];
                let k = if first.split_type == SplitType::Inert {
                    2
                } else {
                    1
                };
                OrderedPrime {
                    p,
                    k,
                    norm: first.norm,
                }
            })
            .filter(|e| e.norm <= limit)
            .collect();
        if entries.len() >= s {
            entries.sort_by_key(|e| (e.norm, e.p));
            entries.truncate(s);
            return Ok(OrderedPrimeList { entries });
        }
        limit = limit
            .checked_mul(2)
            .ok_or_else(|| Error::cap("prime ordering range", u64::MAX))?;
    }
}

/// `c_K` for a quadratic field: every quadratic field is normal, so `c_K = 2`.
pub fn chebotarev_constant(_field: &QuadField) -> Ratio<u64> {
    Ratio::from_integer(2)
}

/// `f(x) = N(α0 + α1 x) = c2 x² + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct NormPoly {
    pub alpha0: QuadElement,
    pub alpha1: QuadElement,
    pub c2: i64,
    pub c1: i64,
    pub c0: i64,
}

impl NormPoly {
    /// Fails unless `α0, α1` are linearly independent over `Q`; checks that
    /// the quadratic is irreducible.
    pub fn new(alpha0: QuadElement, alpha1: QuadElement) -> Result<Self> {
        alpha0.same_field(&alpha1)?;
        let det = alpha0.a as i128 * alpha1.b as i128 - alpha0.b as i128 * alpha1.a as i128;
        if det == 0 {
            return Err(Error::domain(format!(
                "α0 = {alpha0} and α1 = {alpha1} are dependent"
            )));
        }
        let (t, c) = basis_constants(&alpha0.field);
        let (a0, b0, a1, b1) = (
            alpha0.a as i128,
            alpha0.b as i128,
            alpha1.a as i128,
            alpha1.b as i128,
        );
        let c2 = alpha1.norm();
        let c0 = alpha0.norm();
        let c1 = 2 * a0 * a1 + t * (a0 * b1 + a1 * b0) + 2 * c * b0 * b1;
        if is_square(c1 * c1 - 4 * c2 * c0) {
            return Err(Error::domain("norm polynomial is reducible"));
        }
        let small =
            |v: i128| i64::try_from(v).map_err(|_| Error::invalid("norm coefficients overflow"));
        Ok(Self {
            alpha0,
            alpha1,
            c2: small(c2)?,
            c1: small(c1)?,
            c0: small(c0)?,
        })
    }

    pub fn signed(&self, x: i64) -> i128 {
        let x = x as i128;
        (self.c2 as i128 * x + self.c1 as i128) * x + self.c0 as i128
    }

    /// `|f(x)|`.
    pub fn eval(&self, x: i64) -> u128 {
        self.signed(x).unsigned_abs()
    }
}

/// `|N(α0 + x α1)|`.
pub fn norm_poly(alpha0: QuadElement, alpha1: QuadElement, x: i64) -> Result<u128> {
    Ok(NormPoly::new(alpha0, alpha1)?.eval(x))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RnSolution {
    pub x: i64,
    pub value: u64,
    /// Exponents aligned with the prime set.
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RnCount {
    pub primes: Vec<u64>,
    pub x_bound: u64,
    pub count: u64,
    pub solutions: Vec<RnSolution>,
}

fn check_prime_set(primes: &[u64]) -> Result<Vec<u64>> {
    let mut s = primes.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(p) = s.iter().find(|&&p| !is_prime(p)) {
        return Err(Error::invalid(format!("{p} is not prime")));
    }
    Ok(s)
}

/// All `|x| <= x_bound` with `f(x) != 0` an `S`-unit; `f(x) = 1` counts with
/// the zero exponent vector.
pub fn count_rn_solutions(
    f: &NormPoly,
    primes: &[u64],
    x_bound: u64,
    sieve: &SmoothSieve,
) -> Result<RnCount> {
    let primes = check_prime_set(primes)?;
    let b = i64::try_from(x_bound).map_err(|_| Error::invalid("x_bound too large"))?;
    let mut solutions = Vec::new();
    for x in -b..=b {
        let v = f.eval(x);
        if v == 0 {
            continue;
        }
        if v > sieve.limit() as u128 {
            return Err(Error::cap(
                format!("|f({x})| = {v} beyond the sieve"),
                sieve.limit(),
            ));
        }
        let mut exponents = vec![0u32; primes.len()];
        let mut ok = true;
        for (p, e) in sieve.factor(v as u64)? {
            match primes.binary_search(&p) {
                Ok(i) => exponents[i] = e,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            solutions.push(RnSolution {
                x,
                value: v as u64,
                exponents,
            });
        }
    }
    Ok(RnCount {
        primes,
        x_bound,
        count: solutions.len() as u64,
        solutions,
    })
}

/// Smallest degree of a nonzero polynomial in `x` vanishing at every
/// solution: the number of distinct solutions `x`.
pub fn thm4_degree(f: &NormPoly, primes: &[u64], x_bound: u64, sieve: &SmoothSieve) -> Result<u64> {
    let c = count_rn_solutions(f, primes, x_bound, sieve)?;
    let mut xs: Vec<i64> = c.solutions.iter().map(|s| s.x).collect();
    xs.dedup();
    Ok(xs.len() as u64)
}

/// Parameters of [`construct_thm3`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thm3Params {
    /// Conjugates are bounded by `c2 * X^(1/2)`.
    pub c2: f64,
    /// Only used for the bound printed next to the count.
    pub epsilon: f64,
    /// Largest number of lattice points examined.
    pub box_cap: u64,
    /// Largest number of smooth elements kept.
    pub enumeration_cap: u64,
}

impl Default for Thm3Params {
    fn default() -> Self {
        Self {
            c2: 2.0,
            epsilon: 0.5,
            box_cap: 200_000_000,
            enumeration_cap: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Thm3Report {
    pub d: i64,
    pub alpha1: QuadElement,
    pub s: usize,
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "Y")]
    pub y: u64,
    pub ordered_primes: Vec<u64>,
    /// Complement direction `κ = key * complement`.
    pub complement: QuadElement,
    /// Basis-change denominator, the gcd of the coordinates of `α1`.
    pub denominator: u64,
    pub box_points: u64,
    pub total: u64,
    /// Elements with zero complement part, excluded from selection.
    pub zero_bucket: u64,
    /// Nonempty buckets with nonzero key.
    pub buckets: u64,
    pub bucket_key: i64,
    pub bucket_size: u64,
    /// `ceil((total - zero_bucket) / buckets)`.
    pub guaranteed: u64,
    /// `(bucket size, number of nonzero-key buckets of that size)`.
    pub bucket_histogram: Vec<(u64, u64)>,
    pub alpha0: QuadElement,
    pub independent: bool,
    pub generates_field: bool,
    #[serde(rename = "S")]
    pub s_primes: Vec<u64>,
    pub solutions: Vec<i64>,
    pub count: u64,
    pub epsilon: f64,
    pub bound_exponent: f64,
    pub log_count: f64,
}

/// Returns `(g, u, v)` with `p u + q v = g = gcd(p, q) > 0`.
fn ext_gcd(p: i64, q: i64) -> (i64, i64, i64) {
    let e = p.extended_gcd(&q);
    if e.gcd < 0 {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Pigeonhole construction of many solutions of one norm polynomial.
///
/// Enumerates `ξ = a + b ω` with both conjugates at most `C2 X^(1/2)` in
/// absolute value and `N(ξ)` supported on the first `s` ordered primes, then
/// writes `ξ = κ + x α1` with `κ` on a fixed complement line and buckets by
/// `κ`. The most popular nonzero `κ` gives `α0 = g κ`, and each `ξ` in that
/// bucket a solution `g x` of `|N(α0 + α1 x)| = g² N(ξ)`.
pub fn construct_thm3(
    field: &QuadField,
    alpha1: QuadElement,
    s: usize,
    x: f64,
    sieve: &SmoothSieve,
    params: Thm3Params,
) -> Result<(Thm3Report, NormPoly)> {
    QuadElement::new(*field, 0, 0)?;
    if alpha1.field != *field {
        return Err(Error::invalid("α1 lives in a different field"));
    }
    if alpha1.a == 0 && alpha1.b == 0 {
        return Err(Error::domain("α1 must be nonzero"));
    }
    if !(x >= 1.0 && x.is_finite()) {
        return Err(Error::invalid(format!("X = {x} must be finite and >= 1")));
    }
    if !(params.c2 > 0.0 && params.c2.is_finite()) {
        return Err(Error::invalid(format!(
            "C2 = {} must be positive",
            params.c2
        )));
    }
    let ordered = order_primes(field, s)?;
    let y = ordered.y();
    let primes = ordered.primes();
    let pmax = *primes.iter().max().expect("s >= 1") as usize;
    let mut allowed = vec![false; pmax + 1];
    primes.iter().for_each(|&p| allowed[p as usize] = true);

    let r = params.c2 * x.sqrt();
    let r2 = r * r;
    // norms are integers, so only floor(R^2) has to fit in the sieve
    if r2.floor() > sieve.limit() as f64 {
        return Err(Error::cap(
            format!("norms up to {r2:.0} beyond the sieve"),
            sieve.limit(),
        ));
    }
    let (t, c) = basis_constants(field);
    let disc = field.discriminant as f64;
    let half_root = disc.abs().sqrt() / 2.0;
    let imaginary = field.d < 0;
    // conjugates are h ± b sqrt(D)/2 with h = a + t b / 2
    let bmax = (r / half_root).floor() as i64;
    let a_range = |b: i64| -> Option<(i64, i64)> {
        let bb = b as f64 * half_root;
        let h = if imaginary {
            (r2 - bb * bb).max(0.0).sqrt()
        } else {
            r - bb.abs()
        };
        if h < 0.0 {
            return None;
        }
        let shift = t as f64 * b as f64 / 2.0;
        let lo = (-h - shift).ceil() as i64;
        let hi = (h - shift).floor() as i64;
        (lo <= hi).then_some((lo, hi))
    };
    let box_points: u64 = (-bmax..=bmax)
        .filter_map(a_range)
        .map(|(lo, hi)| (hi - lo + 1) as u64)
        .sum();
    if box_points > params.box_cap {
        return Err(Error::cap(
            format!("{box_points} lattice points"),
            params.box_cap,
        ));
    }

    let smooth = |n: u64| -> Result<bool> {
        let mut v = n;
        while v > 1 {
            let p = sieve.spf(v)? as usize;
            if p > pmax || !allowed[p] {
                return Ok(false);
            }
            v /= p as u64;
        }
        Ok(true)
    };
    let rows: Vec<Result<Vec<(i64, i64)>>> = (-bmax..=bmax)
        .into_par_iter()
        .map(|b| {
            let mut row = Vec::new();
            let Some((lo, hi)) = a_range(b) else {
                return Ok(row);
            };
            for a in lo..=hi {
                let (ai, bi) = (a as i128, b as i128);
                let n = ai * ai + t * ai * bi + c * bi * bi;
                if n == 0 {
                    continue;
                }
                let inside = if imaginary {
                    (n as f64) <= r2
                } else {
                    (a as f64 + t as f64 * b as f64 / 2.0).abs() + (b as f64).abs() * half_root <= r
                };
                if inside
                    && n.unsigned_abs() <= sieve.limit() as u128
                    && smooth(n.unsigned_abs() as u64)?
                {
                    row.push((a, b));
                }
            }
            Ok(row)
        })
        .collect();
    let mut elements = Vec::new();
    for row in rows {
        elements.extend(row?);
        if elements.len() as u64 > params.enumeration_cap {
            return Err(Error::cap("smooth elements", params.enumeration_cap));
        }
    }
    let total = elements.len() as u64;

    // complement (rc, sc) with p sc - q rc = g and sc != 0, so κ is irrational
    let (p, q) = (alpha1.a, alpha1.b);
    let (g, u, v) = ext_gcd(p, q);
    let (mut rc, mut sc) = (-v, u);
    if sc == 0 {
        rc += p;
        sc += q;
    }
    let key = |(a, b): (i64, i64)| (p as i128 * b as i128 - q as i128 * a as i128) / g as i128;
    let mut hist: BTreeMap<i128, u64> = BTreeMap::new();
    for &e in &elements {
        *hist.entry(key(e)).or_insert(0) += 1;
    }
    let zero_bucket = hist.get(&0).copied().unwrap_or(0);
    let best = hist
        .iter()
        .filter(|(k, _)| **k != 0)
        .max_by(|x, y| x.1.cmp(y.1).then((y.0.abs(), y.0).cmp(&(x.0.abs(), x.0))))
        .map(|(&k, &n)| (k, n));
    let Some((best_key, bucket_size)) = best else {
        return Err(Error::Construction(
            "no element with nonzero complement part".into(),
        ));
    };
    let buckets = hist.len() as u64 - u64::from(zero_bucket > 0);
    let mut dist = BTreeMap::new();
    hist.iter()
        .filter(|(k, _)| **k != 0)
        .for_each(|(_, &n)| *dist.entry(n).or_insert(0u64) += 1);

    let small = |v: i128| i64::try_from(v).map_err(|_| Error::invalid("α0 coordinates overflow"));
    let alpha0 = QuadElement::new(
        *field,
        small(g as i128 * best_key * rc as i128)?,
        small(g as i128 * best_key * sc as i128)?,
    )?;
    let complement = QuadElement::new(*field, rc, sc)?;
    let f = NormPoly::new(alpha0, alpha1)?;
    let mut s_primes = primes.clone();
    s_primes.extend(prime_divisors(g as u64));
    s_primes.sort_unstable();
    s_primes.dedup();

    let mut solutions = Vec::with_capacity(bucket_size as usize);
    for &(a, b) in elements.iter().filter(|&&e| key(e) == best_key) {
        let xs = small(a as i128 * sc as i128 - b as i128 * rc as i128)?;
        let expect = QuadElement {
            field: *field,
            a,
            b,
        }
        .norm()
            * (g as i128)
            * (g as i128);
        if f.signed(xs) != expect || !divides_out(f.eval(xs), &s_primes) {
            return Err(Error::Construction(format!("x = {xs} failed verification")));
        }
        solutions.push(xs);
    }
    solutions.sort_unstable();

    let report = Thm3Report {
        d: field.d,
        alpha1,
        s,
        x,
        c2: params.c2,
        y,
        ordered_primes: primes,
        complement,
        denominator: g as u64,
        box_points,
        total,
        zero_bucket,
        buckets,
        bucket_key: small(best_key)?,
        bucket_size,
        guaranteed: (total - zero_bucket).div_ceil(buckets),
        bucket_histogram: dist.into_iter().collect(),
        alpha0,
        independent: true,
        generates_field: alpha0.generates_field(),
        s_primes,
        count: solutions.len() as u64,
        solutions,
        epsilon: params.epsilon,
        bound_exponent: thm3_exponent(2, 1, 2.0, s as f64, params.epsilon),
        log_count: (bucket_size as f64).ln(),
    };
    if !report.generates_field {
        return Err(Error::Construction(format!(
            "α0 = {alpha0} does not generate the field"
        )));
    }
    Ok((report, f))
}

fn divides_out(mut v: u128, primes: &[u64]) -> bool {
    if v == 0 {
        return false;
    }
    for &p in primes {
        while v % p as u128 == 0 {
            v /= p as u128;
        }
    }
    v == 1
}
