use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// Sparse polynomial with rational coefficients in `nvars` variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    /// Sum of `coeff * x^exps`; like terms are merged and zeros dropped.
    pub fn new<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, BigRational)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::invalid(format!(
                    "monomial {e:?} does not have {nvars} exponents"
                )));
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, e: Vec<u32>, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(e).or_insert_with(BigRational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    /// `c + sum a_i x_i`.
    pub fn linear(coeffs: &[i64], constant: i64) -> Self {
        let n = coeffs.len();
        let mut p = Self::zero(n);
        p.add_term(vec![0; n], BigRational::from_integer(constant.into()));
        for (i, &a) in coeffs.iter().enumerate() {
            let mut e = vec![0; n];
            e[i] = 1;
            p.add_term(e, BigRational::from_integer(a.into()));
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for constants (including zero).
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.nvars != other.nvars {
            return Err(Error::invalid(
                "multiplying polynomials in different variables",
            ));
        }
        let mut out = Self::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[BigRational]) -> BigRational {
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (&d, x)| acc * x.pow(d as i32))
            })
            .sum()
    }

    /// Evaluation at an integer point, exact.
    pub fn eval_int(&self, point: &[i64]) -> BigRational {
        let pt: Vec<BigRational> = point
            .iter()
            .map(|&v| BigRational::from_integer(v.into()))
            .collect();
        self.eval(&pt)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let a = c.abs();
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .map(|(j, &d)| {
                    if d == 1 {
                        format!("x{}", j + 1)
                    } else {
                        format!("x{}^{d}", j + 1)
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{a}*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Zero count of a polynomial in an integer box against `deg * (B-A+1)^(m-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma6Check {
    pub zeros: u64,
    pub bound: u64,
    pub ok: bool,
}

/// Counts the zeros of `q` in `[a, b]^m` exhaustively.
pub fn lemma6_check(q: &Polynomial, a: i64, b: i64, work_cap: u64) -> Result<Lemma6Check> {
    if q.is_zero() {
        return Err(Error::domain("the zero polynomial vanishes everywhere"));
    }
    if b < a {
        return Err(Error::invalid(format!("empty box [{a}, {b}]")));
    }
    let m = q.nvars();
    if m == 0 {
        return Err(Error::invalid("polynomial has no variables"));
    }
    let side = (b - a + 1) as u128;
    let points = side.checked_pow(m as u32).unwrap_or(u128::MAX);
    if points > work_cap as u128 {
        return Err(Error::cap(format!("{points} box points"), work_cap));
    }
    let bound = q.total_degree() as u128 * side.pow(m as u32 - 1);
    let mut zeros = 0u64;
    let mut pt = vec![a; m];
    loop {
        if q.eval_int(&pt).is_zero() {
            zeros += 1;
        }
        let mut k = 0;
        loop {
            if k == m {
                let bound = bound as u64;
                return Ok(Lemma6Check {
                    zeros,
                    bound,
                    ok: zeros <= bound,
                });
            }
            pt[k] += 1;
            if pt[k] <= b {
                break;
            }
            pt[k] = a;
            k += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma6Case {
    pub polynomial: String,
    pub degree: u32,
    pub zeros: u64,
    pub bound: u64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma6Fuzz {
    pub seed: u64,
    pub trials: usize,
    pub variables: usize,
    pub max_degree: u32,
    #[serde(rename = "box")]
    pub bx: (i64, i64),
    pub violations: usize,
    /// Largest observed `zeros / bound`.
    pub max_ratio: f64,
    pub cases: Vec<Lemma6Case>,
}

fn random_polynomial(rng: &mut ChaCha8Rng, m: usize, max_degree: u32, trial: usize) -> Polynomial {
    let deg = rng.gen_range(1..=max_degree);
    if trial % 2 == 1 {
        // products of linear forms vanish on whole lines, stressing the bound
        let mut p = Polynomial::new(m, [(vec![0; m], BigRational::one())]).expect("valid monomial");
        for _ in 0..deg {
            let mut coeffs: Vec<i64> = (0..m).map(|_| rng.gen_range(-2..=2)).collect();
            if coeffs.iter().all(|&c| c == 0) {
                coeffs[rng.gen_range(0..m)] = 1;
            }
            let l = Polynomial::linear(&coeffs, rng.gen_range(-5..=5));
            p = p.mul(&l).expect("same variables");
        }
        return p;
    }
    loop {
        let mut terms = Vec::new();
        for e in exponents_up_to(m, deg) {
            if rng.gen_bool(0.4) {
                terms.push((
                    e,
                    BigRational::from_integer(BigInt::from(rng.gen_range(-3i64..=3))),
                ));
            }
        }
        let p = Polynomial::new(m, terms).expect("valid monomials");
        if !p.is_zero() {
            return p;
        }
    }
}

fn exponents_up_to(m: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for e in &out {
            let used: u32 = e.iter().sum();
            for d in 0..=(deg - used) {
                let mut f = e.clone();
                f.push(d);
                next.push(f);
            }
        }
        out = next;
    }
    out
}

/// Random polynomials of degree `<= max_degree` in `m` variables, zeros
/// counted in `[a, b]^m`. Even trials draw dense random coefficients, odd
/// trials multiply random linear forms. Deterministic in `seed`.
pub fn lemma6_fuzz(
    trials: usize,
    seed: u64,
    m: usize,
    max_degree: u32,
    a: i64,
    b: i64,
    work_cap: u64,
) -> Result<Lemma6Fuzz> {
    if m == 0 || max_degree == 0 {
        return Err(Error::invalid("fuzzing needs m >= 1 and degree >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(trials);
    let mut max_ratio: f64 = 0.0;
    for trial in 0..trials {
        let p = random_polynomial(&mut rng, m, max_degree, trial);
        let c = lemma6_check(&p, a, b, work_cap)?;
        if c.bound > 0 {
            max_ratio = max_ratio.max(c.zeros as f64 / c.bound as f64);
        }
        cases.push(Lemma6Case {
            polynomial: p.to_string(),
            degree: p.total_degree(),
            zeros: c.zeros,
            bound: c.bound,
            ok: c.ok,
        });
    }
    Ok(Lemma6Fuzz {
        seed,
        trials,
        variables: m,
        max_degree,
        bx: (a, b),
        violations: cases.iter().filter(|c| !c.ok).count(),
        max_ratio,
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(v.into())
    }

    #[test]
    fn diagonal_and_no_real_zeros() {
        let diag = Polynomial::linear(&[1, -1], 0);
        let c = lemma6_check(&diag, 0, 9, 1_000).unwrap();
        assert_eq!(
            c,
            Lemma6Check {
                zeros: 10,
                bound: 10,
                ok: true
            }
        );
        let sq = Polynomial::new(2, [(vec![2, 0], q(1)), (vec![0, 0], q(1))]).unwrap();
        let c = lemma6_check(&sq, -5, 5, 1_000).unwrap();
        assert_eq!(c.zeros, 0);
        assert!(c.ok);
        assert!(lemma6_check(&Polynomial::zero(2), 0, 1, 10).is_err());
        assert!(lemma6_check(&diag, 0, 99, 100).is_err());
    }

    #[test]
    fn arithmetic_and_display() {
        let l = Polynomial::linear(&[1, 0], -2);
        let p = l.mul(&l).unwrap();
        assert_eq!(p.total_degree(), 2);
        assert_eq!(p.eval_int(&[2, 7]), q(0));
        assert_eq!(p.eval_int(&[5, 0]), q(9));
        assert_eq!(p.to_string(), "x1^2 - 4*x1 + 4");
        let cancel = Polynomial::new(1, [(vec![1], q(2)), (vec![1], q(-2))]).unwrap();
        assert!(cancel.is_zero());
        assert_eq!(exponents_up_to(2, 2).len(), 6);
    }

    #[test]
    fn fuzz_never_violates() {
        let f = lemma6_fuzz(100, 7, 2, 4, -5, 5, 1_000_000).unwrap();
        assert_eq!(f.violations, 0);
        assert!(f.cases.iter().all(|c| c.ok));
        assert!(f.max_ratio > 0.0 && f.max_ratio <= 1.0);
        let again = lemma6_fuzz(100, 7, 2, 4, -5, 5, 1_000_000).unwrap();
        assert_eq!(f, again);
    }
}
