//! Closed-form lower bounds for solution counts and smooth counts, and the
//! choice of `X` given `Y` used by the pigeonhole construction.
//!
//! Every bound is reported as an exponent together with its exponential when
//! the latter is representable as an `f64`; the exponents quickly exceed
//! `ln(f64::MAX)`. Lower-order `o(1)` terms are dropped throughout.

use num_rational::Ratio;
use serde::Serialize;

use crate::{Error, Result};

/// A bound `exp(exponent)`; `value` is absent when it overflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub exponent: f64,
    pub value: Option<f64>,
}

impl BoundValue {
    pub fn from_exponent(exponent: f64) -> Self {
        let v = exponent.exp();
        Self {
            exponent,
            value: v.is_finite().then_some(v),
        }
    }
}

/// Parameters shared by the solution-count bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundQuery {
    /// Number of variables, or field degree.
    pub n: u32,
    /// Number of free variables of the norm form, `1 <= m < n`.
    pub m: u32,
    /// Size of the prime set.
    pub s: f64,
    pub epsilon: f64,
    /// Chebotarev constant of the field.
    #[serde(serialize_with = "ser_ratio")]
    pub c_k: Ratio<u64>,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl BoundQuery {
    pub fn thm1(&self) -> Result<BoundValue> {
        thm1_bound(self.n, self.s, self.epsilon)
    }

    pub fn thm3(&self) -> Result<BoundValue> {
        thm3_bound(self.n, self.m, self.c_k, self.s, self.epsilon)
    }

    pub fn thm4(&self) -> Result<BoundValue> {
        thm4_bound(self.n, self.c_k, self.s, self.epsilon)
    }
}

/// Above `s = exp(n / m)` every solution-count exponent is strictly
/// increasing in `s` (the binding case is the norm-form bound, whose log-derivative
/// is positive once `log s > n/m - 1`).
pub fn monotone_threshold(n: u32, m: u32) -> f64 {
    (n as f64 / m as f64).exp()
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 3.0) || !s.is_finite() {
        return Err(Error::domain(format!("bounds need s >= 3, got {s}")));
    }
    Ok(())
}

fn check_eps(eps: f64, hi: f64) -> Result<()> {
    if !(0.0..=hi).contains(&eps) {
        return Err(Error::domain(format!("epsilon {eps} outside [0, {hi}]")));
    }
    Ok(())
}

fn check_field(n: u32, m: u32, c_k: Ratio<u64>) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be >= 2")));
    }
    if m < 1 || m >= n {
        return Err(Error::domain(format!(
            "m = {m} must satisfy 1 <= m < n = {n}"
        )));
    }
    let c = *c_k.numer() as f64 / *c_k.denom() as f64;
    if !(c >= 1.0 && c <= n as f64) {
        return Err(Error::domain(format!("c_K = {c_k} must lie in [1, {n}]")));
    }
    Ok(c)
}

/// `(1-eps) n^2/(n-1) s^(1-1/n) (log s)^(-1/n)`.
pub fn thm1_exponent(n: u32, s: f64, eps: f64) -> f64 {
    let nf = n as f64;
    (1.0 - eps) * nf * nf / (nf - 1.0) * s.powf(1.0 - 1.0 / nf) * s.ln().powf(-1.0 / nf)
}

/// `(4-eps) s^(1/2) (log s)^(-1/2)`.
pub fn thm2_exponent(s: f64, eps: f64) -> f64 {
    (4.0 - eps) * (s / s.ln()).sqrt()
}

/// `(1-eps) (n/m) (c s)^(m/n) (log s)^(m/n - 1)`.
pub fn thm3_exponent(n: u32, m: u32, c: f64, s: f64, eps: f64) -> f64 {
    let r = m as f64 / n as f64;
    (1.0 - eps) / r * (c * s).powf(r) * s.ln().powf(r - 1.0)
}

/// `(1-eps) n (c s)^(1/n) (log s)^(1/n - 1)`.
pub fn thm4_exponent(n: u32, c: f64, s: f64, eps: f64) -> f64 {
    thm3_exponent(n, 1, c, s, eps)
}

/// Lower bound for the number of non-degenerate solutions in `n` variables.
pub fn thm1_bound(n: u32, s: f64, eps: f64) -> Result<BoundValue> {
    if n < 2 {
        return Err(Error::domain(format!("n = {n} must be >= 2")));
    }
    check_s(s)?;
    check_eps(eps, 1.0)?;
    Ok(BoundValue::from_exponent(thm1_exponent(n, s, eps)))
}

/// Lower bound for the vanishing degree `g(a, S)`.
pub fn thm2_bound(s: f64, eps: f64) -> Result<BoundValue> {
    check_s(s)?;
    check_eps(eps, 4.0)?;
    Ok(BoundValue::from_exponent(thm2_exponent(s, eps)))
}

/// Lower bound for the number of solutions of a norm form equation in `m` variables.
pub fn thm3_bound(n: u32, m: u32, c_k: Ratio<u64>, s: f64, eps: f64) -> Result<BoundValue> {
    let c = check_field(n, m, c_k)?;
    check_s(s)?;
    check_eps(eps, 1.0)?;
    Ok(BoundValue::from_exponent(thm3_exponent(n, m, c, s, eps)))
}

/// Lower bound for the vanishing degree of the norm form solutions.
pub fn thm4_bound(n: u32, c_k: Ratio<u64>, s: f64, eps: f64) -> Result<BoundValue> {
    let c = check_field(n, 1, c_k)?;
    check_s(s)?;
    check_eps(eps, 1.0)?;
    Ok(BoundValue::from_exponent(thm4_exponent(n, c, s, eps)))
}

/// `log X - u [log(u log u) - 1 + (log2 u - 1)/log u + C (log2 u / log u)^2]`.
pub fn smooth_lower_exponent(x: f64, y: f64, c: f64) -> f64 {
    let u = x.ln() / y.ln();
    let lu = u.ln();
    let llu = lu.ln();
    x.ln() - u * ((u * lu).ln() - 1.0 + (llu - 1.0) / lu + c * (llu / lu).powi(2))
}

fn check_u(x: f64, y: f64) -> Result<f64> {
    if !(x.is_finite() && y.is_finite()) || !(y > 1.0) {
        return Err(Error::domain(format!(
            "need finite X and Y > 1, got X={x}, Y={y}"
        )));
    }
    let u = x.ln() / y.ln();
    if !(u >= 3.0) {
        return Err(Error::domain(format!("u = log X/log Y = {u} must be >= 3")));
    }
    Ok(u)
}

/// Lower bound for `psi(X, Y)` with the constant `c`; also serves the field
/// analogue `psi_K`, which has the same shape with a field constant.
pub fn cep_bound(x: f64, y: f64, c: f64) -> Result<BoundValue> {
    if !(y >= 3.0) {
        return Err(Error::domain(format!(
            "smooth lower bound needs Y >= 3, got {y}"
        )));
    }
    check_u(x, y)?;
    Ok(BoundValue::from_exponent(smooth_lower_exponent(x, y, c)))
}

/// The same right-hand side for `psi_{K,T}`, with `c` standing in for the
/// field- and `T`-dependent constant.
pub fn ideal_lower_bound(x: f64, y: f64, c: f64) -> Result<BoundValue> {
    check_u(x, y)?;
    Ok(BoundValue::from_exponent(smooth_lower_exponent(x, y, c)))
}

/// `X = Y^u` with `u log u = Y^(1 - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XChoice {
    pub u: f64,
    pub log_x: f64,
    /// `Y^u`, absent when it overflows.
    pub x: Option<f64>,
    /// `2/(1-alpha) Y^(1-alpha)`, the bound `log X` stays below.
    pub log_x_bound: f64,
}

/// Solves `u log u = Y^(1-alpha)` for `u > 1` by bisection.
///
/// `log X <= 2/(1-alpha) Y^(1-alpha)` holds for every `Y`: with
/// `R = Y^(1-alpha)` it is equivalent to `R <= u^2`, i.e. `log u <= u`.
pub fn lemma8_choose_x(y: f64, alpha: f64) -> Result<XChoice> {
    if !(y >= 3.0) || !y.is_finite() {
        return Err(Error::domain(format!("choice of X needs Y >= 3, got {y}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let r = y.powf(1.0 - alpha);
    let u = solve_u_log_u(r);
    let log_x = u * y.ln();
    let x = log_x.exp();
    Ok(XChoice {
        u,
        log_x,
        x: x.is_finite().then_some(x),
        log_x_bound: 2.0 / (1.0 - alpha) * r,
    })
}

/// Root `u > 1` of `u log u = r` for `r > 0`.
pub fn solve_u_log_u(r: f64) -> f64 {
    debug_assert!(r > 0.0);
    let f = |u: f64| u * u.ln();
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    while f(hi) < r {
        lo = hi;
        hi *= 2.0;
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < r {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (f(lo) - r).abs() <= (f(hi) - r).abs() {
        lo
    } else {
        hi
    }
}
