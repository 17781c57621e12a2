use std::collections::HashMap;
use std::sync::Mutex;

use crate::{Error, Result};

const CACHE_LIMIT: usize = 1 << 16;
const QUAD_TOLERANCE: f64 = 1e-11;

/// Solver for `xi(u)`, the positive root of `(e^xi - 1) / xi = u`.
///
/// Results of [`XiEvaluator::xi`] are memoised behind a mutex; concurrent
/// callers may solve the same `u` twice but always see residual-checked values.
#[derive(Debug)]
pub struct XiEvaluator {
    tolerance: f64,
    cache: Mutex<HashMap<u64, f64>>,
}

impl Default for XiEvaluator {
    fn default() -> Self {
        Self::new(1e-12).expect("default tolerance is valid")
    }
}

impl XiEvaluator {
    /// `tolerance` bounds the relative residual `|(e^xi-1)/xi - u| / u`.
    pub fn new(tolerance: f64) -> Result<Self> {
        if !(1e-14..=1e-2).contains(&tolerance) {
            return Err(Error::invalid(format!(
                "xi tolerance {tolerance} outside [1e-14, 1e-2]"
            )));
        }
        Ok(Self {
            tolerance,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn xi(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::domain(format!("xi({u}) is not defined")));
        }
        if u <= 1.0 {
            return Err(Error::domain(format!("xi(u) needs u > 1, got {u}")));
        }
        let key = u.to_bits();
        if let Some(&v) = self.cache.lock().expect("xi cache poisoned").get(&key) {
            return Ok(v);
        }
        let v = solve_xi(u, self.tolerance);
        let mut cache = self.cache.lock().expect("xi cache poisoned");
        if cache.len() < CACHE_LIMIT {
            cache.insert(key, v);
        }
        Ok(v)
    }

    /// Snapshot of the memoised `(u, xi)` pairs, sorted by `u`.
    pub fn cached(&self) -> Vec<(f64, f64)> {
        let cache = self.cache.lock().expect("xi cache poisoned");
        let mut out: Vec<(f64, f64)> = cache
            .iter()
            .map(|(&k, &v)| (f64::from_bits(k), v))
            .collect();
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// `int_a^b xi(t) dt` for `1 <= a <= b`, with `xi(1) = 0` by continuity.
    pub fn xi_integral(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::domain("non-finite integration bounds"));
        }
        if a < 1.0 || b < a {
            return Err(Error::domain(format!(
                "xi integral needs 1 <= a <= b, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let tol = self.tolerance;
        let f = |t: f64| xi_or_zero(t, tol);
        // unit panels keep the recursion shallow on long ranges
        let mut total = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = (lo.floor() + 1.0).min(b);
            total += adaptive_simpson(&f, lo, hi, QUAD_TOLERANCE * (hi - lo).max(1e-3));
            lo = hi;
        }
        Ok(total)
    }

    /// `F[k] = int_a^{a + k*step} xi(t) dt` for `k = 0..=count`.
    pub fn cumulative_integral(&self, a: f64, step: f64, count: usize) -> Result<Vec<f64>> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::domain("cumulative integral step must be positive"));
        }
        let mut out = Vec::with_capacity(count + 1);
        out.push(0.0);
        let mut acc = 0.0;
        for k in 1..=count {
            let lo = a + (k - 1) as f64 * step;
            let hi = a + k as f64 * step;
            acc += self.xi_integral(lo, hi)?;
            out.push(acc);
        }
        Ok(out)
    }

    /// `(exp(-int_2^{u+1} xi), exp(-int_1^u xi))`, the two sides of the
    /// sandwich around `rho(u)`.
    pub fn rho_bounds_lemma2(&self, u: f64) -> Result<(f64, f64)> {
        if !(u >= 1.0) {
            return Err(Error::domain(format!("rho bounds need u >= 1, got {u}")));
        }
        let lower = (-self.xi_integral(2.0, u + 1.0)?).exp();
        let upper = (-self.xi_integral(1.0, u)?).exp();
        Ok((lower, upper))
    }
}

/// `(e^x - 1) / x`, continuous at zero.
pub(crate) fn growth(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.exp_m1() / x
    }
}

fn growth_derivative(x: f64) -> f64 {
    if x < 1e-4 {
        0.5 + x / 3.0 + x * x / 8.0
    } else {
        (x * x.exp() - x.exp_m1()) / (x * x)
    }
}

fn xi_or_zero(t: f64, tol: f64) -> f64 {
    if t <= 1.0 {
        0.0
    } else {
        solve_xi(t, tol)
    }
}

/// Bracketed Newton iteration, falling back to bisection whenever a Newton
/// step leaves the bracket.
pub(crate) fn solve_xi(u: f64, tol: f64) -> f64 {
    debug_assert!(u > 1.0);
    let target = tol * u;
    let mut lo = 0.0f64;
    let mut hi = (u * u.ln() + 2.0).ln().max(1.0);
    while growth(hi) < u {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = (u * u.ln() + 2.0).ln();
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..400 {
        let r = growth(x) - u;
        if r.abs() <= target {
            return x;
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let next = x - r / growth_derivative(x);
        x = if next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    x
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, eps: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, eps, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
}
