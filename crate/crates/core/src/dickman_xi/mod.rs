//! The Dickman–de Bruijn function `rho` and the saddle function `xi`.
//!
//! `rho` is the continuous solution of `u rho'(u) = -rho(u - 1)` with
//! `rho = 1` on `[0, 1]` and `rho = 0` for negative arguments. `xi(u)` is the
//! positive root of `(e^xi - 1)/xi = u`; its integrals bracket `rho`:
//!
//! ```text
//! exp(-int_2^{u+1} xi) <= rho(u) <= exp(-int_1^u xi)      (u >= 1)
//! ```

mod table;
mod xi;

pub use table::RhoTable;
pub use xi::XiEvaluator;

use num_rational::Ratio;

use crate::{Error, Result};

/// Default grid spacing of the rho table.
pub fn default_step() -> Ratio<u64> {
    Ratio::new(1, 1024)
}

/// Build a rho table; see [`RhoTable::build`].
pub fn build_rho_table(step: Ratio<u64>, u_max: f64) -> Result<RhoTable> {
    RhoTable::build(step, u_max)
}

/// Bootstrap approximation of `xi(u)`.
///
/// Starts from `log u` and repeatedly substitutes into `xi = log u + log xi`.
/// `rounds` counts terms: one round gives `log u`, two give
/// `log u + log log u`, three give `log u + log(log u + log log u)`, which
/// agrees with `log u + log2 u + log2 u / log u` up to `O((log2 u/log u)^2)`.
pub fn xi_asymptotic(u: f64, rounds: u32) -> Result<f64> {
    if !(u >= 3.0) || !u.is_finite() {
        return Err(Error::domain(format!("xi expansion needs u >= 3, got {u}")));
    }
    if rounds == 0 {
        return Err(Error::domain("xi expansion needs at least one round"));
    }
    let log_u = u.ln();
    let mut x = log_u;
    for _ in 1..rounds {
        x = log_u + x.ln();
    }
    Ok(x)
}

/// `exp{-u [log(u log u) - 1 + (log2 u - 1)/log u]}`.
///
/// The main term of the explicit lower bound for `rho(u)`, with the
/// `O((log2 u / log u)^2)` correction dropped. This is a reference curve, not a
/// certified bound: at `u = 3` it exceeds 1.
pub fn rho_lower_explicit(u: f64) -> Result<f64> {
    Ok(rho_lower_exponent(u)?.exp())
}

/// Natural logarithm of [`rho_lower_explicit`].
pub fn rho_lower_exponent(u: f64) -> Result<f64> {
    if !(u >= 3.0) || !u.is_finite() {
        return Err(Error::domain(format!(
            "explicit rho bound needs u >= 3, got {u}"
        )));
    }
    let log_u = u.ln();
    let log2_u = log_u.ln();
    Ok(-u * ((u * log_u).ln() - 1.0 + (log2_u - 1.0) / log_u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_rounds() {
        let e3 = 3f64.exp();
        assert!((xi_asymptotic(e3, 1).unwrap() - 3.0).abs() < 1e-14);
        let u: f64 = 1e3;
        let two = u.ln() + u.ln().ln();
        assert!((xi_asymptotic(u, 2).unwrap() - two).abs() < 1e-14);
        assert!(xi_asymptotic(2.0, 3).is_err());
        assert!(xi_asymptotic(10.0, 0).is_err());
    }

    #[test]
    fn three_rounds_track_the_root() {
        let ev = XiEvaluator::default();
        for u in [1e3f64, 1e4, 1e6, 1e8] {
            let l = u.ln();
            let band = 2.0 * (l.ln() / l).powi(2);
            let diff = (xi_asymptotic(u, 3).unwrap() - ev.xi(u).unwrap()).abs();
            assert!(diff <= band, "u={u}: {diff} > {band}");
        }
    }

    #[test]
    fn explicit_curve_values() {
        // direct high-precision evaluation of the formula
        assert!((rho_lower_explicit(3.0).unwrap() - 6.658_666_673_920_944).abs() < 1e-12);
        assert!((rho_lower_explicit(10.0).unwrap() / 1.080_991_187_623_615e-9 - 1.0).abs() < 1e-12);
        let u = std::f64::consts::E.exp();
        let direct = (-u * ((u * u.ln()).ln() - 1.0)).exp();
        assert!((rho_lower_explicit(u).unwrap() / direct - 1.0).abs() < 1e-13);
        assert!(rho_lower_explicit(2.9).is_err());
    }
}
