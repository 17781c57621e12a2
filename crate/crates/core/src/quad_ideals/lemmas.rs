use serde::Serialize;

use super::enumerate::{ideal_norms, integer_bound, Compensated};
use super::{ExcludedSet, Field};
use crate::bounds::{ideal_lower_bound, BoundValue};
use crate::dickman_xi::RhoTable;
use crate::{Error, Result};

/// Calls `f(norm of p, norm of p^e)` for every prime power ideal `p^e` with
/// `N p^e <= y` and `p` outside `excluded`.
fn prime_powers<F: FnMut(u64, u64)>(field: &Field, y: f64, excluded: &ExcludedSet, mut f: F) {
    if !(y >= 2.0) {
        return;
    }
    let yi = if y.is_finite() {
        y.floor() as u64
    } else {
        u64::MAX
    };
    for p in field.prime_ideals_up_to(y, excluded) {
        let mut q = p.norm;
        loop {
            f(p.norm, q);
            match q.checked_mul(p.norm) {
                Some(next) if next <= yi => q = next,
                _ => break,
            }
        }
    }
}

/// `(sum, drift)` with `sum = sum_{N a <= Y} Lambda(a) / N a` and
/// `drift = sum - log Y`, an empirical estimate of the constant term.
pub fn mertens_sum(field: &Field, y: f64, excluded: &ExcludedSet) -> Result<(f64, f64)> {
    if !(y >= 1.0) || !y.is_finite() {
        return Err(Error::domain(format!(
            "Mertens sum needs finite Y >= 1, got {y}"
        )));
    }
    let mut sum = Compensated::default();
    prime_powers(field, y, excluded, |np, q| {
        sum.add((np as f64).ln() / q as f64)
    });
    let s = sum.value();
    Ok((s, s - y.ln()))
}

/// Infimum of `N_{K,T}(Y) / Y` over `1 <= Y <= y_probe`.
///
/// The counting function is a step function, so the infimum over each
/// constant stretch is approached just below the next jump; the value at
/// `y_probe` itself closes the range.
pub fn delta_lower(field: &Field, excluded: &ExcludedSet, y_probe: f64, cap: u64) -> Result<f64> {
    if !(y_probe >= 2.0) {
        return Err(Error::domain(format!(
            "Delta probe needs Y >= 2, got {y_probe}"
        )));
    }
    integer_bound(y_probe, "Y")?;
    let norms = ideal_norms(field, y_probe, y_probe, excluded, cap)?;
    let mut best = f64::INFINITY;
    let mut i = 0;
    while i < norms.len() {
        let m = norms[i];
        let mut j = i;
        while j < norms.len() && norms[j] == m {
            j += 1;
        }
        // N(Y) = j on [m, next jump)
        let next = norms.get(j).map_or(y_probe, |&n| n as f64);
        best = best.min(j as f64 / next);
        i = j;
    }
    Ok(best)
}

/// `(sum, main_term)` for
/// `S_theta = sum_{N a <= Y^theta} Lambda(a)/N a * rho(u - log N a / log Y)`
/// against `log Y * int_0^theta rho(u - v) dv`.
pub fn s_theta(
    field: &Field,
    u: f64,
    y: f64,
    theta: f64,
    excluded: &ExcludedSet,
    table: &RhoTable,
) -> Result<(f64, f64)> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::domain(format!("theta = {theta} must lie in (0, 1]")));
    }
    if !(u >= 1.0) || !(y >= 2.0) || !y.is_finite() {
        return Err(Error::domain(format!(
            "S_theta needs u >= 1 and Y >= 2, got u={u}, Y={y}"
        )));
    }
    let log_y = y.ln();
    let main = log_y * table.integral(u - theta, u)?;
    let mut sum = Compensated::default();
    let mut err = None;
    prime_powers(field, y.powf(theta), excluded, |np, q| {
        match table.rho(u - (q as f64).ln() / log_y) {
            Ok(r) => sum.add((np as f64).ln() / q as f64 * r),
            Err(e) => err = Some(e),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok((sum.value(), main))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub v: f64,
    pub count: u64,
    /// `psi_{K,T}(Y^v, Y) / (Y^v rho(v))`.
    pub ratio: f64,
    /// Infimum of `ratio` over the grid points up to `v`.
    pub running_inf: f64,
}

/// Samples `psi_{K,T}(Y^v, Y) / (Y^v rho(v))` on `v = 0, v_step, ..., <= u_max`.
pub fn delta_profile(
    field: &Field,
    excluded: &ExcludedSet,
    y: f64,
    u_max: f64,
    v_step: f64,
    table: &RhoTable,
    cap: u64,
) -> Result<Vec<ProfilePoint>> {
    if !(y >= 2.0) || !(u_max >= 1.0) || !(v_step > 0.0) || !y.is_finite() {
        return Err(Error::domain(
            "profile needs Y >= 2, u_max >= 1 and a positive step",
        ));
    }
    let x_max = y.powf(u_max);
    if !(x_max <= cap as f64) {
        return Err(Error::cap(
            format!("profile range Y^u_max = {x_max:e}"),
            cap,
        ));
    }
    let norms = ideal_norms(field, x_max, y, excluded, cap)?;
    let steps = (u_max / v_step + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut inf = f64::INFINITY;
    for k in 0..=steps {
        let v = k as f64 * v_step;
        let t = y.powf(v);
        let limit = (t * (1.0 + 1e-12)).floor() as u64;
        let count = norms.partition_point(|&n| n <= limit) as u64;
        let ratio = count as f64 / (t * table.rho(v)?);
        inf = inf.min(ratio);
        out.push(ProfilePoint {
            v,
            count,
            ratio,
            running_inf: inf,
        });
    }
    Ok(out)
}

/// Lower bound for `psi_{K,T}(X, Y)` with `c` standing in for the effective
/// constant; needs `u = log X / log Y >= 3`.
pub fn theorem5_bound(x: f64, y: f64, c: f64) -> Result<BoundValue> {
    ideal_lower_bound(x, y, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_ideals::{count_ideals, psi_kt, QuadField};
    use num_rational::Ratio;
    use std::sync::OnceLock;

    const CAP: u64 = 10_000_000;

    fn table() -> &'static RhoTable {
        static T: OnceLock<RhoTable> = OnceLock::new();
        T.get_or_init(|| RhoTable::build(Ratio::new(1, 1024), 16.0).unwrap())
    }

    fn gauss() -> Field {
        Field::Quadratic(QuadField::gaussian())
    }

    #[test]
    fn mertens_small() {
        let (s, d) = mertens_sum(&gauss(), 4.0, &ExcludedSet::empty()).unwrap();
        assert!((s - 2f64.ln() * 0.75).abs() < 1e-15);
        assert!((d - (s - 4f64.ln())).abs() < 1e-15);
        assert_eq!(
            mertens_sum(&gauss(), 1.999, &ExcludedSet::empty())
                .unwrap()
                .0,
            0.0
        );
    }

    #[test]
    fn mertens_drift_stabilises() {
        let (_, d1) = mertens_sum(&gauss(), 1e5, &ExcludedSet::empty()).unwrap();
        let (_, d2) = mertens_sum(&gauss(), 2e5, &ExcludedSet::empty()).unwrap();
        assert!((d1 - d2).abs() <= 0.05, "{d1} vs {d2}");
    }

    #[test]
    fn delta_examples() {
        let g = gauss();
        let e = ExcludedSet::empty();
        assert!((delta_lower(&g, &e, 10.0, CAP).unwrap() - 0.5).abs() < 1e-15);
        let t2 = ExcludedSet::above(&g, 2).unwrap();
        assert_eq!(delta_lower(&g, &t2, 2.0, CAP).unwrap(), 0.5);
        assert_eq!(delta_lower(&g, &e, 2.0, CAP).unwrap(), 0.5);
        assert!(delta_lower(&g, &t2, 30.0, CAP).unwrap() < delta_lower(&g, &e, 30.0, CAP).unwrap());
        assert!(delta_lower(&g, &e, 1.5, CAP).is_err());
    }

    #[test]
    fn delta_is_below_every_sampled_ratio() {
        let g = gauss();
        let t = ExcludedSet::above(&g, 5).unwrap();
        let d = delta_lower(&g, &t, 500.0, CAP).unwrap();
        for y in 1..=500 {
            let n = count_ideals(&g, y as f64, &t, CAP).unwrap();
            assert!(n as f64 / y as f64 >= d);
            let below = count_ideals(&g, (y as f64 - 1e-9).max(1.0), &t, CAP).unwrap();
            assert!(below as f64 / y as f64 >= d - 1e-12);
        }
    }

    #[test]
    fn s_theta_agreement() {
        let t = table();
        let (s, m) = s_theta(&gauss(), 3.0, 1e3, 1.0, &ExcludedSet::empty(), t).unwrap();
        assert!(((s - m) / m).abs() <= 0.15, "{s} vs {m}");
        let (s, m) = s_theta(&Field::Rational, 2.0, 1e4, 1.0, &ExcludedSet::empty(), t).unwrap();
        assert!(((s - m) / m).abs() <= 0.15, "{s} vs {m}");
        let (s, m) = s_theta(&gauss(), 3.0, 1e3, 0.05, &ExcludedSet::empty(), t).unwrap();
        assert_eq!(s, 0.0);
        assert!(m > 0.0 && m <= 1e3f64.ln() * 0.05 * t.rho(2.95).unwrap());
        assert!(s_theta(&gauss(), 3.0, 1e3, 0.0, &ExcludedSet::empty(), t).is_err());
    }

    #[test]
    fn profile() {
        let t = table();
        let rows = delta_profile(
            &Field::Rational,
            &ExcludedSet::empty(),
            100.0,
            2.0,
            1.0 / 16.0,
            t,
            CAP,
        )
        .unwrap();
        assert_eq!(rows[0].ratio, 1.0);
        assert_eq!(rows.len(), 33);
        assert!(rows.iter().all(|r| (0.5..=1.5).contains(&r.ratio)));
        let g = gauss();
        let e = ExcludedSet::empty();
        let d = delta_lower(&g, &e, 50.0, CAP).unwrap();
        let rows = delta_profile(&g, &e, 50.0, 2.0, 1.0 / 8.0, t, CAP).unwrap();
        for r in rows.iter().filter(|r| r.v <= 1.0) {
            assert!(r.running_inf >= d);
        }
        assert!(rows
            .windows(2)
            .all(|w| w[1].running_inf <= w[0].running_inf));
        assert!(delta_profile(&g, &e, 100.0, 4.0, 0.5, t, CAP).is_err());
    }

    #[test]
    fn density_near_u_two() {
        let t = table();
        let x = 1e6;
        for (f, excl) in [
            (gauss(), ExcludedSet::empty()),
            (gauss(), ExcludedSet::above(&gauss(), 2).unwrap()),
            (Field::Rational, ExcludedSet::empty()),
        ] {
            let a = count_ideals(&f, x, &excl, CAP).unwrap() as f64 / x;
            for u in [1.5, 2.0] {
                let y = x.powf(1.0 / u);
                let psi = psi_kt(&f, x, y, &excl, CAP).unwrap() as f64;
                let r = psi / (a * x * t.rho(u).unwrap());
                assert!((r - 1.0).abs() <= 0.2, "{f} u={u}: {r}");
            }
        }
    }

    #[test]
    fn theorem5() {
        let v = theorem5_bound(1e9, 1e2, 10.0).unwrap();
        assert!(v.value.unwrap() > 0.0 && v.value.unwrap() < 1e9);
        let c0 = theorem5_bound(1e9, 1e2, 0.0).unwrap();
        let rl = crate::dickman_xi::rho_lower_explicit(4.5).unwrap();
        assert!((c0.value.unwrap() / (1e9 * rl) - 1.0).abs() < 1e-9);
        assert!(theorem5_bound(1e5, 1e2, 1.0).is_err());
    }
}
