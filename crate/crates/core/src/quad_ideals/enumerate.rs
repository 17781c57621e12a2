use serde::Serialize;

use super::{ExcludedSet, Field, IdealSpec, PrimeIdealSpec};
use crate::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

pub(crate) fn integer_bound(x: f64, what: &str) -> Result<u64> {
    if !x.is_finite() || x < 1.0 {
        return Err(Error::domain(format!(
            "{what} must be a finite value >= 1, got {x}"
        )));
    }
    if x >= u64::MAX as f64 / 4.0 {
        return Err(Error::domain(format!("{what} = {x} is too large")));
    }
    Ok(x.floor() as u64)
}

/// Depth-first walk over ideals of norm `<= x` built from `primes` (sorted by
/// norm). `visit` sees the norm and the `(prime index, exponent)` stack; the
/// unit ideal is visited first.
fn walk<F>(primes: &[PrimeIdealSpec], x: u64, cap: u64, mut visit: F) -> Result<u64>
where
    F: FnMut(u64, &[(usize, u32)]),
{
    let mut count = 1u64;
    if cap == 0 {
        return Err(Error::cap("ideal enumeration", cap));
    }
    visit(1, &[]);
    let mut stack = Vec::new();
    descend(primes, x, 0, 1, &mut stack, &mut count, cap, &mut visit)?;
    Ok(count)
}

#[allow(clippy::too_many_arguments)]
fn descend<F>(
    primes: &[PrimeIdealSpec],
    x: u64,
    start: usize,
    norm: u64,
    stack: &mut Vec<(usize, u32)>,
    count: &mut u64,
    cap: u64,
    visit: &mut F,
) -> Result<()>
where
    F: FnMut(u64, &[(usize, u32)]),
{
    for j in start..primes.len() {
        let q = primes[j].norm;
        if norm > x / q {
            break;
        }
        let mut m = norm * q;
        let mut e = 1;
        loop {
            *count += 1;
            if *count > cap {
                return Err(Error::cap("ideal enumeration", cap));
            }
            stack.push((j, e));
            visit(m, stack);
            descend(primes, x, j + 1, m, stack, count, cap, visit)?;
            stack.pop();
            if m > x / q {
                break;
            }
            m *= q;
            e += 1;
        }
    }
    Ok(())
}

fn smooth_primes(field: &Field, x: u64, y: f64, excluded: &ExcludedSet) -> Vec<PrimeIdealSpec> {
    field.prime_ideals_up_to(y.min(x as f64), excluded)
}

/// Sorted norms (with multiplicity) of the ideals of norm `<= x` composed of
/// prime ideals of norm `<= y` outside `excluded`, the unit ideal included.
pub fn ideal_norms(
    field: &Field,
    x: f64,
    y: f64,
    excluded: &ExcludedSet,
    cap: u64,
) -> Result<Vec<u64>> {
    let xi = integer_bound(x, "X")?;
    if y.is_nan() {
        return Err(Error::domain("Y is NaN"));
    }
    let primes = smooth_primes(field, xi, y, excluded);
    let mut norms = Vec::new();
    walk(&primes, xi, cap, |n, _| norms.push(n))?;
    norms.sort_unstable();
    Ok(norms)
}

/// The ideals counted by [`psi_kt`], with their factorisations, sorted by norm.
pub fn enumerate_ideals(
    field: &Field,
    x: f64,
    y: f64,
    excluded: &ExcludedSet,
    cap: u64,
) -> Result<Vec<IdealSpec>> {
    let xi = integer_bound(x, "X")?;
    let primes = smooth_primes(field, xi, y, excluded);
    let mut out = Vec::new();
    walk(&primes, xi, cap, |n, stack| {
        out.push(IdealSpec {
            factors: stack.iter().map(|&(j, e)| (primes[j], e)).collect(),
            norm: n,
        })
    })?;
    out.sort_by(|a, b| {
        a.norm.cmp(&b.norm).then_with(|| {
            let ka = a.factors.iter().map(|f| (f.0.key(), f.1));
            let kb = b.factors.iter().map(|f| (f.0.key(), f.1));
            ka.cmp(kb)
        })
    });
    Ok(out)
}

/// `N_{K,T}(X)`: ideals of norm `<= X` coprime to every member of `excluded`.
pub fn count_ideals(field: &Field, x: f64, excluded: &ExcludedSet, cap: u64) -> Result<u64> {
    let xi = integer_bound(x, "X")?;
    let primes = smooth_primes(field, xi, x, excluded);
    walk(&primes, xi, cap, |_, _| {})
}

/// `psi_{K,T}(X, Y)`: ideals of norm `<= X` composed of prime ideals of norm
/// `<= Y` outside `excluded`.
pub fn psi_kt(field: &Field, x: f64, y: f64, excluded: &ExcludedSet, cap: u64) -> Result<u64> {
    let xi = integer_bound(x, "X")?;
    if !(y >= 1.0) {
        return Err(Error::domain(format!("psi needs Y >= 1, got {y}")));
    }
    let primes = smooth_primes(field, xi, y, excluded);
    walk(&primes, xi, cap, |_, _| {})
}

/// `Lambda_{K,T}(a)`: `log N p` when `a = p^m` with `p` outside `excluded`, else 0.
pub fn lambda_kt(a: &IdealSpec, excluded: &ExcludedSet) -> f64 {
    match a.factors.as_slice() {
        [(p, e)] if *e >= 1 && !excluded.contains(p) => (p.norm as f64).ln(),
        _ => 0.0,
    }
}

/// Both sides of
/// `psi(X,Y) log X = sum_a log(X / N a) + sum_b Lambda(b) psi(X / N b, Y)`,
/// each computed as a finite sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalEquation {
    pub psi: u64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

pub fn verify_functional_equation(
    field: &Field,
    x: f64,
    y: f64,
    excluded: &ExcludedSet,
    cap: u64,
) -> Result<FunctionalEquation> {
    if !(y >= 2.0) || !(x >= y) || !x.is_finite() {
        return Err(Error::domain(format!(
            "functional equation needs X >= Y >= 2, got X={x}, Y={y}"
        )));
    }
    let xi = integer_bound(x, "X")?;
    let norms = ideal_norms(field, x, y, excluded, cap)?;
    let psi_at = |t: u64| norms.partition_point(|&n| n <= t) as u64;
    let psi = norms.len() as u64;
    let log_x = x.ln();
    let lhs = psi as f64 * log_x;

    let mut rhs = Compensated::default();
    for &n in &norms {
        rhs.add(log_x - (n as f64).ln());
    }
    for p in smooth_primes(field, xi, y, excluded) {
        let lambda = (p.norm as f64).ln();
        let mut q = p.norm;
        loop {
            rhs.add(lambda * psi_at(xi / q) as f64);
            match q.checked_mul(p.norm) {
                Some(next) if next <= xi => q = next,
                _ => break,
            }
        }
    }
    let rhs = rhs.value();
    let residual = if lhs == 0.0 {
        rhs.abs()
    } else {
        (lhs - rhs).abs() / lhs
    };
    Ok(FunctionalEquation {
        psi,
        lhs,
        rhs,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_ideals::QuadField;
    use proptest::prelude::*;

    const CAP: u64 = 10_000_000;

    fn gauss() -> Field {
        Field::Quadratic(QuadField::gaussian())
    }

    fn chi4(e: u64) -> i64 {
        match e % 4 {
            1 => 1,
            3 => -1,
            _ => 0,
        }
    }

    /// Number of Gaussian ideals of norm exactly `m`: `sum_{e | m} chi_{-4}(e)`.
    fn r_gauss(m: u64) -> i64 {
        (1..=m).filter(|e| m % e == 0).map(chi4).sum()
    }

    #[test]
    fn gaussian_counts() {
        let g = gauss();
        let t2 = ExcludedSet::above(&g, 2).unwrap();
        assert_eq!(
            count_ideals(&g, 5.0, &ExcludedSet::empty(), CAP).unwrap(),
            5
        );
        assert_eq!((1..=5).map(r_gauss).sum::<i64>(), 5);
        assert_eq!(count_ideals(&g, 5.0, &t2, CAP).unwrap(), 3);
        assert_eq!(ideal_norms(&g, 5.0, 5.0, &t2, CAP).unwrap(), vec![1, 5, 5]);
        for d in [-1, -3, 2, 5] {
            let f = Field::from_d(d).unwrap();
            assert_eq!(
                count_ideals(&f, 1.0, &ExcludedSet::empty(), CAP).unwrap(),
                1
            );
        }
    }

    #[test]
    fn gaussian_psi() {
        let g = gauss();
        let e = ExcludedSet::empty();
        assert_eq!(psi_kt(&g, 5.0, 5.0, &e, CAP).unwrap(), 5);
        assert_eq!(
            ideal_norms(&g, 10.0, 2.0, &e, CAP).unwrap(),
            vec![1, 2, 4, 8]
        );
        assert_eq!(psi_kt(&g, 1000.0, 1.5, &e, CAP).unwrap(), 1);
        let small = ideal_norms(&g, 10.0, 10.0, &e, CAP).unwrap();
        assert_eq!(small, vec![1, 2, 4, 5, 5, 8, 9, 10, 10]);
        let mut from_oracle = Vec::new();
        for m in 1..=10u64 {
            from_oracle.extend(std::iter::repeat(m).take(r_gauss(m) as usize));
        }
        assert_eq!(small, from_oracle);
    }

    #[test]
    fn divisor_sum_oracle_small() {
        let g = gauss();
        let e = ExcludedSet::empty();
        let mut cum = 0i64;
        for x in 1..=600u64 {
            cum += r_gauss(x);
            assert_eq!(
                count_ideals(&g, x as f64, &e, CAP).unwrap() as i64,
                cum,
                "X={x}"
            );
        }
    }

    #[test]
    fn cap_is_enforced() {
        match count_ideals(&gauss(), 1000.0, &ExcludedSet::empty(), 50) {
            Err(Error::CapExceeded { cap, .. }) => assert_eq!(cap, 50),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rational_specialisation_matches_sieve() {
        let q = Field::Rational;
        let s = crate::smooth_q::SmoothSieve::build(20_000).unwrap();
        for (x, y) in [(20_000.0, 30.0), (10_000.0, 100.0), (777.0, 2.0)] {
            let exact = s.psi(x, y).unwrap().count;
            assert_eq!(psi_kt(&q, x, y, &ExcludedSet::empty(), CAP).unwrap(), exact);
        }
        assert_eq!(
            count_ideals(&q, 1234.5, &ExcludedSet::empty(), CAP).unwrap(),
            1234
        );
    }

    #[test]
    fn lambda_cases() {
        let g = QuadField::gaussian();
        let p2 = g.splitting(2).unwrap()[0];
        let five = g.splitting(5).unwrap();
        let cube = IdealSpec::from_factors(vec![(p2, 3)]).unwrap();
        assert_eq!(lambda_kt(&cube, &ExcludedSet::empty()), 2f64.ln());
        let mixed = IdealSpec::from_factors(vec![(five[0], 1), (five[1], 1)]).unwrap();
        assert_eq!(lambda_kt(&mixed, &ExcludedSet::empty()), 0.0);
        let sq = IdealSpec::from_factors(vec![(p2, 2)]).unwrap();
        assert_eq!(lambda_kt(&sq, &ExcludedSet::from_specs([p2])), 0.0);
        assert_eq!(lambda_kt(&IdealSpec::unit(), &ExcludedSet::empty()), 0.0);
    }

    #[test]
    fn lambda_sums_to_log_norm() {
        let g = gauss();
        let t = ExcludedSet::above(&g, 5).unwrap();
        for a in enumerate_ideals(&g, 2000.0, 2000.0, &t, CAP).unwrap() {
            let s: f64 = a.divisors().iter().map(|b| lambda_kt(b, &t)).sum();
            assert!((s - (a.norm as f64).ln()).abs() < 1e-9, "norm {}", a.norm);
        }
    }

    #[test]
    fn functional_equation_examples() {
        let g = gauss();
        let e = ExcludedSet::empty();
        let t2 = ExcludedSet::above(&g, 2).unwrap();
        assert!(
            verify_functional_equation(&g, 1e4, 50.0, &e, CAP)
                .unwrap()
                .residual
                <= 1e-9
        );
        assert!(
            verify_functional_equation(&g, 1e4, 50.0, &t2, CAP)
                .unwrap()
                .residual
                <= 1e-9
        );
        let e3 = Field::from_d(-3).unwrap();
        assert!(
            verify_functional_equation(&e3, 1e3, 30.0, &e, CAP)
                .unwrap()
                .residual
                <= 1e-9
        );
        assert!(verify_functional_equation(&g, 10.0, 50.0, &e, CAP).is_err());
    }

    proptest! {
        #[test]
        fn psi_chain(d in prop::sample::select(vec![-1i64, -2, -3, -7, 2, 3, 5, 1]),
                     x in 1u64..3000, y in 1u64..3000, excl in any::<bool>()) {
            let f = Field::from_d(d).unwrap();
            let t = if excl { ExcludedSet::above(&f, 2).unwrap() } else { ExcludedSet::empty() };
            let e = ExcludedSet::empty();
            let with_t = psi_kt(&f, x as f64, y as f64, &t, CAP).unwrap();
            let without = psi_kt(&f, x as f64, y as f64, &e, CAP).unwrap();
            let all = count_ideals(&f, x as f64, &e, CAP).unwrap();
            prop_assert!(with_t <= without && without <= all);
            if y >= x {
                prop_assert_eq!(without, all);
            }
        }

        #[test]
        fn functional_equation_is_exact(d in prop::sample::select(vec![-1i64, -3, -7, 2, 5, 1]),
                                        y in 2u64..60, k in 1u64..80) {
            let f = Field::from_d(d).unwrap();
            let x = (y * k) as f64 + 0.5;
            let r = verify_functional_equation(&f, x, y as f64, &ExcludedSet::empty(), CAP).unwrap();
            prop_assert!(r.residual <= 1e-9);
        }
    }
}
