use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use serde::Serialize;

use super::{
    nondegenerate_terms, rational_prime_support, ser_rational, ser_rationals, SUnitInstance,
    Solution,
};
use crate::bounds::{lemma8_choose_x, thm1_exponent};
use crate::primes::{first_primes, next_prime};
use crate::smooth_q::SmoothSieve;
use crate::{Error, Result};

/// Resource limits of [`construct_thm1`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thm1Limits {
    /// Largest number of smooth values per coordinate.
    pub enumeration_cap: u64,
    /// Largest number of tuples `psi(X, Y)^n` that will be bucketed.
    pub tuple_cap: u64,
    /// Largest number of distinct bucket keys held in memory.
    pub bucket_cap: u64,
}

impl Default for Thm1Limits {
    fn default() -> Self {
        Self {
            enumeration_cap: 10_000_000,
            tuple_cap: 200_000_000,
            bucket_cap: 1 << 24,
        }
    }
}

/// Parameters, pigeonhole data and bound comparison of one construction run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionReport {
    pub n: usize,
    #[serde(serialize_with = "ser_rationals")]
    pub a: Vec<BigRational>,
    pub s: usize,
    pub epsilon: f64,
    pub t: usize,
    #[serde(rename = "Y")]
    pub y: u64,
    #[serde(rename = "T")]
    pub t_primes: Vec<u64>,
    /// Root of `u log u = Y^(1 - 1/n)`.
    pub u: f64,
    /// `log X` of the unconstrained choice.
    pub log_x_choice: f64,
    /// The range actually enumerated: `min(floor(Y^u), sieve limit)`.
    #[serde(rename = "X")]
    pub x: u64,
    pub x_capped: bool,
    /// `psi(X, Y)`, values per coordinate.
    pub smooth_count: u64,
    pub total_tuples: u64,
    pub buckets: u64,
    pub bucket_size: u64,
    /// `ceil(total_tuples / buckets)`.
    pub guaranteed: u64,
    #[serde(serialize_with = "ser_rational")]
    pub a0: BigRational,
    #[serde(rename = "R")]
    pub r_primes: Vec<u64>,
    #[serde(rename = "S")]
    pub s_primes: Vec<u64>,
    /// `(bucket size, number of buckets of that size)`, ascending.
    pub bucket_histogram: Vec<(u64, u64)>,
    /// Exponent of the asymptotic solution-count bound, for comparison only.
    pub bound_exponent: f64,
    pub log_bucket_size: f64,
}

/// Pigeonhole construction of many non-degenerate solutions.
///
/// With `t = floor((1 - eps/2) s)`, `Y = p_t` and `X` chosen from
/// `u log u = Y^(1 - 1/n)`, every tuple of `Y`-smooth `y_i <= X` gives the
/// positive value `sum |a_i| y_i`. The most popular value `a0` yields the
/// solutions `x_i = sign(a_i) y_i / a0` of `sum a_i x_i = 1`, S-units for
/// `S = T ∪ R` padded with the next primes, `R` the primes of `a0`.
/// Ties between largest buckets go to the smallest `a0`.
pub fn construct_thm1(
    a: &[BigRational],
    s: usize,
    eps: f64,
    sieve: &SmoothSieve,
    limits: Thm1Limits,
) -> Result<(ConstructionReport, Vec<Solution>)> {
    let n = a.len();
    if n < 2 {
        return Err(Error::invalid("the construction needs n >= 2 coefficients"));
    }
    SUnitInstance::new(a.to_vec(), vec![])?;
    if !(0.0..=1.0).contains(&eps) || eps == 0.0 {
        return Err(Error::domain(format!("epsilon {eps} must lie in (0, 1]")));
    }
    let t = ((1.0 - eps / 2.0) * s as f64).floor() as usize;
    if t < 2 {
        return Err(Error::domain(format!("t = {t} must be >= 2 (increase s)")));
    }
    let t_primes = first_primes(t);
    let y = t_primes[t - 1];
    let choice = lemma8_choose_x(y as f64, 1.0 / n as f64)?;
    let x_choice = choice
        .x
        .map_or(u64::MAX, |x| x.floor().min(u64::MAX as f64) as u64);
    let x = x_choice.min(sieve.limit());
    let values = sieve.psi_enumerate(x as f64, y as f64, limits.enumeration_cap)?;
    let m = values.len() as u64;
    let total = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > limits.tuple_cap as u128 {
        return Err(Error::cap(
            format!("{total} tuples to bucket"),
            limits.tuple_cap,
        ));
    }
    let total = total as u64;

    // integer weights |a_i| * D, D the lcm of the denominators
    let d = a.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    let weights: Vec<u64> = a
        .iter()
        .map(|q| {
            (q.abs() * BigRational::from_integer(d.clone()))
                .to_integer()
                .to_u64()
        })
        .collect::<Option<_>>()
        .ok_or_else(|| Error::invalid("coefficients too large for bucketing"))?;
    let key_max: u128 = weights.iter().map(|&w| w as u128 * x as u128).sum();

    let mut hist = Histogram::new(key_max, total, limits.bucket_cap)?;
    for_each_key(&values, &weights, |key, _| hist.add(key))?;
    hist.check()?;
    let (best_key, bucket_size) = hist.best();
    let buckets = hist.nonempty();
    let bucket_histogram = hist.size_distribution();

    let a0 = BigRational::new(BigInt::from(best_key), d);
    let r_primes = rational_prime_support(&a0)?;
    let mut s_set: BTreeSet<u64> = t_primes
        .iter()
        .copied()
        .chain(r_primes.iter().copied())
        .collect();
    if s_set.len() > s {
        return Err(Error::Construction(format!(
            "T ∪ R has {} primes, more than s = {s}",
            s_set.len()
        )));
    }
    let mut p = y;
    while s_set.len() < s {
        p = next_prime(p);
        s_set.insert(p);
    }
    let s_primes: Vec<u64> = s_set.into_iter().collect();

    let inst = SUnitInstance::new(a.to_vec(), s_primes.clone())?;
    let signs: Vec<BigRational> = a
        .iter()
        .map(|q| {
            if q.is_negative() {
                -BigRational::one()
            } else {
                BigRational::one()
            }
        })
        .collect();
    let mut solutions = Vec::with_capacity(bucket_size as usize);
    let mut failure = None;
    for_each_key(&values, &weights, |key, ys| {
        if key != best_key {
            return;
        }
        let xs: Vec<BigRational> = ys
            .iter()
            .zip(&signs)
            .map(|(&yv, e)| e * BigRational::from_integer(BigInt::from(yv)) / &a0)
            .collect();
        let terms: Vec<BigRational> = a.iter().zip(&xs).map(|(a, x)| a * x).collect();
        if !inst.is_solution(&xs) || !nondegenerate_terms(&terms).unwrap_or(false) {
            failure.get_or_insert_with(|| format!("{xs:?}"));
        }
        solutions.push(Solution { x: xs });
    })?;
    if let Some(bad) = failure {
        return Err(Error::Construction(format!(
            "constructed tuple {bad} failed verification"
        )));
    }

    let report = ConstructionReport {
        n,
        a: a.to_vec(),
        s,
        epsilon: eps,
        t,
        y,
        t_primes,
        u: choice.u,
        log_x_choice: choice.log_x,
        x,
        x_capped: x < x_choice,
        smooth_count: m,
        total_tuples: total,
        buckets,
        bucket_size,
        guaranteed: total.div_ceil(buckets),
        a0,
        r_primes,
        s_primes,
        bucket_histogram,
        bound_exponent: thm1_exponent(n as u32, s as f64, eps),
        log_bucket_size: (bucket_size as f64).ln(),
    };
    Ok((report, solutions))
}

/// Calls `f(sum w_i y_i, ys)` for every tuple of `values`, in lexicographic order.
fn for_each_key<F: FnMut(u128, &[u64])>(values: &[u64], weights: &[u64], mut f: F) -> Result<()> {
    let n = weights.len();
    let mut ys = vec![0u64; n];
    fn rec<F: FnMut(u128, &[u64])>(
        level: usize,
        partial: u128,
        values: &[u64],
        weights: &[u64],
        ys: &mut [u64],
        f: &mut F,
    ) {
        let w = weights[level] as u128;
        if level + 1 == weights.len() {
            for &v in values {
                ys[level] = v;
                f(partial + w * v as u128, ys);
            }
            return;
        }
        for &v in values {
            ys[level] = v;
            rec(level + 1, partial + w * v as u128, values, weights, ys, f);
        }
    }
    if n > 0 {
        rec(0, 0, values, weights, &mut ys, &mut f);
    }
    Ok(())
}

enum Histogram {
    Dense(Vec<u32>),
    Sparse {
        map: HashMap<u128, u64>,
        cap: u64,
        overflow: bool,
    },
}

impl Histogram {
    fn new(key_max: u128, total: u64, cap: u64) -> Result<Self> {
        if key_max < cap as u128 && total < u32::MAX as u64 {
            Ok(Self::Dense(vec![0; key_max as usize + 1]))
        } else {
            Ok(Self::Sparse {
                map: HashMap::new(),
                cap,
                overflow: false,
            })
        }
    }

    fn add(&mut self, key: u128) {
        match self {
            Self::Dense(v) => v[key as usize] += 1,
            Self::Sparse { map, cap, overflow } => {
                if let Some(c) = map.get_mut(&key) {
                    *c += 1;
                } else if (map.len() as u64) < *cap {
                    map.insert(key, 1);
                } else {
                    *overflow = true;
                }
            }
        }
    }

    fn check(&self) -> Result<()> {
        match self {
            Self::Sparse {
                overflow: true,
                cap,
                ..
            } => Err(Error::cap("distinct bucket values", *cap)),
            _ => Ok(()),
        }
    }

    /// Largest bucket, smallest key on ties.
    fn best(&self) -> (u128, u64) {
        match self {
            Self::Dense(v) => {
                let mut best = (0u128, 0u64);
                for (k, &c) in v.iter().enumerate() {
                    if c as u64 > best.1 {
                        best = (k as u128, c as u64);
                    }
                }
                best
            }
            Self::Sparse { map, .. } => map
                .iter()
                .map(|(&k, &c)| (k, c))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .unwrap_or((0, 0)),
        }
    }

    fn nonempty(&self) -> u64 {
        match self {
            Self::Dense(v) => v.iter().filter(|&&c| c > 0).count() as u64,
            Self::Sparse { map, .. } => map.len() as u64,
        }
    }

    fn size_distribution(&self) -> Vec<(u64, u64)> {
        let mut dist = BTreeMap::new();
        match self {
            Self::Dense(v) => v
                .iter()
                .filter(|&&c| c > 0)
                .for_each(|&c| *dist.entry(c as u64).or_insert(0) += 1),
            Self::Sparse { map, .. } => {
                map.values().for_each(|&c| *dist.entry(c).or_insert(0) += 1)
            }
        }
        dist.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sunit::{check_nondegenerate, is_s_unit, parse_rational_list};

    #[test]
    fn small_instance_is_consistent() {
        let sieve = SmoothSieve::build(200_000).unwrap();
        let a = parse_rational_list("1,1").unwrap();
        let (rep, sols) = construct_thm1(&a, 6, 0.5, &sieve, Thm1Limits::default()).unwrap();
        assert_eq!(rep.t, 4);
        assert_eq!(rep.y, 7);
        assert_eq!(rep.t_primes, vec![2, 3, 5, 7]);
        assert_eq!(rep.total_tuples, rep.smooth_count * rep.smooth_count);
        let hist_total: u64 = rep.bucket_histogram.iter().map(|(size, k)| size * k).sum();
        assert_eq!(hist_total, rep.total_tuples);
        assert_eq!(
            rep.bucket_histogram.iter().map(|h| h.1).sum::<u64>(),
            rep.buckets
        );
        assert_eq!(rep.bucket_histogram.last().unwrap().0, rep.bucket_size);
        assert!(rep.bucket_size >= rep.guaranteed);
        assert_eq!(sols.len() as u64, rep.bucket_size);
        assert_eq!(rep.s_primes.len(), 6);
        let inst = SUnitInstance::new(a, rep.s_primes.clone()).unwrap();
        for s in &sols {
            assert!(inst.is_solution(&s.x));
            assert!(check_nondegenerate(&inst, s).unwrap());
        }
    }

    #[test]
    fn signs_and_weights() {
        let sieve = SmoothSieve::build(200_000).unwrap();
        let a = parse_rational_list("3/2,-1").unwrap();
        let (rep, sols) = construct_thm1(&a, 8, 0.5, &sieve, Thm1Limits::default()).unwrap();
        assert!(!sols.is_empty());
        for s in &sols {
            assert!(s.x[1] < BigRational::from_integer(0.into()));
            assert!(s.x.iter().all(|q| is_s_unit(q, &rep.s_primes).unwrap()));
        }
    }

    #[test]
    fn caps_and_domain() {
        let sieve = SmoothSieve::build(1_000).unwrap();
        let a = parse_rational_list("1,1").unwrap();
        let (rep, _) = construct_thm1(&a, 12, 0.5, &sieve, Thm1Limits::default()).unwrap();
        assert!(rep.x_capped);
        assert_eq!(rep.x, 1000);
        let tight = Thm1Limits {
            tuple_cap: 10,
            ..Thm1Limits::default()
        };
        assert!(matches!(
            construct_thm1(&a, 12, 0.5, &sieve, tight),
            Err(Error::CapExceeded { .. })
        ));
        assert!(construct_thm1(&a, 2, 0.5, &sieve, Thm1Limits::default()).is_err());
        assert!(construct_thm1(&a[..1], 12, 0.5, &sieve, Thm1Limits::default()).is_err());
    }
}
