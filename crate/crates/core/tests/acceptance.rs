//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Oracles here are written independently of the library code paths they
//! check (closed forms, trial division, divisor sums, direct quadrature).

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smoothforge::bounds::thm1_bound;
use smoothforge::config::Config;
use smoothforge::dickman_xi::{build_rho_table, default_step, xi_asymptotic, RhoTable, XiEvaluator};
use smoothforge::normpoly::{count_rn_solutions, order_primes, NormPoly, QuadElement};
use smoothforge::quad_ideals::{ideal_norms, count_ideals, s_theta, verify_functional_equation, ExcludedSet, Field, QuadField};
use smoothforge::smooth_q::SmoothSieve;
use smoothforge::sunit::{
    check_nondegenerate, construct_thm1, enumerate_solutions, is_s_unit, lemma6_fuzz, lift_solutions,
    min_vanishing_degree, parse_rational_list, SUnitInstance, Solution, Thm1Limits,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(checks: &[(bool, String)]) -> Outcome {
    let failed: Vec<&str> = checks.iter().filter(|c| !c.0).map(|c| c.1.as_str()).collect();
    let detail = if failed.is_empty() {
        checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; ")
    } else {
        format!("failed: {}", failed.join("; "))
    };
    Outcome {
        pass: failed.is_empty(),
        detail,
    }
}

fn run(n: u32, name: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f));
    let took = start.elapsed();
    let (mut pass, mut detail) = match res {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(b) = budget {
        if took > b {
            pass = false;
            detail = format!("{detail}; runtime {took:?} over {b:?}");
        }
    }
    println!(
        "criterion {n:>2} [{}] {name}: {detail} ({:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    pass
}

fn table() -> RhoTable {
    build_rho_table(default_step(), 64.0).unwrap()
}

/// rho(3) from rho(2) = 1 - log 2 and rho'(t) = -(1 - log(t-1))/t on [2, 3],
/// composite Simpson with 4096 panels.
fn rho3_oracle() -> f64 {
    let n = 4096;
    let h = 1.0 / n as f64;
    let g = |t: f64| (1.0 - (t - 1.0).ln()) / t;
    let mut s = g(2.0) + g(3.0);
    for k in 1..n {
        let t = 2.0 + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(t);
    }
    (1.0 - 2f64.ln()) - s * h / 3.0
}

fn c1() -> Outcome {
    let t = table();
    let mut checks = Vec::new();
    let plateau = (0..=t.per_unit() as usize).all(|k| t.values()[k] == 1.0)
        && [0.0, 0.25, 0.5, 0.999, 1.0].iter().all(|&u| t.rho(u).unwrap() == 1.0);
    checks.push((plateau, "rho = 1 on [0,1]".to_string()));
    let e2 = (t.rho(2.0).unwrap() - (1.0 - 2f64.ln())).abs();
    checks.push((e2 <= 1e-6, format!("|rho(2) - (1 - log 2)| = {e2:.2e}")));
    let e3 = (t.rho(3.0).unwrap() - rho3_oracle()).abs();
    checks.push((e3 <= 1e-6, format!("|rho(3) - oracle| = {e3:.2e}")));
    outcome(&checks)
}

fn c2() -> Outcome {
    let t = table();
    let mut checks = Vec::new();
    let worst = [1.5, 2.5, 5.0, 10.0, 20.0]
        .iter()
        .map(|&u| t.identity_residual(u).unwrap().abs())
        .fold(0.0, f64::max);
    checks.push((worst <= 1e-7, format!("max identity residual {worst:.2e}")));
    let vals = &t.values()[t.per_unit() as usize..=30 * t.per_unit() as usize];
    let shape = vals.iter().all(|&v| v > 0.0) && vals.windows(2).all(|w| w[1] <= w[0]);
    checks.push((shape, "positive, non-increasing on [1,30]".into()));
    let tol = 1e-6;
    let slope = [2.0, 3.0, 5.0, 10.0].iter().all(|&u: &f64| {
        let rho = t.rho(u).unwrap();
        -t.derivative(u).unwrap() <= rho * (2.0 * u * (u + 3.0).ln().powi(2)).ln() + tol
    });
    checks.push((slope, "slope inequality at u in {2,3,5,10}".into()));
    let mut shift = true;
    for u in [1.5f64, 3.0, 7.0] {
        for s in [0.0, 0.25, 0.5, 1.0] {
            let lhs = t.rho(u - s).unwrap();
            let rhs = t.rho(u).unwrap() * 4.0 * (2.0 * u * (u + 3.0).ln().powi(2)).powf(s);
            shift &= lhs <= rhs + tol;
        }
    }
    checks.push((shift, "shift inequality at 12 sample points".into()));
    outcome(&checks)
}

fn c3() -> Outcome {
    let t = table();
    let ev = XiEvaluator::default();
    let per = t.per_unit() as usize;
    let h = 1.0 / per as f64;
    // F[k] = int_1^{1 + k h} xi
    let f = ev.cumulative_integral(1.0, h, 30 * per).unwrap();
    let tol = 1e-8;
    let mut worst_gap = f64::INFINITY;
    let mut bad = None;
    for k in per..=30 * per {
        let u = t.grid_u(k);
        let log_rho = t.values()[k].ln();
        let upper = -f[k - per];
        // int_2^{u+1} xi = F(u + 1) - F(2); both ends on the grid
        let lower = -(f[k] - f[per]);
        if !(lower <= log_rho + tol && log_rho <= upper + tol) {
            bad.get_or_insert(u);
        }
        if k > per {
            worst_gap = worst_gap.min((log_rho - lower).min(upper - log_rho));
        }
    }
    outcome(&[(
        bad.is_none(),
        match bad {
            None => format!("{} grid points, smallest log-gap {worst_gap:.2e}", 29 * per + 1),
            Some(u) => format!("sandwich broken at u = {u}"),
        },
    )])
}

fn c4() -> Outcome {
    let ev = XiEvaluator::new(1e-12).unwrap();
    let mut worst = 0.0f64;
    let mut boot_ok = true;
    let mut worst_boot = 0.0f64;
    for k in 1..=50 {
        let u = 10f64.powf(8.0 * k as f64 / 50.0);
        let xi = ev.xi(u).unwrap();
        // independent residual: (e^xi - 1)/xi - u, relative to u
        worst = worst.max(((xi.exp() - 1.0) / xi - u).abs() / u);
        if u >= 1e3 {
            let l = u.ln();
            let allowed = 2.0 * (l.ln() / l).powi(2);
            let err = (xi_asymptotic(u, 3).unwrap() - xi).abs();
            worst_boot = worst_boot.max(err / allowed);
            boot_ok &= err <= allowed;
        }
    }
    outcome(&[
        (worst <= 1e-12, format!("max residual/u {worst:.2e} on 50 points")),
        (boot_ok, format!("bootstrap error / allowance <= {worst_boot:.3}")),
    ])
}

fn naive_smooth(n: u64, y: u64) -> bool {
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        while m % p == 0 {
            if p > y {
                return false;
            }
            m /= p;
        }
        p += 1;
    }
    m == 1 || m <= y
}

fn c5() -> Outcome {
    let sieve = SmoothSieve::build(1_000_000).unwrap();
    let count = sieve.psi(1e6, 1e3).unwrap().count;
    let ratio = count as f64 / (1e6 * (1.0 - 2f64.ln()));
    let mut recount = true;
    for y in [2u64, 3, 5, 10, 30, 100] {
        let mut naive = 0u64;
        for x in 1..=10_000u64 {
            naive += naive_smooth(x, y) as u64;
            recount &= sieve.psi(x as f64, y as f64).unwrap().count == naive;
        }
    }
    outcome(&[
        (
            (0.95..=1.05).contains(&ratio),
            format!("psi(1e6,1e3) = {count}, ratio to 1e6 (1 - log 2) = {ratio:.4} (required [0.95, 1.05])"),
        ),
        (recount, "exact equals naive recount for X <= 1e4, Y in {2,3,5,10,30,100}".into()),
    ])
}

fn c6() -> Outcome {
    let gi = Field::from_d(-1).unwrap();
    let cases = [
        ("Q(i), 1e4, 50", gi, 1e4, 50.0, ExcludedSet::empty()),
        ("Q(i), 1e4, 50, T", gi, 1e4, 50.0, ExcludedSet::above(&gi, 2).unwrap()),
        ("Q(sqrt -3), 1e3, 30", Field::from_d(-3).unwrap(), 1e3, 30.0, ExcludedSet::empty()),
        ("Q, 1e5, 100", Field::Rational, 1e5, 100.0, ExcludedSet::empty()),
    ];
    let checks: Vec<(bool, String)> = cases
        .iter()
        .map(|(name, f, x, y, t)| {
            let r = verify_functional_equation(f, *x, *y, t, 10_000_000).unwrap().residual;
            (r <= 1e-9, format!("{name}: residual {r:.1e}"))
        })
        .collect();
    outcome(&checks)
}

/// Number of ideals of norm n in Z[i]: sum over d | n of chi_{-4}(d).
fn r_gauss(n: u64) -> i64 {
    (1..=n)
        .filter(|d| n % d == 0)
        .map(|d| match d % 4 {
            1 => 1,
            3 => -1,
            _ => 0,
        })
        .sum()
}

fn c7() -> Outcome {
    let f = Field::from_d(-1).unwrap();
    let mut checks = Vec::new();
    for (label, t, odd_only) in [("T empty", ExcludedSet::empty(), false), ("T above 2", ExcludedSet::above(&f, 2).unwrap(), true)] {
        let norms = ideal_norms(&f, 1e4, 1e4, &t, 10_000_000).unwrap();
        let mut oracle = 0i64;
        let mut ok = true;
        for x in 1..=10_000u64 {
            if !(odd_only && x % 2 == 0) {
                oracle += r_gauss(x);
            }
            let ours = norms.partition_point(|&n| n <= x) as i64;
            ok &= ours == oracle;
            if x % 97 == 0 {
                ok &= count_ideals(&f, x as f64, &t, 10_000_000).unwrap() as i64 == oracle;
            }
        }
        checks.push((ok, format!("{label}: all X <= 1e4 match, N(1e4) = {oracle}")));
    }
    outcome(&checks)
}

fn c8() -> Outcome {
    let t = table();
    let cases = [
        ("Q(i), u=3, Y=1e3", Field::from_d(-1).unwrap(), 3.0, 1e3),
        ("Q, u=2, Y=1e4", Field::Rational, 2.0, 1e4),
    ];
    let checks: Vec<(bool, String)> = cases
        .iter()
        .map(|(name, f, u, y)| {
            let (s, main) = s_theta(f, *u, *y, 1.0, &ExcludedSet::empty(), &t).unwrap();
            // independent main term: log Y * int_{u-1}^{u} rho by trapezoid on a fine grid
            let n = 20_000;
            let h = 1.0 / n as f64;
            let mut integral = 0.5 * (t.rho(u - 1.0).unwrap() + t.rho(*u).unwrap());
            for k in 1..n {
                integral += t.rho(u - 1.0 + k as f64 * h).unwrap();
            }
            let oracle = y.ln() * integral * h;
            let rel = (s - main).abs() / main;
            (
                rel <= 0.15 && (main - oracle).abs() <= 1e-6 * oracle,
                format!("{name}: relative gap {rel:.4}"),
            )
        })
        .collect();
    outcome(&checks)
}

fn c9() -> Outcome {
    let sieve = SmoothSieve::build(Config::default().sieve_limit).unwrap();
    let a = parse_rational_list("1,1").unwrap();
    let (rep, sols) = construct_thm1(&a, 12, 0.5, &sieve, Thm1Limits::default()).unwrap();
    let inst = SUnitInstance::new(a.clone(), rep.s_primes.clone()).unwrap();
    let subst = sols.iter().all(|s| {
        let sum: BigRational = a.iter().zip(&s.x).map(|(a, x)| a * x).sum();
        sum.is_one()
    });
    let units = sols.iter().all(|s| s.x.iter().all(|q| is_s_unit(q, &rep.s_primes).unwrap()));
    let nondeg = sols.iter().all(|s| check_nondegenerate(&inst, s).unwrap());
    let total: u64 = rep.bucket_histogram.iter().map(|(size, k)| size * k).sum();
    let buckets: u64 = rep.bucket_histogram.iter().map(|h| h.1).sum();
    let largest = rep.bucket_histogram.last().map_or(0, |h| h.0);
    let pigeon = total == rep.total_tuples && largest == rep.bucket_size && rep.bucket_size >= total.div_ceil(buckets);
    // formula check of the count bound, exponent evaluated directly
    let direct = 0.5 * 4.5 * 100f64.powf(2.0 / 3.0) * 100f64.ln().powf(-1.0 / 3.0);
    let formula = (thm1_bound(3, 100.0, 0.5).unwrap().exponent - direct).abs() <= 1e-12 * direct;
    outcome(&[
        (subst, format!("{} solutions substitute exactly", sols.len())),
        (units, format!("S-units over {} primes", rep.s_primes.len())),
        (nondeg, "non-degenerate".into()),
        (
            pigeon,
            format!(
                "bucket {} >= ceil({total}/{buckets}) = {}",
                rep.bucket_size,
                total.div_ceil(buckets)
            ),
        ),
        (formula, "count-bound formula".into()),
    ])
}

fn c10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let pool = [2u64, 3, 5, 7, 11];
    let mut equal = true;
    let mut monotone = true;
    let mut sizes = Vec::new();
    for _ in 0..20 {
        let a1 = BigRational::new(BigInt::from(rng.gen_range(1..=3)), BigInt::from(rng.gen_range(1..=2)));
        let a2 = BigRational::from_integer(BigInt::from(if rng.gen_bool(0.5) { 1 } else { -1 }));
        let k = rng.gen_range(2..=4);
        let mut s: Vec<u64> = pool.to_vec();
        while s.len() > k {
            s.remove(rng.gen_range(0..s.len()));
        }
        let inst = SUnitInstance::new(vec![a1, a2], s).unwrap();
        let sols = enumerate_solutions(&inst, rng.gen_range(2..=4), 10_000_000).unwrap();
        let pts: Vec<Vec<BigRational>> = sols.iter().map(|s| vec![s.x[0].clone()]).collect();
        let mut distinct = pts.clone();
        distinct.sort();
        distinct.dedup();
        equal &= min_vanishing_degree(&pts, 1_000_000).unwrap() as usize == distinct.len();
        let mut prev = 0;
        for j in 0..=pts.len() {
            let g = min_vanishing_degree(&pts[..j], 1_000_000).unwrap();
            monotone &= g >= prev;
            prev = g;
        }
        sizes.push(distinct.len());
    }
    let fuzz = lemma6_fuzz(100, 6, 2, 4, -5, 5, 1_000_000).unwrap();
    outcome(&[
        (equal, format!("20 solution sets, distinct counts {sizes:?}")),
        (monotone, "monotone under point addition".into()),
        (
            fuzz.violations == 0,
            format!("zero-count fuzz: {} violations, max zeros/bound {:.3}", fuzz.violations, fuzz.max_ratio),
        ),
    ])
}

fn c11() -> Outcome {
    let inst = SUnitInstance::new(parse_rational_list("1,1").unwrap(), vec![2, 3]).unwrap();
    let all = enumerate_solutions(&inst, 3, 10_000_000).unwrap();
    let five: Vec<Solution> = all.into_iter().take(5).collect();
    let lifted = lift_solutions(&five, &five).unwrap();
    let exact = lifted.iter().all(|s| {
        let sum: BigRational = s.x.iter().sum();
        s.x.len() == 3 && (sum - BigRational::one()).is_zero()
    });
    outcome(&[(
        five.len() == 5 && lifted.len() == 25 && exact,
        format!("{} lifted tuples sum to 1 exactly", lifted.len()),
    )])
}

fn c12() -> Outcome {
    let gi = QuadField::gaussian();
    let order = order_primes(&gi, 8).unwrap().primes();
    let sieve = SmoothSieve::build(1_000).unwrap();
    let f = NormPoly::new(QuadElement::new(gi, 0, 1).unwrap(), QuadElement::new(gi, 1, 0).unwrap()).unwrap();
    let count = count_rn_solutions(&f, &[2, 5], 10, &sieve).unwrap().count;
    let mut checks = vec![
        (order == [2, 5, 3, 13, 17, 29, 37, 41], format!("ordering {order:?}")),
        (count == 9, format!("x^2+1 over {{2,5}}, |x| <= 10: {count} solutions")),
    ];
    for s in [1_000usize, 10_000] {
        let y = order_primes(&gi, s).unwrap().y() as f64;
        let r = y / (2.0 * s as f64 * (s as f64).ln());
        checks.push(((0.6..=1.4).contains(&r), format!("Y({s})/(2 s log s) = {r:.3}")));
    }
    outcome(&checks)
}

fn c13() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_smoothforge");
    let dir = tempfile::tempdir().unwrap();
    let points = dir.path().join("points.csv");
    std::fs::write(&points, "0,0\n1,0\n0,1\n1/2,1/3\n").unwrap();
    let pts = points.to_str().unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["rho", "--u", "3.5"],
        vec!["xi", "--u", "1000", "--rounds", "3"],
        vec!["rho-table", "--step", "1/128", "--umax", "6"],
        vec!["psi", "--x", "100000", "--y", "50"],
        vec!["ideals", "--d", "-1", "--x", "2000", "--y", "30", "--exclude", "2:1", "--list"],
        vec!["funceq", "--d", "-1", "--x", "10000", "--y", "50"],
        vec!["mertens", "--d", "-3", "--y", "10000"],
        vec!["bound", "--which", "thm3", "--params", "n=3,m=1,c_k=3,s=50,eps=0.5"],
        vec!["thm1", "--a", "1,1", "--s", "8", "--eps", "0.5"],
        vec!["gdeg", "--points", pts],
        vec!["lemma6-fuzz", "--trials", "100", "--seed", "3"],
        vec!["normpoly-count", "--d", "-1", "--alpha0", "0,1", "--alpha1", "1,0", "--primes", "2,5", "--xbound", "10"],
        vec!["thm3", "--d", "-1", "--s", "6", "--x", "1e5"],
        vec!["compare", "--x", "1e4,1e5", "--y", "50,1000", "--d", "-1"],
    ];
    let cache = dir.path().join("cache");
    let run_once = |args: &[&str], out: &Path| -> (i32, Vec<u8>) {
        let status = Command::new(bin)
            .args(args)
            .arg("--out")
            .arg(out)
            .env("SMOOTHFORGE_CACHE_DIR", &cache)
            .status()
            .unwrap();
        (status.code().unwrap_or(-1), std::fs::read(out).unwrap_or_default())
    };
    let mut checks = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let (c1, o1) = run_once(args, &dir.path().join(format!("a{i}")));
        let (c2, o2) = run_once(args, &dir.path().join(format!("b{i}")));
        let same = c1 == 0 && c2 == 0 && !o1.is_empty() && o1 == o2;
        if !same {
            checks.push((false, format!("{} differs or failed (exit {c1}/{c2})", args[0])));
        }
    }
    if checks.is_empty() {
        checks.push((true, format!("{} subcommands byte-identical across runs", commands.len())));
    }
    outcome(&checks)
}

fn main() {
    let s = |secs| Some(Duration::from_secs(secs));
    let results = [
        run(1, "rho closed forms", s(5), c1),
        run(2, "rho identity, shape and inequalities", None, c2),
        run(3, "xi sandwich around rho on [1,30]", None, c3),
        run(4, "xi residual and bootstrap", None, c4),
        run(5, "smooth density and exact count", s(30), c5),
        run(6, "functional equation residuals", None, c6),
        run(7, "Gaussian ideal counts vs divisor sums", None, c7),
        run(8, "prime-power sum against rho integral", None, c8),
        run(9, "pigeonhole S-unit construction", s(60), c9),
        run(10, "vanishing degree and zero-count fuzz", None, c10),
        run(11, "solution lifting", None, c11),
        run(12, "norm polynomial primes and counts", None, c12),
        run(13, "CLI determinism", None, c13),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
