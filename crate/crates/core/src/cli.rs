//! The `smoothforge` command line.
//!
//! Every subcommand prints JSON (CSV for tabular output) to standard output,
//! or to `--out`. Exit codes: 0 success, 1 a requested check failed, 2 usage
//! or domain error, 3 a resource cap was hit.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bounds::{
    cep_bound, ideal_lower_bound, smooth_lower_exponent, thm1_bound, thm2_bound, thm3_bound,
    thm4_bound, BoundValue,
};
use crate::config::{parse_count, parse_ratio, Config};
use crate::dickman_xi::{xi_asymptotic, RhoTable, XiEvaluator};
use crate::normpoly::{
    construct_thm3, count_rn_solutions, thm4_degree, NormPoly, QuadElement, Thm3Params,
};
use crate::quad_ideals::{
    count_ideals, ideal_norms, mertens_sum, psi_kt, verify_functional_equation, ExcludedSet, Field,
    QuadField,
};
use crate::smooth_q::{hildebrand_estimate, SmoothSieve};
use crate::sunit::{
    check_nondegenerate, construct_thm1, is_s_unit, lemma6_fuzz, min_vanishing_degree,
    parse_rational_list, SUnitInstance, Thm1Limits,
};
use crate::{Error, Result};

/// Environment variable naming the directory of cached rho tables.
pub const CACHE_ENV: &str = "SMOOTHFORGE_CACHE_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "smoothforge",
    version,
    about = "Smooth numbers, ideal counts and S-unit constructions"
)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set sieve_limit=1e8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dickman's rho at one point.
    Rho {
        #[arg(long)]
        u: f64,
    },
    /// The saddle function xi(u).
    Xi {
        #[arg(long)]
        u: f64,
        /// Also report the bootstrap expansion with this many rounds.
        #[arg(long)]
        rounds: Option<u32>,
    },
    /// Tabulate rho on its grid as CSV.
    RhoTable {
        #[arg(long)]
        step: Option<String>,
        #[arg(long)]
        umax: Option<f64>,
    },
    /// Count (or list) the Y-smooth integers up to X.
    Psi {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        /// List the smooth integers as CSV.
        #[arg(long)]
        enumerate: bool,
    },
    /// Count ideals of norm at most X, optionally Y-smooth.
    Ideals {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: Option<f64>,
        /// Include the sorted norm list.
        #[arg(long)]
        list: bool,
    },
    /// Check the functional equation of the smooth ideal count.
    Funceq {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
    },
    /// Sum of Lambda(a)/N a over prime powers of norm at most Y.
    Mertens {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        y: f64,
    },
    /// Evaluate a closed-form lower bound.
    Bound {
        #[arg(long, value_enum)]
        which: Which,
        /// Comma separated `key=value` list (n, m, s, eps, c_k, x, y, c).
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        params: String,
    },
    /// Pigeonhole construction of many S-unit equation solutions.
    Thm1 {
        /// Coefficients, e.g. `1,1` or `3/2,-1`.
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Smallest degree of a polynomial vanishing on a point set.
    Gdeg {
        /// CSV file, one point per row, coordinates as exact rationals.
        #[arg(long)]
        points: PathBuf,
    },
    /// Count zeros of random polynomials in a box against the degree bound.
    Lemma6Fuzz {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2)]
        vars: usize,
        #[arg(long, default_value_t = 4)]
        degree: u32,
        #[arg(long, default_value_t = -5, allow_negative_numbers = true)]
        lo: i64,
        #[arg(long, default_value_t = 5, allow_negative_numbers = true)]
        hi: i64,
    },
    /// Solutions of |N(alpha0 + alpha1 x)| = product of powers of given primes.
    NormpolyCount {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long, allow_hyphen_values = true)]
        alpha0: String,
        #[arg(long, allow_hyphen_values = true)]
        alpha1: String,
        /// Comma separated primes; may be empty.
        #[arg(long, default_value = "")]
        primes: String,
        #[arg(long)]
        xbound: u64,
    },
    /// Pigeonhole construction of a norm polynomial with many solutions.
    Thm3 {
        #[arg(long, allow_negative_numbers = true)]
        d: i64,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        x: f64,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        alpha1: String,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// CSV of exact counts against the main term and lower bounds.
    Compare {
        /// Comma separated X values.
        #[arg(long)]
        x: String,
        /// Comma separated Y values.
        #[arg(long)]
        y: String,
        /// Field `Q(sqrt d)`; omitted or 1 for the rationals.
        #[arg(long, allow_negative_numbers = true)]
        d: Option<i64>,
        /// Excluded prime ideals as `p:index,...`.
        #[arg(long)]
        exclude: Option<String>,
    },
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Field `Q(sqrt d)`; `1` selects the rationals.
    #[arg(long, allow_negative_numbers = true)]
    d: i64,
    /// Excluded prime ideals as `p:index,...`.
    #[arg(long)]
    exclude: Option<String>,
}

impl FieldArgs {
    fn resolve(&self) -> Result<(Field, ExcludedSet)> {
        resolve_field(self.d, self.exclude.as_deref())
    }
}

fn resolve_field(d: i64, exclude: Option<&str>) -> Result<(Field, ExcludedSet)> {
    let field = Field::from_d(d)?;
    let excluded = match exclude {
        Some(t) if !t.trim().is_empty() => ExcludedSet::parse(&field, t)?,
        _ => ExcludedSet::empty(),
    };
    Ok((field, excluded))
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Which {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Cep,
    Ms,
}

/// Output of one subcommand.
struct Output {
    text: String,
    /// `false` when a check requested by the subcommand failed.
    ok: bool,
}

fn json<T: Serialize>(v: &T, ok: bool) -> Result<Output> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    Ok(Output { text, ok })
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if let Err(e) = emit(cli.out.as_deref(), &out.text) {
                eprintln!("error: {e}");
                return exit_code(&e);
            }
            if out.ok {
                0
            } else {
                eprintln!("check failed");
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::CapExceeded { .. } => 3,
        Error::Domain(_) | Error::OutOfRange { .. } | Error::InvalidInput(_) | Error::Parse(_) => 2,
        Error::Construction(_) | Error::Io(_) => 1,
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for kv in &cli.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The rho table for `cfg`, read from or written to the cache directory when
/// one is configured. Unreadable cache files are rebuilt.
fn rho_table(cfg: &Config) -> Result<RhoTable> {
    let Some(dir) = std::env::var_os(CACHE_ENV) else {
        return RhoTable::build(cfg.rho_step, cfg.rho_umax);
    };
    let dir = PathBuf::from(dir);
    let name = format!(
        "rho_{}_{}_{}.csv",
        cfg.rho_step.numer(),
        cfg.rho_step.denom(),
        cfg.rho_umax
    );
    let path = dir.join(name);
    if let Ok(f) = fs::File::open(&path) {
        if let Ok(t) = RhoTable::read_csv(BufReader::new(f)) {
            if t.step() == cfg.rho_step && t.u_max() >= cfg.rho_umax {
                return Ok(t);
            }
        }
    }
    let table = RhoTable::build(cfg.rho_step, cfg.rho_umax)?;
    fs::create_dir_all(&dir)?;
    // write then rename so concurrent runs never read a partial file
    let tmp = dir.join(format!(
        ".{}.{}",
        path.file_name().unwrap().to_string_lossy(),
        std::process::id()
    ));
    let mut buf = Vec::new();
    table.write_csv(&mut buf)?;
    fs::write(&tmp, buf)?;
    fs::rename(&tmp, &path)?;
    Ok(table)
}

fn sieve_for(n: f64, cfg: &Config) -> Result<SmoothSieve> {
    if !n.is_finite() || n < 0.0 {
        return Err(Error::invalid(format!(
            "range {n} must be finite and non-negative"
        )));
    }
    let top = n.floor().max(2.0);
    if top > cfg.sieve_limit as f64 {
        return Err(Error::cap(format!("sieve range {top}"), cfg.sieve_limit));
    }
    SmoothSieve::build_with_cap(top as u64, cfg.sieve_limit)
}

fn parse_list<T, F: Fn(&str) -> Result<T>>(text: &str, f: F) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

fn execute(cli: &Cli) -> Result<Output> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Rho { u } => {
            let table = rho_table(&cfg)?;
            json(&serde_json::json!({ "u": u, "rho": table.rho(*u)? }), true)
        }
        Command::Xi { u, rounds } => {
            let ev = XiEvaluator::new(cfg.xi_tolerance)?;
            let xi = ev.xi(*u)?;
            let residual = if xi == 0.0 {
                0.0
            } else {
                (xi.exp_m1() / xi - u).abs() / u
            };
            let asymptotic = rounds.map(|r| xi_asymptotic(*u, r)).transpose()?;
            json(
                &serde_json::json!({ "u": u, "xi": xi, "residual": residual, "asymptotic": asymptotic }),
                residual <= cfg.xi_tolerance,
            )
        }
        Command::RhoTable { step, umax } => {
            let mut c = cfg.clone();
            if let Some(s) = step {
                c.rho_step = parse_ratio(s)?;
            }
            if let Some(u) = umax {
                c.rho_umax = *u;
            }
            c.validate()?;
            let table = rho_table(&c)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            Ok(Output {
                text: String::from_utf8(buf).expect("ascii csv"),
                ok: true,
            })
        }
        Command::Psi { x, y, enumerate } => {
            let sieve = sieve_for(*x, &cfg)?;
            if *enumerate {
                let values = sieve.psi_enumerate(*x, *y, cfg.enumeration_cap)?;
                let mut text = String::from("n\n");
                for v in values {
                    writeln!(text, "{v}").expect("string write");
                }
                Ok(Output { text, ok: true })
            } else {
                json(&sieve.psi(*x, *y)?, true)
            }
        }
        Command::Ideals { field, x, y, list } => {
            let (f, t) = field.resolve()?;
            let y = y.unwrap_or(*x);
            let norms = ideal_norms(&f, *x, y, &t, cfg.enumeration_cap)?;
            json(
                &serde_json::json!({
                    "d": f.d(), "field": f.to_string(), "X": x, "Y": y, "T": t.labels(),
                    "count": norms.len(), "norms": list.then_some(&norms),
                }),
                true,
            )
        }
        Command::Funceq { field, x, y } => {
            let (f, t) = field.resolve()?;
            let fe = verify_functional_equation(&f, *x, *y, &t, cfg.enumeration_cap)?;
            let ok = fe.residual <= cfg.funceq_tolerance;
            json(
                &serde_json::json!({
                    "d": f.d(), "field": f.to_string(), "X": x, "Y": y, "T": t.labels(),
                    "count": fe.psi, "lhs": fe.lhs, "rhs": fe.rhs, "residual": fe.residual,
                    "tolerance": cfg.funceq_tolerance, "ok": ok,
                }),
                ok,
            )
        }
        Command::Mertens { field, y } => {
            let (f, t) = field.resolve()?;
            let (sum, drift) = mertens_sum(&f, *y, &t)?;
            json(
                &serde_json::json!({
                    "d": f.d(), "field": f.to_string(), "Y": y, "T": t.labels(), "sum": sum, "drift": drift,
                }),
                true,
            )
        }
        Command::Bound { which, params } => bound(*which, params, &cfg),
        Command::Thm1 { a, s, eps } => thm1(a, *s, *eps, &cfg),
        Command::Gdeg { points } => {
            let text = fs::read_to_string(points)?;
            let mut pts = Vec::new();
            for line in text.lines().map(str::trim) {
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                pts.push(parse_rational_list(line)?);
            }
            let mut distinct = pts.clone();
            distinct.sort();
            distinct.dedup();
            let g = min_vanishing_degree(&pts, cfg.enumeration_cap)?;
            json(
                &serde_json::json!({
                    "points": pts.len(), "distinct": distinct.len(),
                    "dimension": pts.first().map_or(0, Vec::len), "g": g,
                }),
                true,
            )
        }
        Command::Lemma6Fuzz {
            trials,
            seed,
            vars,
            degree,
            lo,
            hi,
        } => {
            let f = lemma6_fuzz(
                *trials,
                seed.unwrap_or(cfg.seed),
                *vars,
                *degree,
                *lo,
                *hi,
                cfg.enumeration_cap,
            )?;
            let ok = f.violations == 0;
            json(&f, ok)
        }
        Command::NormpolyCount {
            d,
            alpha0,
            alpha1,
            primes,
            xbound,
        } => {
            let field = QuadField::new(*d)?;
            let f = NormPoly::new(
                QuadElement::parse(field, alpha0)?,
                QuadElement::parse(field, alpha1)?,
            )?;
            let primes = parse_list(primes, |s| parse_count(s))?;
            if 2 * *xbound as u128 + 1 > cfg.enumeration_cap as u128 {
                return Err(Error::cap(
                    format!("{} values of x", 2 * *xbound as u128 + 1),
                    cfg.enumeration_cap,
                ));
            }
            let b = *xbound as i64;
            let top = (-b..=b).map(|x| f.eval(x)).max().unwrap_or(0);
            let sieve = sieve_for(top as f64, &cfg)?;
            let count = count_rn_solutions(&f, &primes, *xbound, &sieve)?;
            let degree = thm4_degree(&f, &primes, *xbound, &sieve)?;
            json(
                &serde_json::json!({ "polynomial": f, "count": count, "degree": degree }),
                true,
            )
        }
        Command::Thm3 {
            d,
            s,
            x,
            alpha1,
            eps,
        } => {
            let field = QuadField::new(*d)?;
            let alpha1 = QuadElement::parse(field, alpha1)?;
            let c2 = cfg.constants.c2_lemma7;
            let sieve = sieve_for(c2 * c2 * x, &cfg)?;
            let params = Thm3Params {
                c2,
                epsilon: *eps,
                enumeration_cap: cfg.enumeration_cap,
                ..Thm3Params::default()
            };
            let (report, _) = construct_thm3(&field, alpha1, *s, *x, &sieve, params)?;
            let ok = report.bucket_size >= report.guaranteed
                && report.generates_field
                && report.independent;
            json(&report, ok)
        }
        Command::Compare { x, y, d, exclude } => {
            compare(x, y, d.unwrap_or(1), exclude.as_deref(), &cfg)
        }
    }
}

fn bound(which: Which, params: &str, cfg: &Config) -> Result<Output> {
    let mut p: BTreeMap<String, String> = BTreeMap::new();
    for kv in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--params expects key=value, got {kv:?}")))?;
        p.insert(k.trim().to_string(), v.trim().to_string());
    }
    let allowed: &[&str] = match which {
        Which::Thm1 => &["n", "s", "eps"],
        Which::Thm2 => &["s", "eps"],
        Which::Thm3 => &["n", "m", "c_k", "s", "eps"],
        Which::Thm4 => &["n", "c_k", "s", "eps"],
        Which::Thm5 | Which::Cep | Which::Ms => &["x", "y", "c"],
    };
    if let Some(k) = p.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::Parse(format!(
            "unknown parameter {k:?}; expected one of {allowed:?}"
        )));
    }
    let get = |k: &str| {
        p.get(k)
            .ok_or_else(|| Error::Parse(format!("missing parameter {k:?}")))
    };
    let num = |k: &str| get(k).and_then(|v| parse_f64(v));
    let int = |k: &str| {
        get(k).and_then(|v| {
            parse_count(v).and_then(|n| {
                u32::try_from(n).map_err(|_| Error::invalid(format!("{k} too large")))
            })
        })
    };
    let c_or = |default: f64| p.get("c").map_or(Ok(default), |v| parse_f64(v));
    let value: BoundValue = match which {
        Which::Thm1 => thm1_bound(int("n")?, num("s")?, num("eps")?)?,
        Which::Thm2 => thm2_bound(num("s")?, num("eps")?)?,
        Which::Thm3 => thm3_bound(
            int("n")?,
            int("m")?,
            parse_ratio(get("c_k")?)?,
            num("s")?,
            num("eps")?,
        )?,
        Which::Thm4 => thm4_bound(int("n")?, parse_ratio(get("c_k")?)?, num("s")?, num("eps")?)?,
        Which::Cep | Which::Ms => cep_bound(num("x")?, num("y")?, c_or(cfg.constants.c_cep)?)?,
        Which::Thm5 => ideal_lower_bound(num("x")?, num("y")?, c_or(cfg.constants.c_thm5)?)?,
    };
    json(&value, true)
}

#[derive(Serialize)]
struct Thm1Output {
    #[serde(flatten)]
    report: crate::sunit::ConstructionReport,
    solutions: Vec<crate::sunit::Solution>,
    checks: Thm1Checks,
}

#[derive(Serialize)]
struct Thm1Checks {
    substitution: bool,
    s_units: bool,
    nondegenerate: bool,
    pigeonhole: bool,
}

fn thm1(a: &str, s: usize, eps: f64, cfg: &Config) -> Result<Output> {
    let a = parse_rational_list(a)?;
    let sieve = sieve_for(cfg.sieve_limit as f64, cfg)?;
    let limits = Thm1Limits {
        enumeration_cap: cfg.enumeration_cap,
        ..Thm1Limits::default()
    };
    let (report, solutions) = construct_thm1(&a, s, eps, &sieve, limits)?;
    let inst = SUnitInstance::new(a, report.s_primes.clone())?;
    let mut checks = Thm1Checks {
        substitution: true,
        s_units: true,
        nondegenerate: true,
        pigeonhole: report.bucket_size >= report.guaranteed,
    };
    for sol in &solutions {
        checks.substitution &= inst.is_solution(&sol.x);
        for q in &sol.x {
            checks.s_units &= is_s_unit(q, &report.s_primes)?;
        }
        checks.nondegenerate &= check_nondegenerate(&inst, sol)?;
    }
    let ok = checks.substitution && checks.s_units && checks.nondegenerate && checks.pigeonhole;
    json(
        &Thm1Output {
            report,
            solutions,
            checks,
        },
        ok,
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.filter(|x| x.is_finite())
        .map_or(String::new(), |x| format!("{x}"))
}

/// One CSV row per `(X, Y)`: exact count, `A X rho(u)`, and the two lower
/// bound shapes with the configured constants. `A` is 1 over the rationals
/// and the observed ideal density `N_{K,T}(X)/X` otherwise. The bound columns
/// are the bare formulas, evaluated for every `u > 1`.
fn compare(xs: &str, ys: &str, d: i64, exclude: Option<&str>, cfg: &Config) -> Result<Output> {
    let (field, excluded) = resolve_field(d, exclude)?;
    let xs = parse_list(xs, parse_f64)?;
    let ys = parse_list(ys, parse_f64)?;
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::invalid("compare needs at least one X and one Y"));
    }
    let table = rho_table(cfg)?;
    let sieve = match field {
        Field::Rational => Some(sieve_for(xs.iter().cloned().fold(0.0, f64::max), cfg)?),
        Field::Quadratic(_) => None,
    };
    let mut text = String::from("X,Y,u,exact,main_term,cep,thm5\n");
    for &x in &xs {
        let density = match field {
            Field::Rational if excluded.is_empty() => 1.0,
            _ => count_ideals(&field, x, &excluded, cfg.enumeration_cap)? as f64 / x,
        };
        for &y in &ys {
            if !(y >= 2.0) || !(x >= 1.0) {
                return Err(Error::domain(format!(
                    "compare needs X >= 1 and Y >= 2, got X={x}, Y={y}"
                )));
            }
            let exact = match (&sieve, field) {
                (Some(sv), Field::Rational) if excluded.is_empty() => sv.psi(x, y)?.count,
                _ => psi_kt(&field, x, y, &excluded, cfg.enumeration_cap)?,
            };
            let u = x.ln() / y.ln();
            let main = density * hildebrand_estimate(&table, x, y)?;
            let shape = |c: f64| (u > 1.0).then(|| smooth_lower_exponent(x, y, c).exp());
            writeln!(
                text,
                "{x},{y},{u},{exact},{main},{},{}",
                fmt_opt(shape(cfg.constants.c_cep)),
                fmt_opt(shape(cfg.constants.c_thm5))
            )
            .expect("string write");
        }
    }
    Ok(Output { text, ok: true })
}
