use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::{Error, Result};

/// Exact rank of a rational matrix.
///
/// Rows are cleared to integers and reduced by fraction-free elimination,
/// dividing each updated row by the gcd of its entries.
pub fn matrix_rank(rows: &[Vec<BigRational>]) -> usize {
    integer_rank(rows.iter().map(|r| integer_row(r)).collect())
}

fn integer_rank(mut m: Vec<Vec<BigInt>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot_row = m[rank].clone();
        let pivot = pivot_row[c].clone();
        for row in m.iter_mut().skip(rank + 1) {
            if row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                *x = &*x * &pivot - &f * pv;
            }
            normalize(row);
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

fn integer_row(r: &[BigRational]) -> Vec<BigInt> {
    let l = r.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    r.iter()
        .map(|q| (q * BigRational::from_integer(l.clone())).to_integer())
        .collect()
}

fn normalize(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Exponent vectors of total degree `<= g` in `k` variables, graded order.
fn monomials(k: usize, g: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=g {
        let mut cur = vec![0u32; k];
        fill(&mut out, &mut cur, 0, deg);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut [u32], i: usize, left: u32) {
    if cur.is_empty() {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if i + 1 == cur.len() {
        cur[i] = left;
        out.push(cur.to_vec());
        return;
    }
    for e in (0..=left).rev() {
        cur[i] = e;
        fill(out, cur, i + 1, left - e);
    }
    cur[i] = 0;
}

fn binomial(n: u64, k: u64) -> u128 {
    let mut r = 1u128;
    for i in 0..k {
        r = r * (n - i) as u128 / (i + 1) as u128;
    }
    r
}

/// Smallest total degree `g` of a nonzero polynomial vanishing on `points`.
///
/// Duplicate points are merged. The answer is the first `g` for which the
/// evaluation matrix (points × monomials of degree `<= g`) has a nontrivial
/// kernel; `column_cap` bounds the number of monomials `C(g + k, k)`.
/// The empty set gives 0.
pub fn min_vanishing_degree(points: &[Vec<BigRational>], column_cap: u64) -> Result<u32> {
    let Some(first) = points.first() else {
        return Ok(0);
    };
    let k = first.len();
    if k == 0 {
        return Err(Error::invalid("points must have at least one coordinate"));
    }
    if points.iter().any(|p| p.len() != k) {
        return Err(Error::invalid("points differ in dimension"));
    }
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup();
    let npts = pts.len() as u128;
    let cols = |g: u32| binomial(g as u64 + k as u64, k as u64);
    // a kernel at degree g persists at g + 1, so the answer can be bisected
    // between 0 and the first degree with more monomials than points
    let mut hi = 0u32;
    while cols(hi) <= npts {
        hi += 1;
    }
    let mut top = hi;
    while top > 0 && cols(top) > column_cap as u128 {
        top -= 1;
    }
    let too_big = || Error::cap(format!("{} monomials at degree {}", cols(top + 1), top + 1), column_cap);
    if cols(top) > column_cap as u128 {
        return Err(too_big());
    }
    if top < hi {
        if !deficient(&pts, k, top) {
            return Err(too_big());
        }
        hi = top;
    }
    let mut lo = 0u32;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if deficient(&pts, k, mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(lo)
}

/// Whether some nonzero polynomial of degree `<= g` vanishes on `pts`.
fn deficient(pts: &[Vec<BigRational>], k: usize, g: u32) -> bool {
    let mons = monomials(k, g);
    if mons.len() > pts.len() {
        return true;
    }
    // rank mod p never exceeds the rank over Q, so full rank mod p settles it;
    // row scaling does not change rank, so coordinates reduce independently
    if let Some(res) = residues(pts) {
        let m: Vec<Vec<u64>> = res
            .iter()
            .map(|p| {
                mons.iter()
                    .map(|e| p.iter().zip(e).fold(1, |acc, (&x, &d)| mul_mod(acc, pow_mod(x, d as u64))))
                    .collect()
            })
            .collect();
        if rank_mod_p(m) == mons.len() {
            return false;
        }
    }
    let rows: Vec<Vec<BigInt>> = pts
        .iter()
        .map(|p| {
            let row: Vec<BigRational> = mons
                .iter()
                .map(|e| p.iter().zip(e).map(|(x, &d)| x.pow(d as i32)).product())
                .collect();
            integer_row(&row)
        })
        .collect();
    integer_rank(rows) < mons.len()
}

/// Coordinates reduced mod the prime; `None` if a denominator vanishes there.
fn residues(pts: &[Vec<BigRational>]) -> Option<Vec<Vec<u64>>> {
    let p = BigInt::from(MODULUS);
    let red = |x: &BigInt| -> u64 { x.mod_floor(&p).try_into().expect("reduced below the modulus") };
    pts.iter()
        .map(|pt| {
            pt.iter()
                .map(|x| {
                    let d = red(x.denom());
                    (d != 0).then(|| mul_mod(red(x.numer()), pow_mod(d, MODULUS - 2)))
                })
                .collect()
        })
        .collect()
}

const MODULUS: u64 = (1 << 61) - 1;

fn mul_mod(a: u64, b: u64) -> u64 {
    (a as u128 * b as u128 % MODULUS as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a);
        }
        a = mul_mod(a, a);
        e >>= 1;
    }
    r
}

fn rank_mod_p(mut m: Vec<Vec<u64>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = pow_mod(m[rank][c], MODULUS - 2);
        let pivot_row = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            if row[c] == 0 {
                continue;
            }
            let f = mul_mod(row[c], inv);
            for (x, &pv) in row.iter_mut().zip(&pivot_row).skip(c) {
                *x = (*x + MODULUS - mul_mod(f, pv)) % MODULUS;
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
