//! Prime ideals and smooth ideal counts in quadratic fields `Q(sqrt d)`.
//!
//! Splitting of a rational prime `p` is read off the Kronecker symbol of the
//! field discriminant. Every count here is exact: ideals are enumerated by
//! depth-first search over exponent vectors of norm-sorted prime ideals.
//! The rational field is available as [`Field::Rational`] so that every
//! quantity can be checked against its classical specialisation.

mod enumerate;
mod lemmas;

pub use enumerate::{
    count_ideals, enumerate_ideals, ideal_norms, lambda_kt, psi_kt, verify_functional_equation,
    FunctionalEquation,
};
pub use lemmas::{delta_lower, delta_profile, mertens_sum, s_theta, theorem5_bound, ProfilePoint};

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::primes::{is_prime, is_squarefree, kronecker_prime, primes_up_to};
use crate::{Error, Result};

/// Square-free `d` with class number one for `Q(sqrt d)` among the fields the
/// norm-form constructions support.
pub const CLASS_NUMBER_ONE: [i64; 9] = [-1, -2, -3, -7, -11, 2, 3, 5, 13];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuadField {
    pub d: i64,
    pub discriminant: i64,
    pub class_number_one: bool,
}

impl QuadField {
    pub fn new(d: i64) -> Result<Self> {
        if d == 0 || d == 1 || !is_squarefree(d) {
            return Err(Error::invalid(format!(
                "d = {d} is not a square-free integer other than 0, 1"
            )));
        }
        if d.unsigned_abs() > 1 << 40 {
            return Err(Error::invalid(format!(
                "|d| = {} too large",
                d.unsigned_abs()
            )));
        }
        let discriminant = if d.rem_euclid(4) == 1 { d } else { 4 * d };
        Ok(Self {
            d,
            discriminant,
            class_number_one: CLASS_NUMBER_ONE.contains(&d),
        })
    }

    pub fn gaussian() -> Self {
        Self::new(-1).expect("Q(i) is valid")
    }

    /// Prime ideals above the rational prime `p`.
    pub fn splitting(&self, p: u64) -> Result<Vec<PrimeIdealSpec>> {
        Field::Quadratic(*self).splitting(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Rational,
    Quadratic(QuadField),
}

impl Field {
    /// `d = 1` selects the rational field.
    pub fn from_d(d: i64) -> Result<Self> {
        if d == 1 {
            Ok(Self::Rational)
        } else {
            Ok(Self::Quadratic(QuadField::new(d)?))
        }
    }

    pub fn d(&self) -> i64 {
        match self {
            Self::Rational => 1,
            Self::Quadratic(q) => q.d,
        }
    }

    pub fn degree(&self) -> u32 {
        match self {
            Self::Rational => 1,
            Self::Quadratic(_) => 2,
        }
    }

    pub fn splitting(&self, p: u64) -> Result<Vec<PrimeIdealSpec>> {
        if !is_prime(p) {
            return Err(Error::invalid(format!("{p} is not prime")));
        }
        let one = |split_type, norm, index| PrimeIdealSpec {
            p,
            split_type,
            norm,
            index,
        };
        Ok(match self {
            Self::Rational => vec![one(SplitType::Rational, p, 1)],
            Self::Quadratic(q) => match kronecker_prime(q.discriminant, p) {
                1 => vec![one(SplitType::Split, p, 1), one(SplitType::Split, p, 2)],
                0 => vec![one(SplitType::Ramified, p, 1)],
                _ => {
                    let norm = p
                        .checked_mul(p)
                        .ok_or_else(|| Error::invalid(format!("norm of inert {p} overflows")))?;
                    vec![one(SplitType::Inert, norm, 1)]
                }
            },
        })
    }

    /// Prime ideals of norm at most `y` outside `excluded`, sorted by norm,
    /// then `p`, then index.
    pub fn prime_ideals_up_to(&self, y: f64, excluded: &ExcludedSet) -> Vec<PrimeIdealSpec> {
        if !(y >= 2.0) {
            return Vec::new();
        }
        let limit = if y.is_finite() {
            y.floor() as u64
        } else {
            u64::MAX
        };
        let mut out: Vec<PrimeIdealSpec> = primes_up_to(limit)
            .into_iter()
            .flat_map(|p| self.splitting(p).expect("sieved primes are prime"))
            .filter(|s| s.norm <= limit && !excluded.contains(s))
            .collect();
        out.sort_by_key(|s| (s.norm, s.p, s.index));
        out
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Rational => write!(f, "Q"),
            Self::Quadratic(q) => write!(f, "Q(sqrt({}))", q.d),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
    /// The prime itself, in the rational field.
    Rational,
}

/// A prime ideal, identified by the rational prime below it and an index
/// (1 or 2) separating the two ideals above a split prime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PrimeIdealSpec {
    pub p: u64,
    pub split_type: SplitType,
    pub norm: u64,
    pub index: u8,
}

impl PrimeIdealSpec {
    pub fn key(&self) -> (u64, u8) {
        (self.p, self.index)
    }
}

/// An ideal given by its prime ideal factorisation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdealSpec {
    pub factors: Vec<(PrimeIdealSpec, u32)>,
    pub norm: u64,
}

impl IdealSpec {
    pub fn unit() -> Self {
        Self {
            factors: Vec::new(),
            norm: 1,
        }
    }

    pub fn from_factors(mut factors: Vec<(PrimeIdealSpec, u32)>) -> Result<Self> {
        factors.retain(|f| f.1 > 0);
        factors.sort_by_key(|f| f.0.key());
        if factors.windows(2).any(|w| w[0].0.key() == w[1].0.key()) {
            return Err(Error::invalid("repeated prime ideal in factorisation"));
        }
        let mut norm = 1u64;
        for (pi, e) in &factors {
            let pow = pi
                .norm
                .checked_pow(*e)
                .ok_or_else(|| Error::invalid("ideal norm overflows"))?;
            norm = norm
                .checked_mul(pow)
                .ok_or_else(|| Error::invalid("ideal norm overflows"))?;
        }
        Ok(Self { factors, norm })
    }

    /// `P(a)`: the largest norm of a prime ideal dividing `a`, `1` for the unit ideal.
    pub fn largest_prime_norm(&self) -> u64 {
        self.factors.iter().map(|f| f.0.norm).max().unwrap_or(1)
    }

    /// Every divisor of the ideal.
    pub fn divisors(&self) -> Vec<IdealSpec> {
        let mut out = vec![IdealSpec::unit()];
        for (pi, e) in &self.factors {
            let mut next = Vec::with_capacity(out.len() * (*e as usize + 1));
            for d in &out {
                for k in 0..=*e {
                    let mut f = d.factors.clone();
                    if k > 0 {
                        f.push((*pi, k));
                    }
                    next.push(IdealSpec {
                        factors: f,
                        norm: d.norm * pi.norm.pow(k),
                    });
                }
            }
            out = next;
        }
        out
    }
}

/// A finite set `T` of excluded prime ideals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExcludedSet {
    members: BTreeSet<(u64, u8)>,
}

impl ExcludedSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_specs<I: IntoIterator<Item = PrimeIdealSpec>>(specs: I) -> Self {
        Self {
            members: specs.into_iter().map(|s| s.key()).collect(),
        }
    }

    /// Every prime ideal of `field` above `p`.
    pub fn above(field: &Field, p: u64) -> Result<Self> {
        Ok(Self::from_specs(field.splitting(p)?))
    }

    /// Parse `p:index,...`; a bare `p` means index 1.
    pub fn parse(field: &Field, text: &str) -> Result<Self> {
        let mut members = BTreeSet::new();
        for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, idx) = match item.split_once(':') {
                Some((p, i)) => (p.trim(), i.trim()),
                None => (item, "1"),
            };
            let p: u64 = p
                .parse()
                .map_err(|_| Error::Parse(format!("invalid prime in {item:?}")))?;
            let idx: u8 = idx
                .parse()
                .map_err(|_| Error::Parse(format!("invalid index in {item:?}")))?;
            let above = field.splitting(p)?;
            if !above.iter().any(|s| s.index == idx) {
                return Err(Error::invalid(format!(
                    "no prime ideal {p}:{idx} in {field}"
                )));
            }
            if !members.insert((p, idx)) {
                return Err(Error::invalid(format!(
                    "prime ideal {p}:{idx} listed twice"
                )));
            }
        }
        Ok(Self { members })
    }

    pub fn contains(&self, s: &PrimeIdealSpec) -> bool {
        self.members.contains(&s.key())
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members as `p:index` strings.
    pub fn labels(&self) -> Vec<String> {
        self.members
            .iter()
            .map(|(p, i)| format!("{p}:{i}"))
            .collect()
    }
}
