//! Run configuration: numerical parameters, resource caps and the
//! caller-supplied constants that stand in for unspecified effective constants.
//!
//! Files are plain `key = value` text; `#` starts a comment.

use std::path::Path;

use num_rational::Ratio;
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    /// Constant of the smooth-count lower bound.
    #[serde(rename = "C_cep")]
    pub c_cep: f64,
    /// Constant of the ideal-count lower bound.
    #[serde(rename = "C_thm5")]
    pub c_thm5: f64,
    /// Conjugate box factor used by the norm-form construction.
    #[serde(rename = "C2_lemma7")]
    pub c2_lemma7: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self {
            c_cep: 1.0,
            c_thm5: 1.0,
            c2_lemma7: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Config {
    #[serde(serialize_with = "ser_ratio")]
    pub rho_step: Ratio<u64>,
    pub rho_umax: f64,
    pub xi_tolerance: f64,
    pub sieve_limit: u64,
    pub enumeration_cap: u64,
    pub funceq_tolerance: f64,
    pub constants: Constants,
    pub seed: u64,
}

fn ser_ratio<S: serde::Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl Default for Config {
    fn default() -> Self {
        Self {
            rho_step: Ratio::new(1, 1024),
            rho_umax: 64.0,
            xi_tolerance: 1e-12,
            sieve_limit: 10_000_000,
            enumeration_cap: 10_000_000,
            funceq_tolerance: 1e-9,
            constants: Constants::default(),
            seed: 0,
        }
    }
}

/// Parse a rational like `1/1024` or `3`.
pub fn parse_ratio(s: &str) -> Result<Ratio<u64>> {
    let s = s.trim();
    let bad = || Error::Parse(format!("invalid rational {s:?}"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (
            n.trim().parse::<u64>().map_err(|_| bad())?,
            d.trim().parse::<u64>().map_err(|_| bad())?,
        ),
        None => (s.parse::<u64>().map_err(|_| bad())?, 1),
    };
    if d == 0 {
        return Err(bad());
    }
    Ok(Ratio::new(n, d))
}

/// Integer that may be written in float notation, e.g. `1e7`.
pub fn parse_count(s: &str) -> Result<u64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| Error::Parse(format!("invalid integer {s:?}")))?;
    if !(f >= 0.0 && f.fract() == 0.0 && f < 1.8e19) {
        return Err(Error::Parse(format!("invalid integer {s:?}")));
    }
    Ok(f as u64)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid number {s:?}")))
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            self.set(k.trim(), v.trim())?;
        }
        self.validate()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rho_step" => self.rho_step = parse_ratio(value)?,
            "rho_umax" => self.rho_umax = parse_f64(value)?,
            "xi_tolerance" => self.xi_tolerance = parse_f64(value)?,
            "sieve_limit" => self.sieve_limit = parse_count(value)?,
            "enumeration_cap" => self.enumeration_cap = parse_count(value)?,
            "funceq_tolerance" => self.funceq_tolerance = parse_f64(value)?,
            "C_cep" => self.constants.c_cep = parse_f64(value)?,
            "C_thm5" => self.constants.c_thm5 = parse_f64(value)?,
            "C2_lemma7" => self.constants.c2_lemma7 = parse_f64(value)?,
            "seed" => self.seed = parse_count(value)?,
            _ => return Err(Error::Parse(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho_umax", self.rho_umax),
            ("xi_tolerance", self.xi_tolerance),
            ("funceq_tolerance", self.funceq_tolerance),
            ("C2_lemma7", self.constants.c2_lemma7),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if *self.rho_step.numer() == 0 {
            return Err(Error::invalid("rho_step must be positive"));
        }
        if self.sieve_limit < 2 || self.enumeration_cap == 0 {
            return Err(Error::invalid(
                "sieve_limit and enumeration_cap must be positive",
            ));
        }
        for (name, v) in [
            ("C_cep", self.constants.c_cep),
            ("C_thm5", self.constants.c_thm5),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        Ok(())
    }
}
