//! Computational toolkit for smooth numbers and the Diophantine constructions
//! built on top of them.
//!
//! The crate is organised by subject:
//!
//! * [`dickman_xi`]: the Dickman–de Bruijn function `rho`, the saddle function
//!   `xi`, their integrals and asymptotic expansions.
//! * [`smooth_q`]: exact counts of `Y`-smooth integers via a smallest prime
//!   factor sieve.
//! * [`quad_ideals`]: prime ideal splitting and smooth ideal counting in
//!   quadratic fields, with excluded prime sets.
//! * [`bounds`]: closed-form lower-bound evaluators.
//! * [`sunit`]: S-unit equations, the pigeonhole construction, solution lifting
//!   and vanishing degrees.
//! * [`normpoly`]: norm polynomial (generalised Ramanujan–Nagell) equations in
//!   quadratic fields of class number one.
//! * [`cli`]: the `smoothforge` command line front end.

pub mod bounds;
pub mod cli;
pub mod config;
pub mod dickman_xi;
mod error;
pub mod normpoly;
pub mod primes;
pub mod quad_ideals;
pub mod smooth_q;
pub mod sunit;

pub use error::{Error, Result};
