//! Degree of the least common multiple of q-analogs `[k]_q = 1 + q + ... + q^(k-1)`
//! taken over a random set drawn from the independent-inclusion model `B(n, alpha)`.
//!
//! The crate is organised bottom-up:
//!
//! * [`arith`] sieves the arithmetic functions (totient, Möbius, divisor count and sum)
//!   and their summatory functions.
//! * [`qpoly`] is exact integer polynomial arithmetic: q-analogs, cyclotomic polynomials
//!   and a brute-force lcm-degree oracle with two independent routes.
//! * [`model`] samples `B(n, alpha)`, evaluates the degree statistic through the
//!   divisor-closure identity and enumerates tiny cases exhaustively.
//! * [`moments`] evaluates the exact expectation and variance, their asymptotic main
//!   terms, the dilogarithm factor, the constant `C1(a1, a2)` and the limit `v(alpha)`.
//! * [`harness`] ties everything together behind the `qlcm` command line tool.

pub mod arith;
pub mod error;
pub mod harness;
pub mod model;
pub mod moments;
pub mod qpoly;
pub mod sum;

pub use error::{Error, Result};
