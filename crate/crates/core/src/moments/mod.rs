//! Moments of `X = deg lcm([A]_q)`.
//!
//! Exact finite sums for the expectation and variance, the main term of the
//! expectation, the cubic constant `C1(a1, a2)` and the limit `v(alpha)` of
//! `Var[X] / n^3`.

mod c1;
mod dilog;
mod exact;
mod valpha;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use c1::{c1_constant, C1Engine, C1Value};
pub use dilog::{alpha_factor, dilog, dilog_series, dilog_with_tol};
pub use exact::{
    expectation_asymptotic, expectation_exact, expectation_exact_rational, expectation_grouped,
    expectation_grouped_rational, variance_exact, variance_exact_bounded, variance_exact_pairwise,
    variance_exact_rational, variance_upper_envelope, EXACT_MODE_MAX_N, QUADRATIC_SUM_LIMIT,
};
pub use valpha::{for_each_member, rho_bounds, v_alpha, v_alpha_with_engine, RhoBounds, VAlpha};

/// Truncation levels for the `C1` double series and the `v(alpha)` five-fold series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationConfig {
    /// Bound `T` on `[d1', d2']` in the `C1` series.
    pub c1_cutoff: u64,
    /// Largest `j3` enumerated in `v(alpha)`.
    pub j3_max: u64,
    /// Terms with `beta^(j1 + j2 - j3)` below this are dropped.
    pub beta_tail_tol: f64,
    /// Absolute target for dilogarithm series.
    pub dilog_tol: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            c1_cutoff: 100_000,
            j3_max: 40,
            beta_tail_tol: 1e-12,
            dilog_tol: 1e-15,
        }
    }
}

impl TruncationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.c1_cutoff == 0 {
            return Err(Error::spec("c1_cutoff", "must be positive"));
        }
        if self.j3_max == 0 {
            return Err(Error::spec("j3_max", "must be positive"));
        }
        for (name, tol) in [("beta_tail_tol", self.beta_tail_tol), ("dilog_tol", self.dilog_tol)] {
            if !(tol > 0.0 && tol <= 1e-3) {
                return Err(Error::spec(name, format!("{tol} is not in (0, 1e-3]")));
            }
        }
        Ok(())
    }
}

/// Exact and asymptotic moments at one `(n, alpha)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: u64,
    pub alpha: f64,
    pub expectation_exact: f64,
    /// Present in exact-rational mode, as `p/q`.
    pub expectation_rational: Option<String>,
    pub expectation_asymptotic: f64,
    pub variance_exact: Option<f64>,
    pub variance_rational: Option<String>,
    /// `alpha * n^3`.
    pub variance_upper: f64,
    pub v_alpha: Option<f64>,
    pub truncation: TruncationConfig,
}
