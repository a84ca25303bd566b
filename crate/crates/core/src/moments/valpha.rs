//! The limit `v(alpha) = lim Var[X] / n^3` as a series over `(a1, a2, j1, j2, j3)`.
//!
//! For `d = (d1, d2)` and `a_i = d_i / d`, the floor values `j1 = floor(n/d1)`,
//! `j2 = floor(n/d2)`, `j3 = floor(n/[d1, d2])` are fixed exactly when
//! `rho1 n < d <= rho2 n`. Each coprime `(a1, a2)` with a nonempty interval
//! `rho1 < rho2` contributes `beta^(j1+j2-j3) (1 - beta^j3) C1(a1, a2) (rho2^3 - rho1^3)`.

use std::collections::{BTreeSet, HashMap};

use num_rational::Ratio;
use rayon::prelude::*;

use super::c1::C1Engine;
use super::TruncationConfig;
use crate::arith::gcd;
use crate::error::{Error, Result};
use crate::sum::{pow_by_squaring, NeumaierSum};

/// The interval `(rho1, rho2]` for one `(a, j)`, kept as integer reciprocals.
///
/// `rho1 = 1 / min(a1 (j1+1), a2 (j2+1), a1 a2 (j3+1))` and
/// `rho2 = 1 / max(a1 j1, a2 j2, a1 a2 j3)`, so membership `rho1 < rho2` is the
/// integer comparison `upper_den < lower_den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RhoBounds {
    pub a: (u64, u64),
    pub j: (u64, u64, u64),
    pub lower_den: u64,
    pub upper_den: u64,
}

impl RhoBounds {
    pub fn rho1(&self) -> f64 {
        1.0 / self.lower_den as f64
    }

    pub fn rho2(&self) -> f64 {
        1.0 / self.upper_den as f64
    }

    pub fn rho1_exact(&self) -> Ratio<u64> {
        Ratio::new(1, self.lower_den)
    }

    pub fn rho2_exact(&self) -> Ratio<u64> {
        Ratio::new(1, self.upper_den)
    }

    /// `rho1 < rho2`, decided without floating point.
    pub fn is_nonempty(&self) -> bool {
        self.upper_den < self.lower_den
    }

    /// `rho2^3 - rho1^3`.
    pub fn cube_gap(&self) -> f64 {
        let (r1, r2) = (self.rho1(), self.rho2());
        (r2 - r1) * (r1 * r1 + r1 * r2 + r2 * r2)
    }
}

pub fn rho_bounds(a1: u64, a2: u64, j1: u64, j2: u64, j3: u64) -> Result<RhoBounds> {
    if [a1, a2, j1, j2, j3].contains(&0) {
        return Err(Error::InvalidArgument("rho_bounds inputs must be positive".into()));
    }
    let a12 = a1.checked_mul(a2).ok_or(Error::Overflow("a1 a2"))?;
    let lower = [
        a1.checked_mul(j1 + 1),
        a2.checked_mul(j2 + 1),
        a12.checked_mul(j3 + 1),
    ];
    let upper = [a1.checked_mul(j1), a2.checked_mul(j2), a12.checked_mul(j3)];
    let lower_den = lower
        .into_iter()
        .map(|x| x.ok_or(Error::Overflow("rho denominator")))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .min()
        .expect("three entries");
    let upper_den = upper
        .into_iter()
        .map(|x| x.ok_or(Error::Overflow("rho denominator")))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("three entries");
    Ok(RhoBounds {
        a: (a1, a2),
        j: (j1, j2, j3),
        lower_den,
        upper_den,
    })
}

/// Integers `a` with `j / (j3 + 1) < a < (j + 1) / j3`.
#[inline]
fn a_range(j: u64, j3: u64) -> std::ops::RangeInclusive<u64> {
    (j / (j3 + 1) + 1)..=(j / j3)
}

/// Visits every `(a, j)` of the index set with `j3 <= j3_max` and
/// `j1 + j2 - j3 <= max_excess`, for one fixed `j3`.
fn for_each_member_at(j3: u64, max_excess: u64, mut f: impl FnMut(RhoBounds)) {
    if j3 > max_excess {
        return;
    }
    // j2 >= j3 forces j1 <= max_excess.
    for j1 in j3..=max_excess {
        for j2 in j3..=(max_excess + j3 - j1) {
            for a1 in a_range(j2, j3) {
                for a2 in a_range(j1, j3) {
                    if gcd(a1, a2) != 1 {
                        continue;
                    }
                    let b = rho_bounds(a1, a2, j1, j2, j3).expect("positive, small inputs");
                    if b.is_nonempty() {
                        f(b);
                    }
                }
            }
        }
    }
}

/// Visits the truncated index set in a fixed order (`j3`, `j1`, `j2`, `a1`, `a2`).
pub fn for_each_member(j3_max: u64, max_excess: u64, mut f: impl FnMut(RhoBounds)) {
    for j3 in 1..=j3_max {
        for_each_member_at(j3, max_excess, &mut f);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VAlpha {
    pub alpha: f64,
    pub value: f64,
    /// Bound on the mass of the dropped `(j1, j2, j3)` region plus the `C1` truncation.
    pub error_estimate: f64,
    pub tail_bound: f64,
    pub c1_error: f64,
    /// Largest `j1 + j2 - j3` kept.
    pub max_excess: u64,
    pub terms: u64,
    pub pairs: u64,
}

/// Refuse enumerations whose `(a, j)` box exceeds this many candidates.
const WORK_LIMIT: f64 = 2e9;

/// Largest `s` with `beta^s >= tol`.
fn max_excess(beta: f64, tol: f64) -> u64 {
    if beta == 0.0 {
        return 0;
    }
    let mut s = (tol.ln() / beta.ln()).floor().max(0.0) as u64;
    while pow_by_squaring(beta, s + 1) >= tol {
        s += 1;
    }
    while s > 0 && pow_by_squaring(beta, s) < tol {
        s -= 1;
    }
    s
}

/// Upper bound on the dropped mass: `sum_dropped beta^s (1 - beta^j3) D(a, j)`.
///
/// Uses `C1 <= a1 a2 / 3`, `rho2^3 <= 1 / (a1^2 a2^2 j1 j2 j3)`, at most 5 for
/// `sum 1/a` over each admissible `a` interval, and `j1 j2 j3 >= j3^3`.
fn dropped_mass_bound(alpha: f64, j3_max: u64, max_excess: u64) -> f64 {
    let beta = 1.0 - alpha;
    let scale = 25.0 / 3.0;
    let big_j = j3_max as f64;
    let beyond_j3 = pow_by_squaring(beta, j3_max + 1) / ((big_j + 1.0).powi(3) * alpha.powi(3));
    let mut beyond_excess = NeumaierSum::new();
    for j3 in 1..=j3_max {
        let m = (max_excess + 1).saturating_sub(j3);
        let mf = m as f64;
        let geometric = (mf + 1.0) / alpha + beta / (alpha * alpha);
        beyond_excess.add(pow_by_squaring(beta, j3 + m) * geometric / (j3 as f64).powi(3));
    }
    scale * (beyond_j3 + beyond_excess.value())
}

/// `v(alpha)` for `alpha` in `(0, 1)`.
pub fn v_alpha(alpha: f64, config: &TruncationConfig) -> Result<VAlpha> {
    config.validate()?;
    let engine = C1Engine::new(config.c1_cutoff)?;
    v_alpha_with_engine(alpha, config, &engine)
}

/// As [`v_alpha`], reusing a prebuilt [`C1Engine`] (its cutoff overrides the config's).
pub fn v_alpha_with_engine(
    alpha: f64,
    config: &TruncationConfig,
    engine: &C1Engine,
) -> Result<VAlpha> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "v(alpha) is defined on (0, 1), got {alpha}"
        )));
    }
    config.validate()?;
    let beta = 1.0 - alpha;
    let s_max = max_excess(beta, config.beta_tail_tol);
    let j3_max = config.j3_max.min(s_max.max(1));

    let work: f64 = (1..=j3_max)
        .map(|j3| {
            let per_j: f64 = (j3..=s_max).map(|j| a_range(j, j3).count() as f64).sum();
            per_j * per_j
        })
        .sum();
    if work > WORK_LIMIT {
        return Err(Error::ResourceLimit(format!(
            "v({alpha}) would enumerate ~{work:.2e} candidates; raise beta_tail_tol or lower j3_max"
        )));
    }

    let pairs: BTreeSet<(u64, u64)> = (1..=j3_max)
        .into_par_iter()
        .map(|j3| {
            let mut local = BTreeSet::new();
            for_each_member_at(j3, s_max, |b| {
                local.insert((b.a.0.min(b.a.1), b.a.0.max(b.a.1)));
            });
            local
        })
        .reduce(BTreeSet::new, |mut a, b| {
            a.extend(b);
            a
        });
    let c1: HashMap<(u64, u64), (f64, f64)> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let v = engine.c1(x, y)?;
            Ok(((x, y), (v.value, v.tail_error)))
        })
        .collect::<Result<_>>()?;

    let partials: Vec<(NeumaierSum, NeumaierSum, u64)> = (1..=j3_max)
        .into_par_iter()
        .map(|j3| {
            let mut value = NeumaierSum::new();
            let mut err = NeumaierSum::new();
            let mut terms = 0u64;
            let decay = 1.0 - pow_by_squaring(beta, j3);
            for_each_member_at(j3, s_max, |b| {
                let (j1, j2, _) = b.j;
                let weight = pow_by_squaring(beta, j1 + j2 - j3) * decay * b.cube_gap();
                let (c, e) = c1[&(b.a.0.min(b.a.1), b.a.0.max(b.a.1))];
                value.add(weight * c);
                err.add(weight * e);
                terms += 1;
            });
            (value, err, terms)
        })
        .collect();

    let mut value = NeumaierSum::new();
    let mut c1_error = NeumaierSum::new();
    let mut terms = 0;
    for (v, e, t) in &partials {
        value.merge(v);
        c1_error.merge(e);
        terms += t;
    }
    let tail_bound = dropped_mass_bound(alpha, j3_max, s_max);
    Ok(VAlpha {
        alpha,
        value: value.value(),
        error_estimate: tail_bound + c1_error.value(),
        tail_bound,
        c1_error: c1_error.value(),
        max_excess: s_max,
        terms,
        pairs: pairs.len() as u64,
    })
}
