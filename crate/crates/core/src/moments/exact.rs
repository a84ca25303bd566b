use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;

use super::dilog::alpha_factor;
use crate::arith::{gcd, ArithTables};
use crate::error::{Error, Result};
use crate::sum::{pow_by_squaring, NeumaierSum};

/// Default bound on `n` for the variance double sum.
pub const QUADRATIC_SUM_LIMIT: u64 = 20_000;

/// Largest `n` accepted by the exact-rational evaluations.
pub const EXACT_MODE_MAX_N: u64 = 30;

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha = {alpha} is not in [0, 1]")))
    }
}

fn check_tables(n: u64, tables: &ArithTables) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if (tables.limit() as u64) < n {
        return Err(Error::OutOfRange {
            what: "n against table limit",
            value: n,
            limit: tables.limit() as u64,
        });
    }
    Ok(())
}

fn check_rational(n: u64, alpha: &BigRational) -> Result<()> {
    if n > EXACT_MODE_MAX_N {
        return Err(Error::ResourceLimit(format!(
            "exact rational mode needs n <= {EXACT_MODE_MAX_N}, got {n}"
        )));
    }
    if *alpha < BigRational::zero() || *alpha > BigRational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} is not in [0, 1]")));
    }
    Ok(())
}

/// `beta^k` for `k = 0..=max_exp`, each entry by binary exponentiation.
fn beta_powers(beta: f64, max_exp: usize) -> Vec<f64> {
    (0..=max_exp as u64).map(|k| pow_by_squaring(beta, k)).collect()
}

/// `E[X] = sum_{1 < d <= n} phi(d) (1 - beta^floor(n/d))`.
pub fn expectation_exact(n: u64, alpha: f64, tables: &ArithTables) -> Result<f64> {
    check_alpha(alpha)?;
    check_tables(n, tables)?;
    let n = n as usize;
    let pow = beta_powers(1.0 - alpha, n);
    let sum: NeumaierSum = (2..=n)
        .map(|d| tables.phi(d) as f64 * (1.0 - pow[n / d]))
        .collect();
    Ok(sum.value())
}

/// The same sum regrouped by `j = floor(n/d)`:
/// `alpha sum_{j <= n} beta^(j-1) Phi(n/j) - (1 - beta^n)`.
///
/// The trailing correction removes the `d = 1` term, so this equals
/// [`expectation_exact`] identically.
pub fn expectation_grouped(n: u64, alpha: f64, tables: &ArithTables) -> Result<f64> {
    check_alpha(alpha)?;
    check_tables(n, tables)?;
    let n = n as usize;
    let pow = beta_powers(1.0 - alpha, n);
    let mut sum: NeumaierSum = (1..=n)
        .map(|j| alpha * pow[j - 1] * tables.phi_summatory_at(n / j) as f64)
        .collect();
    sum.add(-(1.0 - pow[n]));
    Ok(sum.value())
}

pub fn expectation_exact_rational(
    n: u64,
    alpha: &BigRational,
    tables: &ArithTables,
) -> Result<BigRational> {
    check_rational(n, alpha)?;
    check_tables(n, tables)?;
    let n = n as usize;
    let beta = BigRational::one() - alpha;
    let pow: Vec<BigRational> = (0..=n).map(|k| num_traits::pow(beta.clone(), k)).collect();
    Ok((2..=n).fold(BigRational::zero(), |acc, d| {
        acc + (BigRational::one() - &pow[n / d]) * BigInt::from(tables.phi(d))
    }))
}

pub fn expectation_grouped_rational(
    n: u64,
    alpha: &BigRational,
    tables: &ArithTables,
) -> Result<BigRational> {
    check_rational(n, alpha)?;
    check_tables(n, tables)?;
    let n = n as usize;
    let beta = BigRational::one() - alpha;
    let pow: Vec<BigRational> = (0..=n).map(|k| num_traits::pow(beta.clone(), k)).collect();
    let grouped = (1..=n).fold(BigRational::zero(), |acc, j| {
        acc + &pow[j - 1] * BigInt::from(tables.phi_summatory_at(n / j))
    });
    Ok(alpha * grouped - (BigRational::one() - &pow[n]))
}

/// Main term `(3/pi^2) * alpha_factor(alpha) * n^2`.
pub fn expectation_asymptotic(n: u64, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    Ok(3.0 / (PI * PI) * alpha_factor(alpha)? * nf * nf)
}

/// `alpha * n^3`.
pub fn variance_upper_envelope(n: u64, alpha: f64) -> f64 {
    let nf = n as f64;
    alpha * nf * nf * nf
}

/// `Var[X]` with the default bound [`QUADRATIC_SUM_LIMIT`] on `n`.
pub fn variance_exact(n: u64, alpha: f64, tables: &ArithTables) -> Result<f64> {
    variance_exact_bounded(n, alpha, tables, QUADRATIC_SUM_LIMIT)
}

fn check_variance(n: u64, alpha: f64, tables: &ArithTables, max_n: u64) -> Result<()> {
    check_alpha(alpha)?;
    check_tables(n, tables)?;
    if n > max_n {
        return Err(Error::ResourceLimit(format!(
            "variance double sum refused: n = {n} exceeds the limit {max_n}"
        )));
    }
    Ok(())
}

/// `Var[X] = sum_{1 < d1, d2 <= n} phi(d1) phi(d2) beta^(j1 + j2 - j3) (1 - beta^j3)`
/// with `j1 = floor(n/d1)`, `j2 = floor(n/d2)`, `j3 = floor(n/[d1, d2])`.
///
/// Pairs are grouped by `g = gcd(d1, d2)`, writing `d1 = g a1`, `d2 = g a2` with
/// coprime `a1 < a2`; pairs with `[d1, d2] > n` have `j3 = 0` and vanish, so only
/// `g a1 a2 <= n` is visited. Partial sums per `g` are merged in increasing `g`.
pub fn variance_exact_bounded(n: u64, alpha: f64, tables: &ArithTables, max_n: u64) -> Result<f64> {
    check_variance(n, alpha, tables, max_n)?;
    let n = n as usize;
    let pow = beta_powers(1.0 - alpha, 2 * n);
    let partials: Vec<NeumaierSum> = (1..=n)
        .into_par_iter()
        .map(|g| {
            let mut acc = NeumaierSum::new();
            let reach = n / g;
            if g > 1 {
                let j = n / g;
                let phi = tables.phi(g) as f64;
                acc.add(phi * phi * pow[j] * (1.0 - pow[j]));
            }
            for a1 in 1..=reach {
                let d1 = g * a1;
                if d1 == 1 {
                    continue;
                }
                let j1 = n / d1;
                let phi1 = tables.phi(d1) as f64;
                for a2 in a1 + 1..=reach / a1 {
                    if gcd(a1 as u64, a2 as u64) != 1 {
                        continue;
                    }
                    let d2 = g * a2;
                    let j2 = n / d2;
                    let j3 = n / (d1 * a2);
                    let w = pow[j1 + j2 - j3] * (1.0 - pow[j3]);
                    acc.add(2.0 * phi1 * tables.phi(d2) as f64 * w);
                }
            }
            acc
        })
        .collect();
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// The same double sum evaluated over every pair `2 <= d1 <= d2 <= n`.
///
/// Quadratic in `n`; kept as an independent route and as the scaling benchmark.
pub fn variance_exact_pairwise(
    n: u64,
    alpha: f64,
    tables: &ArithTables,
    max_n: u64,
) -> Result<f64> {
    check_variance(n, alpha, tables, max_n)?;
    let n = n as usize;
    let pow = beta_powers(1.0 - alpha, 2 * n);
    let partials: Vec<NeumaierSum> = (2..=n)
        .into_par_iter()
        .map(|d1| {
            let mut acc = NeumaierSum::new();
            let j1 = n / d1;
            let phi1 = tables.phi(d1) as f64;
            for d2 in d1..=n {
                let g = gcd(d1 as u64, d2 as u64) as usize;
                let l = d1 / g * d2;
                if l > n {
                    continue;
                }
                let (j2, j3) = (n / d2, n / l);
                let w = pow[j1 + j2 - j3] * (1.0 - pow[j3]);
                let mult = if d1 == d2 { 1.0 } else { 2.0 };
                acc.add(mult * phi1 * tables.phi(d2) as f64 * w);
            }
            acc
        })
        .collect();
    let mut total = NeumaierSum::new();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.value())
}

/// Exact rational variance for rational `alpha` and `n <= 30`.
pub fn variance_exact_rational(
    n: u64,
    alpha: &BigRational,
    tables: &ArithTables,
) -> Result<BigRational> {
    check_rational(n, alpha)?;
    check_tables(n, tables)?;
    let n = n as usize;
    let beta = BigRational::one() - alpha;
    let pow: Vec<BigRational> = (0..=2 * n).map(|k| num_traits::pow(beta.clone(), k)).collect();
    let mut total = BigRational::zero();
    for d1 in 2..=n {
        for d2 in 2..=n {
            let l = d1 / gcd(d1 as u64, d2 as u64) as usize * d2;
            if l > n {
                continue;
            }
            let (j1, j2, j3) = (n / d1, n / d2, n / l);
            let w = &pow[j1 + j2 - j3] * (BigRational::one() - &pow[j3]);
            total += w * BigInt::from(tables.phi(d1) * tables.phi(d2));
        }
    }
    Ok(total)
}
