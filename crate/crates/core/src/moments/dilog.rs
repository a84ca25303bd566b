use std::f64::consts::PI;

use crate::error::{Error, Result};

const ZETA2: f64 = PI * PI / 6.0;
const DEFAULT_TOL: f64 = 1e-15;

/// `sum_{k >= 1} z^k / k^2` summed directly until the tail bound drops below `tol`.
///
/// Valid for `|z| < 1` (and `z = 1`), slow near 1; [`dilog`] only uses it on `[0, 1/2]`.
pub fn dilog_series(z: f64, tol: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z.abs() >= 1.0 {
        return if z == 1.0 { ZETA2 } else { f64::NAN };
    }
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut k = 1u64;
    loop {
        power *= z;
        sum += power / (k * k) as f64;
        // Remaining tail is at most |next term| / (1 - |z|).
        let next = (power * z).abs() / ((k + 1) * (k + 1)) as f64;
        if next / (1.0 - z.abs()) < tol {
            return sum;
        }
        k += 1;
    }
}

/// `Li2(z)` on `[0, 1]` to absolute accuracy `tol`.
///
/// Direct series on `[0, 1/2]`, reflection `Li2(z) = pi^2/6 - ln z ln(1-z) - Li2(1-z)` above.
pub fn dilog_with_tol(z: f64, tol: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidArgument(format!("dilog argument {z} is not in [0, 1]")));
    }
    if z == 1.0 {
        return Ok(ZETA2);
    }
    if z <= 0.5 {
        Ok(dilog_series(z, tol))
    } else {
        let w = 1.0 - z;
        Ok(ZETA2 - z.ln() * w.ln() - dilog_series(w, tol))
    }
}

pub fn dilog(z: f64) -> Result<f64> {
    dilog_with_tol(z, DEFAULT_TOL)
}

/// `alpha Li2(1 - alpha) / (1 - alpha)`, equal to 1 at `alpha = 1` and 0 at `alpha = 0`.
pub fn alpha_factor(alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} is not in [0, 1]")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    if alpha == 1.0 {
        return Ok(1.0);
    }
    let beta = 1.0 - alpha;
    Ok(alpha * dilog(beta)? / beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn special_values() {
        assert_eq!(dilog(0.0).unwrap(), 0.0);
        assert_eq!(dilog(1.0).unwrap(), ZETA2);
        assert!((ZETA2 - 1.6449340668).abs() < 1e-10);
        let half = PI * PI / 12.0 - std::f64::consts::LN_2.powi(2) / 2.0;
        assert!((dilog(0.5).unwrap() - half).abs() < 1e-15);
        assert!((half - 0.5822405265).abs() < 1e-10);
        assert!(dilog(-0.1).is_err());
        assert!(dilog(1.1).is_err());
    }

    #[test]
    fn reflection_matches_direct_series() {
        // The direct series still converges at 0.7 and 0.9, just slowly.
        for z in [0.55, 0.7, 0.9] {
            let direct = dilog_series(z, 1e-17);
            assert!((dilog(z).unwrap() - direct).abs() < 1e-13, "z = {z}");
        }
        let lhs = dilog(0.3).unwrap() + dilog(0.7).unwrap();
        let rhs = ZETA2 - 0.3f64.ln() * 0.7f64.ln();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn alpha_factor_limits() {
        assert_eq!(alpha_factor(1.0).unwrap(), 1.0);
        assert_eq!(alpha_factor(0.0).unwrap(), 0.0);
        assert!((alpha_factor(1.0 - 1e-8).unwrap() - 1.0).abs() < 1e-6);
        // Li2(1/2) = pi^2/12 - ln^2(2)/2, so the factor at 1/2 is that value.
        assert!((alpha_factor(0.5).unwrap() - 0.5822405264650125).abs() < 1e-15);
        assert!(alpha_factor(2.0).is_err());
        let mut last = 0.0;
        for i in 1..=100 {
            let f = alpha_factor(i as f64 / 100.0).unwrap();
            assert!(f > last);
            last = f;
        }
    }
}
