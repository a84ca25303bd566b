//! Sieved arithmetic functions and their summatory functions.
//!
//! [`ArithTables`] holds `phi`, `mu`, `tau`, `sigma` and the smallest prime factor for
//! every integer up to a bound, computed by a single linear sieve. The tables are
//! immutable after construction and can be shared freely between threads.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ArithTables {
    limit: usize,
    // All per-integer arrays are indexed by the integer itself; slot 0 is unused.
    phi: Vec<u64>,
    mobius: Vec<i8>,
    tau: Vec<u32>,
    sigma: Vec<u64>,
    spf: Vec<u32>,
    primes: Vec<u32>,
    phi_prefix: Vec<u64>,
    tau_prefix: Vec<u64>,
}

impl ArithTables {
    /// Runs the linear sieve up to `limit` (inclusive).
    pub fn new(limit: usize) -> Result<Self> {
        if limit == 0 {
            return Err(Error::InvalidArgument("table limit must be positive".into()));
        }
        if limit > u32::MAX as usize {
            return Err(Error::OutOfRange {
                what: "table limit",
                value: limit as u64,
                limit: u32::MAX as u64,
            });
        }
        let size = limit + 1;
        let mut spf = vec![0u32; size];
        let mut primes: Vec<u32> = Vec::new();
        let mut phi = vec![0u64; size];
        let mut mobius = vec![0i8; size];
        let mut tau = vec![0u32; size];
        let mut sigma = vec![0u64; size];
        // Largest power of spf(m) dividing m, and its exponent.
        let mut spf_power = vec![0u64; size];
        let mut spf_exp = vec![0u32; size];

        phi[1] = 1;
        mobius[1] = 1;
        tau[1] = 1;
        sigma[1] = 1;
        spf_power[1] = 1;

        for m in 2..size {
            if spf[m] == 0 {
                let p = m as u64;
                spf[m] = m as u32;
                primes.push(m as u32);
                phi[m] = p - 1;
                mobius[m] = -1;
                tau[m] = 2;
                sigma[m] = p + 1;
                spf_power[m] = p;
                spf_exp[m] = 1;
            }
            let spf_m = spf[m];
            for &p in &primes {
                let target = m * p as usize;
                if p > spf_m || target >= size {
                    break;
                }
                spf[target] = p;
                let p64 = p as u64;
                if p == spf_m {
                    // p already divides m: extend the prime-power part.
                    let power = spf_power[m] * p64;
                    let exp = spf_exp[m] + 1;
                    spf_power[target] = power;
                    spf_exp[target] = exp;
                    let rest = m / spf_power[m] as usize;
                    let pp_phi = power - power / p64;
                    let pp_sigma = (power * p64 - 1) / (p64 - 1);
                    phi[target] = pp_phi * phi[rest];
                    mobius[target] = 0;
                    tau[target] = (exp + 1) * tau[rest];
                    sigma[target] = pp_sigma * sigma[rest];
                } else {
                    spf_power[target] = p64;
                    spf_exp[target] = 1;
                    phi[target] = phi[m] * (p64 - 1);
                    mobius[target] = -mobius[m];
                    tau[target] = 2 * tau[m];
                    sigma[target] = sigma[m] * (p64 + 1);
                }
            }
        }

        let mut phi_prefix = vec![0u64; size];
        let mut tau_prefix = vec![0u64; size];
        for m in 1..size {
            phi_prefix[m] = phi_prefix[m - 1] + phi[m];
            tau_prefix[m] = tau_prefix[m - 1] + tau[m] as u64;
        }

        Ok(Self {
            limit,
            phi,
            mobius,
            tau,
            sigma,
            spf,
            primes,
            phi_prefix,
            tau_prefix,
        })
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    #[inline]
    pub fn phi(&self, m: usize) -> u64 {
        self.phi[m]
    }

    #[inline]
    pub fn mobius(&self, m: usize) -> i8 {
        self.mobius[m]
    }

    #[inline]
    pub fn tau(&self, m: usize) -> u32 {
        self.tau[m]
    }

    #[inline]
    pub fn sigma(&self, m: usize) -> u64 {
        self.sigma[m]
    }

    /// Smallest prime factor, `None` for `m < 2`.
    #[inline]
    pub fn spf(&self, m: usize) -> Option<u32> {
        (m >= 2).then(|| self.spf[m])
    }

    /// `phi(1..=limit)`.
    pub fn phi_values(&self) -> &[u64] {
        &self.phi[1..]
    }

    pub fn mobius_values(&self) -> &[i8] {
        &self.mobius[1..]
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    pub fn is_prime(&self, m: usize) -> bool {
        m >= 2 && self.spf[m] as usize == m
    }

    /// Distinct prime factors of `m` in increasing order.
    pub fn prime_factors(&self, mut m: usize) -> Vec<u32> {
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m];
            out.push(p);
            while m.is_multiple_of(p as usize) {
                m /= p as usize;
            }
        }
        out
    }

    fn floor_index(&self, x: f64, what: &'static str) -> Result<usize> {
        if x.is_nan() {
            return Err(Error::InvalidArgument(format!("{what}: x is NaN")));
        }
        if x < 1.0 {
            return Ok(0);
        }
        let k = x.floor();
        if k > self.limit as f64 {
            return Err(Error::OutOfRange {
                what,
                value: k as u64,
                limit: self.limit as u64,
            });
        }
        Ok(k as usize)
    }

    /// `sum_{m <= x} phi(m)`.
    pub fn phi_summatory(&self, x: f64) -> Result<u64> {
        let k = self.floor_index(x, "phi_summatory x")?;
        Ok(self.phi_prefix[k])
    }

    /// `Phi(k)` for an integer argument.
    #[inline]
    pub fn phi_summatory_at(&self, k: usize) -> u64 {
        self.phi_prefix[k]
    }

    /// `sum_{m <= x} tau(m)`.
    pub fn tau_summatory(&self, x: f64) -> Result<u64> {
        let k = self.floor_index(x, "tau_summatory x")?;
        Ok(self.tau_prefix[k])
    }

    /// `sum_{m <= x} phi(a1 m) phi(a2 m)` as an exact integer.
    pub fn phi_pair_summatory(&self, a1: u64, a2: u64, x: f64) -> Result<u64> {
        if a1 == 0 || a2 == 0 {
            return Err(Error::InvalidArgument("a1 and a2 must be positive".into()));
        }
        if x.is_nan() {
            return Err(Error::InvalidArgument("phi_pair_summatory: x is NaN".into()));
        }
        if x < 1.0 {
            return Ok(0);
        }
        let k = x.floor();
        let reach = (a1.max(a2) as f64) * k;
        if reach > self.limit as f64 {
            return Err(Error::OutOfRange {
                what: "phi_pair_summatory max(a1,a2)*floor(x)",
                value: reach as u64,
                limit: self.limit as u64,
            });
        }
        let k = k as usize;
        let (a1, a2) = (a1 as usize, a2 as usize);
        let mut total: u64 = 0;
        for m in 1..=k {
            let term = self.phi[a1 * m]
                .checked_mul(self.phi[a2 * m])
                .ok_or(Error::Overflow("phi_pair_summatory term"))?;
            total = total
                .checked_add(term)
                .ok_or(Error::Overflow("phi_pair_summatory"))?;
        }
        Ok(total)
    }
}

/// Binary gcd.
#[inline]
pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

/// `(gcd(a, b), lcm(a, b))`; the lcm is formed as `a / g * b` and overflow is an error.
pub fn gcd_lcm(a: u64, b: u64) -> Result<(u64, u64)> {
    if a == 0 || b == 0 {
        return Err(Error::InvalidArgument("gcd_lcm requires positive inputs".into()));
    }
    let g = gcd(a, b);
    let l = (a / g).checked_mul(b).ok_or(Error::Overflow("lcm"))?;
    Ok((g, l))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_divisors(m: usize) -> Vec<usize> {
        (1..=m).filter(|d| m.is_multiple_of(*d)).collect()
    }

    #[test]
    fn rejects_zero_limit() {
        assert!(matches!(ArithTables::new(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn base_case() {
        let t = ArithTables::new(1).unwrap();
        assert_eq!(t.phi_values(), &[1]);
        assert_eq!(t.mobius_values(), &[1]);
        assert_eq!(t.spf(1), None);
    }

    #[test]
    fn twelve() {
        let t = ArithTables::new(12).unwrap();
        assert_eq!(t.phi(12), 4);
        assert_eq!(t.mobius(12), 0);
        assert_eq!(t.tau(12), 6);
        assert_eq!(t.sigma(12), 28);
        assert_eq!(t.spf(12), Some(2));
    }

    #[test]
    fn prime_97() {
        let t = ArithTables::new(97).unwrap();
        assert_eq!(t.phi(97), 96);
        assert_eq!(t.mobius(97), -1);
        assert!(t.is_prime(97));
    }

    #[test]
    fn matches_naive_factorisation() {
        let n = 2000;
        let t = ArithTables::new(n).unwrap();
        for m in 1..=n {
            let divs = naive_divisors(m);
            let phi = (1..=m).filter(|&k| gcd(k as u64, m as u64) == 1).count() as u64;
            assert_eq!(t.phi(m), phi, "phi({m})");
            assert_eq!(t.tau(m) as usize, divs.len(), "tau({m})");
            assert_eq!(t.sigma(m), divs.iter().map(|&d| d as u64).sum::<u64>(), "sigma({m})");
            let squarefree = divs.iter().skip(1).all(|&d| m % (d * d) != 0);
            let mu = if !squarefree {
                0
            } else if t.prime_factors(m).len().is_multiple_of(2) {
                1
            } else {
                -1
            };
            assert_eq!(t.mobius(m), mu, "mu({m})");
        }
    }

    #[test]
    fn sieve_invariants() {
        let n = 10_000;
        let t = ArithTables::new(n).unwrap();
        for &p in t.primes() {
            assert_eq!(t.phi(p as usize), p as u64 - 1);
            assert_eq!(t.mobius(p as usize), -1);
        }
        for m in 1..=n {
            let divs = naive_divisors(m);
            assert_eq!(divs.iter().map(|&d| t.phi(d)).sum::<u64>(), m as u64);
            let mu_sum: i64 = divs.iter().map(|&d| t.mobius(d) as i64).sum();
            assert_eq!(mu_sum, (m == 1) as i64);
            // phi(m)/m = sum_{d|m} mu(d)/d, cleared of denominators.
            let rhs: i64 = divs.iter().map(|&d| t.mobius(d) as i64 * (m / d) as i64).sum();
            assert_eq!(t.phi(m) as i64, rhs);
            if m >= 2 {
                assert!(t.sigma(m) > m as u64);
                assert!(t.tau(m) >= 2);
                let p = t.spf(m).unwrap() as usize;
                let squarefull = t.prime_factors(m).iter().any(|&q| m % (q as usize * q as usize) == 0);
                assert_eq!(t.mobius(m) == 0, squarefull);
                assert_eq!(m % p, 0);
            }
        }
    }

    #[test]
    fn summatory_values() {
        let t = ArithTables::new(100).unwrap();
        assert_eq!(t.phi_summatory(1.0).unwrap(), 1);
        assert_eq!(t.phi_summatory(10.0).unwrap(), 32);
        assert_eq!(t.phi_summatory(10.9).unwrap(), 32);
        assert_eq!(t.tau_summatory(1.0).unwrap(), 1);
        assert_eq!(t.tau_summatory(10.0).unwrap(), 27);
        assert!(matches!(
            t.phi_summatory(101.0),
            Err(Error::OutOfRange { .. })
        ));
        assert!(t.tau_summatory(f64::NAN).is_err());
        let mut last = 0;
        for i in 1..=100 {
            let v = t.phi_summatory(i as f64).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn pair_summatory() {
        let t = ArithTables::new(1000).unwrap();
        assert_eq!(t.phi_pair_summatory(1, 1, 3.0).unwrap(), 6);
        assert_eq!(t.phi_pair_summatory(2, 3, 2.0).unwrap(), 6);
        assert_eq!(t.phi_pair_summatory(5, 7, 0.5).unwrap(), 0);
        assert!(t.phi_pair_summatory(3, 2, 400.0).is_err());
        assert!(t.phi_pair_summatory(0, 2, 4.0).is_err());
        let naive: u64 = (1..=1000u64)
            .map(|m| {
                let phi = (1..=m).filter(|&k| gcd(k, m) == 1).count() as u64;
                phi * phi
            })
            .sum();
        assert_eq!(t.phi_pair_summatory(1, 1, 1000.0).unwrap(), naive);
    }

    #[test]
    fn gcd_lcm_examples() {
        assert_eq!(gcd_lcm(4, 6).unwrap(), (2, 12));
        assert_eq!(gcd_lcm(1, 17).unwrap(), (1, 17));
        assert_eq!(gcd_lcm(9, 9).unwrap(), (9, 9));
        assert!(gcd_lcm(0, 3).is_err());
        let big = 1u64 << 31;
        assert_eq!(gcd_lcm(big, big - 1).unwrap(), (1, big * (big - 1)));
        assert!(gcd_lcm(u64::MAX, u64::MAX - 1).is_err());
    }
}
