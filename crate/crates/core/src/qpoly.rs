//! Exact arithmetic in `Z[q]`.
//!
//! Provides q-analogs, cyclotomic polynomials (memoised per process) and a brute-force
//! oracle for `deg lcm([k]_q : k in A)` with two independent routes: a product of
//! cyclotomic factors over the divisor closure of `A`, and iterated
//! `lcm(f, g) = f * g / gcd(f, g)` using a primitive pseudo-remainder sequence.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Dense polynomial with arbitrary precision integer coefficients, lowest degree first.
///
/// Trailing zero coefficients are never stored, so the zero polynomial has no
/// coefficients and the last stored coefficient is the leading one.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64s(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: BigInt) -> Self {
        Self::new(vec![c])
    }

    /// `c * q^k`.
    pub fn monomial(c: BigInt, k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[k] = c;
        Self::new(coeffs)
    }

    /// `q^k - 1`.
    pub fn q_power_minus_one(k: usize) -> Self {
        let mut coeffs = vec![BigInt::zero(); k + 1];
        coeffs[0] = BigInt::from(-1);
        coeffs[k] += BigInt::one();
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    /// Gcd of the coefficients, zero for the zero polynomial.
    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = g.gcd(c);
            if g.is_one() {
                break;
            }
        }
        g
    }

    /// Divides out the content and makes the leading coefficient positive.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return IntPoly::zero();
        }
        let mut c = self.content();
        if self.leading().is_some_and(Signed::is_negative) {
            c = -c;
        }
        if c.is_one() {
            return self.clone();
        }
        IntPoly::new(self.coeffs.iter().map(|x| x / &c).collect())
    }

    fn scale(&self, c: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Exact quotient `f / g`; fails if `g` is zero or leaves a remainder.
    pub fn divexact(&self, divisor: &IntPoly) -> Result<IntPoly> {
        let (dlen, lead) = match divisor.leading() {
            Some(l) => (divisor.coeffs.len(), l),
            None => return Err(Error::InvalidArgument("division by the zero polynomial".into())),
        };
        if self.is_zero() {
            return Ok(IntPoly::zero());
        }
        if self.coeffs.len() < dlen {
            return Err(Error::NotExactlyDivisible);
        }
        let mut rem = self.coeffs.clone();
        let qlen = rem.len() - dlen + 1;
        let mut quot = vec![BigInt::zero(); qlen];
        let unit = lead.is_one();
        for i in (0..qlen).rev() {
            let top = &rem[i + dlen - 1];
            if top.is_zero() {
                continue;
            }
            let q = if unit {
                top.clone()
            } else {
                let (q, r) = top.div_rem(lead);
                if !r.is_zero() {
                    return Err(Error::NotExactlyDivisible);
                }
                q
            };
            for (j, dc) in divisor.coeffs.iter().enumerate() {
                if !dc.is_zero() {
                    rem[i + j] -= &q * dc;
                }
            }
            quot[i] = q;
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return Err(Error::NotExactlyDivisible);
        }
        Ok(IntPoly::new(quot))
    }

    /// Pseudo-remainder of `self` by `divisor`, up to a nonzero integer factor:
    /// `c * self = Q * divisor + R` with `deg R < deg divisor`, `c` a power of `lc(divisor)`.
    pub fn pseudo_rem(&self, divisor: &IntPoly) -> Result<IntPoly> {
        let lead = divisor
            .leading()
            .ok_or_else(|| Error::InvalidArgument("pseudo-remainder by zero".into()))?;
        let dlen = divisor.coeffs.len();
        let mut rem = self.coeffs.clone();
        let unit = lead.is_one();
        while rem.len() >= dlen {
            let top = rem.pop().expect("nonempty remainder");
            let shift = rem.len() + 1 - dlen;
            if !unit {
                for c in rem.iter_mut() {
                    *c *= lead;
                }
            }
            if !top.is_zero() {
                for (j, dc) in divisor.coeffs[..dlen - 1].iter().enumerate() {
                    if !dc.is_zero() {
                        rem[shift + j] -= &top * dc;
                    }
                }
            }
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        Ok(IntPoly::new(rem))
    }

    /// Gcd in `Z[q]`, normalised to a positive leading coefficient.
    ///
    /// Runs a primitive pseudo-remainder sequence: every remainder is reduced to its
    /// primitive part, which keeps coefficient growth in check without rationals.
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() {
            return other.primitive_part().scale(&other.content());
        }
        if other.is_zero() {
            return self.primitive_part().scale(&self.content());
        }
        let content = self.content().gcd(&other.content());
        let (mut a, mut b) = if self.coeffs.len() >= other.coeffs.len() {
            (self.primitive_part(), other.primitive_part())
        } else {
            (other.primitive_part(), self.primitive_part())
        };
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).expect("b is nonzero");
            a = b;
            b = r.primitive_part();
        }
        a.primitive_part().scale(&content)
    }

    /// Lcm in `Z[q]`, normalised to a positive leading coefficient.
    pub fn lcm(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() || other.is_zero() {
            return IntPoly::zero();
        }
        let g = self.gcd(other);
        let cofactor = other.divexact(&g).expect("gcd divides its argument");
        let l = self * &cofactor;
        if l.leading().is_some_and(Signed::is_negative) {
            -l
        } else {
            l
        }
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly{:?}", self.coeffs.iter().map(|c| c.to_string()).collect::<Vec<_>>())
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            match (k, mag.is_one()) {
                (0, _) => write!(f, "{mag}")?,
                (1, true) => write!(f, "q")?,
                (1, false) => write!(f, "{mag}*q")?,
                (_, true) => write!(f, "q^{k}")?,
                (_, false) => write!(f, "{mag}*q^{k}")?,
            }
        }
        Ok(())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;

    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        IntPoly::new(out)
    }
}

impl Mul for IntPoly {
    type Output = IntPoly;

    fn mul(self, rhs: IntPoly) -> IntPoly {
        &self * &rhs
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;

    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![BigInt::zero(); len];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            out[i] -= c;
        }
        IntPoly::new(out)
    }
}

impl Neg for IntPoly {
    type Output = IntPoly;

    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.into_iter().map(|c| -c).collect())
    }
}

/// Free-function form of exact multiplication.
pub fn poly_mul(f: &IntPoly, g: &IntPoly) -> IntPoly {
    f * g
}

/// Free-function form of exact division.
pub fn poly_divexact(f: &IntPoly, g: &IntPoly) -> Result<IntPoly> {
    f.divexact(g)
}

/// `[k]_q = 1 + q + ... + q^(k-1)`.
pub fn q_analog(k: usize) -> Result<IntPoly> {
    if k == 0 {
        return Err(Error::InvalidArgument("q-analog of 0 is undefined".into()));
    }
    Ok(IntPoly::new(vec![BigInt::one(); k]))
}

fn divisors(n: usize) -> Vec<usize> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut i = 1;
    while i * i <= n {
        if n.is_multiple_of(i) {
            small.push(i);
            if i != n / i {
                large.push(n / i);
            }
        }
        i += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<usize, Arc<IntPoly>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<IntPoly>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The `d`-th cyclotomic polynomial, as `(q^d - 1) / prod_{e | d, e < d} Phi_e(q)`.
///
/// Results are cached process-wide; the cache lock is never held while computing.
pub fn cyclotomic(d: usize) -> Result<Arc<IntPoly>> {
    if d == 0 {
        return Err(Error::InvalidArgument("cyclotomic index must be positive".into()));
    }
    if let Some(p) = cyclotomic_cache().lock().expect("cache poisoned").get(&d) {
        return Ok(Arc::clone(p));
    }
    let mut poly = IntPoly::q_power_minus_one(d);
    for e in divisors(d) {
        if e == d {
            continue;
        }
        let factor = cyclotomic(e)?;
        poly = poly.divexact(&factor)?;
    }
    let poly = Arc::new(poly);
    let mut cache = cyclotomic_cache().lock().expect("cache poisoned");
    Ok(Arc::clone(cache.entry(d).or_insert(poly)))
}

/// Largest element the oracle accepts by default.
pub const DEFAULT_ORACLE_LIMIT: u64 = 512;

/// Brute-force evaluation of `deg lcm([k]_q : k in A)`.
#[derive(Debug, Clone, Copy)]
pub struct LcmOracle {
    limit: u64,
}

impl Default for LcmOracle {
    fn default() -> Self {
        Self {
            limit: DEFAULT_ORACLE_LIMIT,
        }
    }
}

impl LcmOracle {
    pub fn with_limit(limit: u64) -> Self {
        Self { limit }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    fn check(&self, set: &[u64]) -> Result<()> {
        for &k in set {
            if k == 0 {
                return Err(Error::InvalidArgument("set elements must be positive".into()));
            }
            if k > self.limit {
                return Err(Error::OutOfRange {
                    what: "oracle element",
                    value: k,
                    limit: self.limit,
                });
            }
        }
        Ok(())
    }

    /// `{d > 1 : d | k for some k in A}`.
    pub fn divisor_closure(set: &[u64]) -> BTreeSet<u64> {
        set.iter()
            .flat_map(|&k| divisors(k as usize))
            .filter(|&d| d > 1)
            .map(|d| d as u64)
            .collect()
    }

    /// The lcm itself, as the product of `Phi_d` over the divisor closure.
    pub fn lcm_by_cyclotomics(&self, set: &[u64]) -> Result<IntPoly> {
        self.check(set)?;
        let mut product = IntPoly::one();
        for d in Self::divisor_closure(set) {
            product = &product * cyclotomic(d as usize)?.as_ref();
        }
        Ok(product)
    }

    /// The lcm itself, folding `lcm(f, g) = f * g / gcd(f, g)` over the q-analogs.
    pub fn lcm_by_gcd(&self, set: &[u64]) -> Result<IntPoly> {
        self.check(set)?;
        let mut acc = IntPoly::one();
        for &k in set {
            acc = acc.lcm(&q_analog(k as usize)?);
        }
        Ok(acc)
    }

    /// Degree of the lcm via the cyclotomic product; the empty set gives 0.
    pub fn degree(&self, set: &[u64]) -> Result<u64> {
        Ok(self.lcm_by_cyclotomics(set)?.degree().unwrap_or(0) as u64)
    }

    /// Degree of the lcm via polynomial gcds.
    pub fn degree_by_gcd(&self, set: &[u64]) -> Result<u64> {
        Ok(self.lcm_by_gcd(set)?.degree().unwrap_or(0) as u64)
    }
}

/// `deg lcm([k]_q : k in A)` with the default oracle limit.
pub fn lcm_degree_oracle(set: &[u64]) -> Result<u64> {
    LcmOracle::default().degree(set)
}
