//! The random set model `B(n, alpha)`.
//!
//! Each of `1..=n` is included independently with probability `alpha`. Trials are
//! driven by a ChaCha stream keyed by `(seed, trial_index)`, so any trial can be
//! regenerated on its own and parallel runs reduce to the same numbers as serial ones.

use std::collections::BTreeMap;

use bitvec::vec::BitVec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::ArithTables;
use crate::error::{Error, Result};
use crate::sum::NeumaierSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub n: u64,
    pub alpha: f64,
    pub seed: u64,
    pub trials: u64,
}

impl ModelParams {
    pub fn new(n: u64, alpha: f64, seed: u64, trials: u64) -> Result<Self> {
        let params = Self {
            n,
            alpha,
            seed,
            trials,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha = {} is not in [0, 1]",
                self.alpha
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be positive".into()));
        }
        Ok(())
    }
}

/// A subset of `{1, ..., n}`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subset {
    n: usize,
    bits: BitVec,
}

impl Subset {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            bits: BitVec::repeat(false, n),
        }
    }

    pub fn full(n: usize) -> Self {
        Self {
            n,
            bits: BitVec::repeat(true, n),
        }
    }

    /// Builds a subset from its elements; anything outside `1..=n` is an error.
    pub fn from_elements(n: usize, elements: &[u64]) -> Result<Self> {
        let mut s = Self::empty(n);
        for &k in elements {
            if k == 0 || k as usize > n {
                return Err(Error::InvalidArgument(format!("{k} is not in 1..={n}")));
            }
            s.insert(k as usize);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn contains(&self, k: usize) -> bool {
        k >= 1 && k <= self.n && self.bits[k - 1]
    }

    pub fn insert(&mut self, k: usize) {
        self.bits.set(k - 1, true);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.not_any()
    }

    pub fn elements(&self) -> Vec<u64> {
        self.bits.iter_ones().map(|i| i as u64 + 1).collect()
    }

    pub fn is_subset_of(&self, other: &Subset) -> bool {
        self.bits.iter_ones().all(|i| other.contains(i + 1))
    }
}

impl std::fmt::Debug for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Subset(n={}, {:?})", self.n, self.elements())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleResult {
    pub trial_index: u64,
    pub subset: Subset,
    pub degree: u64,
}

/// The rng for one trial: ChaCha8 seeded by `seed`, stream `trial_index`.
pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Draws the subset for one trial; a pure function of `(seed, trial_index)`.
pub fn sample_set(params: &ModelParams, trial_index: u64) -> Result<Subset> {
    params.validate()?;
    if trial_index >= params.trials {
        return Err(Error::OutOfRange {
            what: "trial_index",
            value: trial_index,
            limit: params.trials - 1,
        });
    }
    let n = params.n as usize;
    let mut rng = trial_rng(params.seed, trial_index);
    let mut set = Subset::empty(n);
    for k in 1..=n {
        if rng.random_bool(params.alpha) {
            set.insert(k);
        }
    }
    Ok(set)
}

/// `I_A(d)`: whether some multiple of `d` lies in `A`.
pub fn indicator(set: &Subset, d: u64, n: u64) -> Result<bool> {
    if d == 0 {
        return Err(Error::InvalidArgument("indicator of d = 0".into()));
    }
    if d > n {
        return Err(Error::OutOfRange {
            what: "indicator d",
            value: d,
            limit: n,
        });
    }
    let (d, n) = (d as usize, n as usize);
    Ok((d..=n).step_by(d).any(|m| set.contains(m)))
}

/// `X = sum_{1 < d <= n} phi(d) I_A(d)`, scanning multiples of each `d`.
pub fn degree_statistic(set: &Subset, n: u64, tables: &ArithTables) -> Result<u64> {
    if (tables.limit() as u64) < n {
        return Err(Error::OutOfRange {
            what: "degree_statistic n",
            value: n,
            limit: tables.limit() as u64,
        });
    }
    let n = n as usize;
    if set.is_empty() {
        return Ok(0);
    }
    let mut total = 0u64;
    for d in 2..=n {
        if (d..=n).step_by(d).any(|m| set.contains(m)) {
            total += tables.phi(d);
        }
    }
    Ok(total)
}

/// `sum_{1 < d <= n} phi(d)`, the value of `X` for the full set.
pub fn max_degree(n: u64, tables: &ArithTables) -> u64 {
    tables.phi_summatory_at(n as usize) - 1
}

/// Largest `n` for which exhaustive enumeration is attempted.
pub const ENUMERATION_MAX_N: u64 = 22;

/// Exact distribution of `X` under `B(n, alpha)` for rational `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub n: u64,
    pub alpha: BigRational,
    /// `X` value to its probability; only values of positive probability appear.
    pub pmf: BTreeMap<u64, BigRational>,
}

impl ExactDistribution {
    pub fn expectation(&self) -> BigRational {
        self.pmf
            .iter()
            .fold(BigRational::zero(), |acc, (&x, p)| acc + p * BigInt::from(x))
    }

    pub fn variance(&self) -> BigRational {
        let mean = self.expectation();
        self.pmf.iter().fold(BigRational::zero(), |acc, (&x, p)| {
            let dev = BigRational::from_integer(BigInt::from(x)) - &mean;
            acc + p * &dev * &dev
        })
    }

    pub fn total_probability(&self) -> BigRational {
        self.pmf.values().fold(BigRational::zero(), |a, p| a + p)
    }
}

/// Enumerates all `2^n` subsets, recording `X` and `|A|` for each.
///
/// Returns `counts[x][k]`: how many subsets of size `k` have degree `x`.
fn enumerate_counts(n: usize, tables: &ArithTables) -> BTreeMap<u64, Vec<u64>> {
    // Divisors d > 1 of every k <= n.
    let mut divisors: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for d in 2..=n {
        for m in (d..=n).step_by(d) {
            divisors[m].push(d);
        }
    }
    let mut cover = vec![0u32; n + 1];
    let mut counts: BTreeMap<u64, Vec<u64>> = BTreeMap::new();

    struct Walk<'a> {
        n: usize,
        divisors: &'a [Vec<usize>],
        tables: &'a ArithTables,
        cover: &'a mut [u32],
        counts: &'a mut BTreeMap<u64, Vec<u64>>,
    }

    impl Walk<'_> {
        fn visit(&mut self, k: usize, degree: u64, size: usize) {
            if k > self.n {
                let row = self
                    .counts
                    .entry(degree)
                    .or_insert_with(|| vec![0; self.n + 1]);
                row[size] += 1;
                return;
            }
            self.visit(k + 1, degree, size);
            let mut added = 0;
            for &d in &self.divisors[k] {
                if self.cover[d] == 0 {
                    added += self.tables.phi(d);
                }
                self.cover[d] += 1;
            }
            self.visit(k + 1, degree + added, size + 1);
            for &d in &self.divisors[k] {
                self.cover[d] -= 1;
            }
        }
    }

    Walk {
        n,
        divisors: &divisors,
        tables,
        cover: &mut cover,
        counts: &mut counts,
    }
    .visit(1, 0, 0);
    counts
}

/// Exhaustive ground truth for `n <= 22` and rational `alpha`.
pub fn enumerate_exact(
    n: u64,
    alpha: &BigRational,
    tables: &ArithTables,
) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if n > ENUMERATION_MAX_N {
        return Err(Error::ResourceLimit(format!(
            "exhaustive enumeration needs n <= {ENUMERATION_MAX_N}, got {n}"
        )));
    }
    if (tables.limit() as u64) < n {
        return Err(Error::OutOfRange {
            what: "enumerate_exact n",
            value: n,
            limit: tables.limit() as u64,
        });
    }
    if *alpha < BigRational::zero() || *alpha > BigRational::one() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} is not in [0, 1]")));
    }
    let beta = BigRational::one() - alpha;
    let size_prob: Vec<BigRational> = (0..=n as i32)
        .map(|k| num_traits::pow(alpha.clone(), k as usize) * num_traits::pow(beta.clone(), (n as i32 - k) as usize))
        .collect();
    let counts = enumerate_counts(n as usize, tables);
    let mut pmf = BTreeMap::new();
    for (x, row) in counts {
        let p = row
            .iter()
            .zip(&size_prob)
            .filter(|(&c, _)| c > 0)
            .fold(BigRational::zero(), |acc, (&c, w)| acc + w * BigInt::from(c));
        if !p.is_zero() {
            pmf.insert(x, p);
        }
    }
    Ok(ExactDistribution {
        n,
        alpha: alpha.clone(),
        pmf,
    })
}

/// Sample statistics of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSummary {
    pub trials: u64,
    pub mean: f64,
    /// Unbiased, denominator `trials - 1`; zero for a single trial.
    pub variance: f64,
    pub std_error: f64,
    pub min: u64,
    pub max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloRun {
    pub params: ModelParams,
    /// `X` for each trial, in trial-index order.
    pub degrees: Vec<u64>,
    pub summary: MonteCarloSummary,
}

impl MonteCarloRun {
    /// Fraction of trials with `|X - center| > epsilon * center`.
    pub fn deviation_fraction(&self, center: f64, epsilon: f64) -> f64 {
        let bad = self
            .degrees
            .iter()
            .filter(|&&x| (x as f64 - center).abs() > epsilon * center)
            .count();
        bad as f64 / self.degrees.len() as f64
    }
}

/// Mean and unbiased variance in trial order, two-pass with compensated sums.
pub fn summarize(degrees: &[u64]) -> MonteCarloSummary {
    let trials = degrees.len() as u64;
    let mean = degrees.iter().map(|&x| x as f64).collect::<NeumaierSum>().value() / trials as f64;
    let variance = if trials > 1 {
        let ss = degrees
            .iter()
            .map(|&x| {
                let d = x as f64 - mean;
                d * d
            })
            .collect::<NeumaierSum>()
            .value();
        ss / (trials - 1) as f64
    } else {
        0.0
    };
    MonteCarloSummary {
        trials,
        mean,
        variance,
        std_error: (variance / trials as f64).sqrt(),
        min: degrees.iter().copied().min().unwrap_or(0),
        max: degrees.iter().copied().max().unwrap_or(0),
    }
}

/// Runs all trials on the current rayon pool.
///
/// Per-trial degrees are collected in index order before reduction, so the summary
/// does not depend on how trials were scheduled.
pub fn monte_carlo(params: &ModelParams, tables: &ArithTables) -> Result<MonteCarloRun> {
    params.validate()?;
    if (tables.limit() as u64) < params.n {
        return Err(Error::OutOfRange {
            what: "monte_carlo n",
            value: params.n,
            limit: tables.limit() as u64,
        });
    }
    let degrees = (0..params.trials)
        .into_par_iter()
        .map(|t| {
            let set = sample_set(params, t)?;
            degree_statistic(&set, params.n, tables)
        })
        .collect::<Result<Vec<u64>>>()?;
    let summary = summarize(&degrees);
    Ok(MonteCarloRun {
        params: *params,
        degrees,
        summary,
    })
}

/// Lazily yields every trial with its subset, serially.
pub fn samples<'a>(
    params: &'a ModelParams,
    tables: &'a ArithTables,
) -> impl Iterator<Item = Result<SampleResult>> + 'a {
    (0..params.trials).map(move |t| {
        let subset = sample_set(params, t)?;
        let degree = degree_statistic(&subset, params.n, tables)?;
        Ok(SampleResult {
            trial_index: t,
            subset,
            degree,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qpoly::LcmOracle;

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(0, 0.5, 1, 1).is_err());
        assert!(ModelParams::new(5, 1.5, 1, 1).is_err());
        assert!(ModelParams::new(5, f64::NAN, 1, 1).is_err());
        assert!(ModelParams::new(5, 0.5, 1, 0).is_err());
        assert!(ModelParams::new(5, 0.0, 1, 1).is_ok());
    }

    #[test]
    fn sampling_extremes() {
        let zero = ModelParams::new(50, 0.0, 7, 20).unwrap();
        let one = ModelParams::new(50, 1.0, 7, 20).unwrap();
        for t in 0..20 {
            assert!(sample_set(&zero, t).unwrap().is_empty());
            assert_eq!(sample_set(&one, t).unwrap(), Subset::full(50));
        }
        assert!(sample_set(&zero, 20).is_err());
    }

    #[test]
    fn sampling_is_keyed_by_seed_and_index() {
        let p = ModelParams::new(200, 0.3, 42, 10).unwrap();
        assert_eq!(sample_set(&p, 3).unwrap(), sample_set(&p, 3).unwrap());
        assert_ne!(sample_set(&p, 3).unwrap(), sample_set(&p, 4).unwrap());
        let q = ModelParams { seed: 43, ..p };
        assert_ne!(sample_set(&p, 3).unwrap(), sample_set(&q, 3).unwrap());
    }

    #[test]
    fn mean_subset_size() {
        let (n, alpha, trials) = (100u64, 0.3, 100_000u64);
        let p = ModelParams::new(n, alpha, 2024, trials).unwrap();
        let total: usize = (0..trials).map(|t| sample_set(&p, t).unwrap().len()).sum();
        let mean = total as f64 / trials as f64;
        let se = (n as f64 * alpha * (1.0 - alpha) / trials as f64).sqrt();
        assert!((mean - alpha * n as f64).abs() < 4.0 * se, "mean {mean}");
    }

    #[test]
    fn indicator_examples() {
        let a = Subset::from_elements(10, &[4, 6]).unwrap();
        assert!(indicator(&a, 2, 10).unwrap());
        assert!(!indicator(&a, 5, 10).unwrap());
        assert!(indicator(&a, 3, 10).unwrap());
        let e = Subset::empty(10);
        assert!((1..=10).all(|d| !indicator(&e, d, 10).unwrap()));
        assert!(indicator(&a, 0, 10).is_err());
        assert!(indicator(&a, 11, 10).is_err());
    }

    #[test]
    fn degree_examples() {
        let t = ArithTables::new(100).unwrap();
        let a = Subset::from_elements(3, &[1, 2, 3]).unwrap();
        assert_eq!(degree_statistic(&a, 3, &t).unwrap(), 3);
        assert_eq!(degree_statistic(&Subset::empty(9), 9, &t).unwrap(), 0);
        let six = Subset::from_elements(6, &[6]).unwrap();
        assert_eq!(degree_statistic(&six, 6, &t).unwrap(), 5);
        assert_eq!(degree_statistic(&Subset::full(30), 30, &t).unwrap(), max_degree(30, &t));
        let small = ArithTables::new(5).unwrap();
        assert!(degree_statistic(&six, 6, &small).is_err());
    }

    #[test]
    fn degree_matches_oracle_on_fixed_sets() {
        let t = ArithTables::new(60).unwrap();
        let o = LcmOracle::default();
        let sets: [&[u64]; 5] = [&[], &[1], &[12, 18], &[7, 11, 13, 60], &[30, 42, 45, 50]];
        for s in sets {
            let a = Subset::from_elements(60, s).unwrap();
            assert_eq!(degree_statistic(&a, 60, &t).unwrap(), o.degree(s).unwrap(), "{s:?}");
        }
    }

    #[test]
    fn enumeration_small_cases() {
        let t = ArithTables::new(30).unwrap();
        let half = ratio(1, 2);
        let d = enumerate_exact(2, &half, &t).unwrap();
        assert_eq!(d.pmf.len(), 2);
        assert_eq!(d.pmf[&0], half);
        assert_eq!(d.pmf[&1], half);
        assert_eq!(d.expectation(), half);
        assert_eq!(d.variance(), ratio(1, 4));

        let one = enumerate_exact(1, &ratio(2, 7), &t).unwrap();
        assert_eq!(one.pmf.keys().copied().collect::<Vec<_>>(), vec![0]);
        assert_eq!(one.variance(), BigRational::zero());

        let full = enumerate_exact(9, &BigRational::one(), &t).unwrap();
        assert_eq!(full.pmf.len(), 1);
        assert_eq!(full.pmf[&max_degree(9, &t)], BigRational::one());

        let d = enumerate_exact(10, &ratio(1, 3), &t).unwrap();
        assert_eq!(d.total_probability(), BigRational::one());

        assert!(matches!(
            enumerate_exact(23, &half, &ArithTables::new(23).unwrap()),
            Err(Error::ResourceLimit(_))
        ));
        assert!(enumerate_exact(4, &ratio(3, 2), &t).is_err());
    }

    #[test]
    fn enumeration_agrees_with_brute_force_degrees() {
        let n = 8usize;
        let t = ArithTables::new(n).unwrap();
        let alpha = ratio(1, 3);
        let dist = enumerate_exact(n as u64, &alpha, &t).unwrap();
        let beta = BigRational::one() - &alpha;
        let mut pmf: BTreeMap<u64, BigRational> = BTreeMap::new();
        for mask in 0u32..(1 << n) {
            let elems: Vec<u64> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| i as u64 + 1).collect();
            let x = LcmOracle::default().degree(&elems).unwrap();
            let k = elems.len();
            let p = num_traits::pow(alpha.clone(), k) * num_traits::pow(beta.clone(), n - k);
            *pmf.entry(x).or_insert_with(BigRational::zero) += p;
        }
        assert_eq!(dist.pmf, pmf);
    }

    #[test]
    fn monte_carlo_alpha_one_has_zero_variance() {
        let t = ArithTables::new(100).unwrap();
        let p = ModelParams::new(100, 1.0, 5, 50).unwrap();
        let run = monte_carlo(&p, &t).unwrap();
        assert_eq!(run.summary.variance, 0.0);
        assert_eq!(run.summary.mean, max_degree(100, &t) as f64);
    }

    #[test]
    fn monte_carlo_matches_serial_iterator() {
        let t = ArithTables::new(300).unwrap();
        let p = ModelParams::new(300, 0.2, 99, 64).unwrap();
        let run = monte_carlo(&p, &t).unwrap();
        let serial: Vec<u64> = samples(&p, &t).map(|r| r.unwrap().degree).collect();
        assert_eq!(run.degrees, serial);
    }

    #[test]
    fn summary_statistics() {
        let s = summarize(&[1, 2, 3, 4]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!((s.min, s.max), (1, 4));
        assert_eq!(summarize(&[7]).variance, 0.0);
    }
}
