use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::arith::ArithTables;
use crate::error::{Error, Result};
use crate::moments::{v_alpha, variance_exact_pairwise, TruncationConfig};
use crate::qpoly::LcmOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchSuite {
    Sieve,
    VarianceSum,
    Valpha,
    Oracle,
}

impl BenchSuite {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchSuite::Sieve => "sieve",
            BenchSuite::VarianceSum => "variance-sum",
            BenchSuite::Valpha => "valpha",
            BenchSuite::Oracle => "oracle",
        }
    }
}

impl fmt::Display for BenchSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchSuite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sieve" => Ok(BenchSuite::Sieve),
            "variance-sum" | "variance_sum" => Ok(BenchSuite::VarianceSum),
            "valpha" | "vfun" => Ok(BenchSuite::Valpha),
            "oracle" => Ok(BenchSuite::Oracle),
            other => Err(format!("unknown suite `{other}` (sieve, variance-sum, valpha, oracle)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub suite: String,
    pub label: String,
    pub size: u64,
    pub repeats: usize,
    pub median_secs: Option<f64>,
    pub min_secs: Option<f64>,
    pub max_secs: Option<f64>,
    /// Fitted log-log slope, on the summary line of a scaling suite.
    pub exponent: Option<f64>,
}

fn time_median(label: &str, suite: BenchSuite, size: u64, repeats: usize, mut f: impl FnMut() -> Result<()>) -> Result<BenchRecord> {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64());
    }
    samples.sort_by(f64::total_cmp);
    Ok(BenchRecord {
        suite: suite.to_string(),
        label: label.to_string(),
        size,
        repeats,
        median_secs: Some(samples[samples.len() / 2]),
        min_secs: samples.first().copied(),
        max_secs: samples.last().copied(),
        exponent: None,
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

pub const VARIANCE_BENCH_SIZES: [u64; 3] = [2000, 4000, 8000];

/// Runs one suite single-threaded, reporting the median of `repeats` timings.
pub fn bench(suite: BenchSuite, repeats: usize) -> Result<Vec<BenchRecord>> {
    if repeats == 0 {
        return Err(Error::spec("repeats", "must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?;
    pool.install(|| match suite {
        BenchSuite::Sieve => {
            let n = 1_000_000u64;
            Ok(vec![time_median("linear-sieve", suite, n, repeats, || {
                black_box(ArithTables::new(n as usize)?);
                Ok(())
            })?])
        }
        BenchSuite::VarianceSum => {
            let tables = ArithTables::new(*VARIANCE_BENCH_SIZES.last().unwrap() as usize)?;
            let mut out = Vec::new();
            for n in VARIANCE_BENCH_SIZES {
                out.push(time_median("pairwise", suite, n, repeats, || {
                    black_box(variance_exact_pairwise(n, 0.5, &tables, u64::MAX)?);
                    Ok(())
                })?);
            }
            let points: Vec<(f64, f64)> =
                out.iter().map(|r| (r.size as f64, r.median_secs.unwrap())).collect();
            out.push(BenchRecord {
                suite: suite.to_string(),
                label: "fit".into(),
                size: VARIANCE_BENCH_SIZES.len() as u64,
                repeats,
                median_secs: None,
                min_secs: None,
                max_secs: None,
                exponent: Some(fit_exponent(&points)),
            });
            Ok(out)
        }
        BenchSuite::Valpha => {
            let config = TruncationConfig::default();
            Ok(vec![time_median("v(0.5)", suite, config.c1_cutoff, repeats, || {
                black_box(v_alpha(0.5, &config)?);
                Ok(())
            })?])
        }
        BenchSuite::Oracle => {
            let set: Vec<u64> = (1..=40).collect();
            let oracle = LcmOracle::default();
            Ok(vec![time_median("full-set", suite, 40, repeats, || {
                black_box(oracle.degree_by_gcd(&set)?);
                black_box(oracle.degree(&set)?);
                Ok(())
            })?])
        }
    })
}
