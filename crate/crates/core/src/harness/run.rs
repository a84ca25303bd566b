use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::report::{McReport, OracleReport, ReportRecord, Timings, VfunReport};
use super::{AlphaValue, Command, ExperimentSpec};
use crate::arith::ArithTables;
use crate::error::{Error, Result};
use crate::model::{degree_statistic, monte_carlo, sample_set, ModelParams};
use crate::moments::{
    expectation_asymptotic, expectation_exact, expectation_exact_rational, v_alpha_with_engine,
    variance_exact_bounded, variance_exact_rational, variance_upper_envelope, C1Engine, VAlpha,
};
use crate::qpoly::LcmOracle;

/// Runs `spec` and collects every record in grid order.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<ReportRecord>> {
    let mut out = Vec::new();
    run_with(spec, |r| {
        out.push(r);
        Ok(())
    })?;
    Ok(out)
}

/// Runs `spec`, handing records to `sink` as soon as each grid point finishes.
///
/// Grid points are visited `n`-major, then `alpha`, in the order given. Work inside
/// a point runs on a pool of `spec.threads` workers and is reduced in a fixed order,
/// so the records do not depend on the thread count.
pub fn run_with(spec: &ExperimentSpec, mut sink: impl FnMut(ReportRecord) -> Result<()>) -> Result<()> {
    spec.validate()?;
    spec.check_resources()?;
    if spec.command == Command::Bench {
        return Err(Error::spec("command", "bench records are produced by harness::bench"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| Error::ResourceLimit(format!("thread pool: {e}")))?;
    let mut runner = pool.install(|| Runner::new(spec))?;
    runner.drive(&pool, &mut sink)
}

struct Runner<'a> {
    spec: &'a ExperimentSpec,
    tables: ArithTables,
    engine: Option<C1Engine>,
    vfun_cache: BTreeMap<u64, VAlpha>,
}

impl<'a> Runner<'a> {
    fn new(spec: &'a ExperimentSpec) -> Result<Self> {
        let max_n = spec.n.iter().copied().max().unwrap_or(1).max(1);
        let tables = ArithTables::new(max_n as usize)?;
        let engine = if spec.command == Command::Vfun || spec.with_vfun {
            Some(C1Engine::new(spec.truncation.c1_cutoff)?)
        } else {
            None
        };
        Ok(Self {
            spec,
            tables,
            engine,
            vfun_cache: BTreeMap::new(),
        })
    }

    fn drive(&mut self, pool: &rayon::ThreadPool, sink: &mut impl FnMut(ReportRecord) -> Result<()>) -> Result<()> {
        let spec = self.spec;
        if spec.command == Command::Vfun {
            for a in &spec.alpha {
                let mut clock = Clock::new(spec.timings);
                let mut rec = self.blank(None, a);
                rec.v_alpha = Some(pool.install(|| self.vfun(a.value))?);
                clock.lap("v_alpha");
                rec.timings = clock.finish();
                sink(rec)?;
            }
            return Ok(());
        }
        for &n in &spec.n {
            for a in &spec.alpha {
                let rec = pool.install(|| self.point(n, a))?;
                sink(rec)?;
            }
        }
        Ok(())
    }

    fn blank(&self, n: Option<u64>, a: &AlphaValue) -> ReportRecord {
        let mut rec = ReportRecord::new(self.spec.command, n, a.value, self.spec.seed, self.spec.truncation);
        rec.alpha_exact = a.exact_string();
        rec
    }

    fn vfun(&mut self, alpha: f64) -> Result<VfunReport> {
        let key = alpha.to_bits();
        if !self.vfun_cache.contains_key(&key) {
            let engine = self.engine.as_ref().expect("engine built for vfun");
            let v = v_alpha_with_engine(alpha, &self.spec.truncation, engine)?;
            self.vfun_cache.insert(key, v);
        }
        let v = &self.vfun_cache[&key];
        Ok(VfunReport {
            value: v.value,
            error_estimate: v.error_estimate,
            tail_bound: v.tail_bound,
            c1_error: v.c1_error,
            max_excess: v.max_excess,
            terms: v.terms,
            pairs: v.pairs,
        })
    }

    fn point(&mut self, n: u64, a: &AlphaValue) -> Result<ReportRecord> {
        let spec = self.spec;
        let alpha = a.value;
        let mut rec = self.blank(Some(n), a);
        let mut clock = Clock::new(spec.timings);
        let exact_alpha = if spec.exact_mode { a.as_big_rational() } else { None };

        if spec.command == Command::OracleCheck {
            rec.oracle = Some(self.oracle_check(n, alpha)?);
            clock.lap("oracle");
            rec.timings = clock.finish();
            return Ok(rec);
        }

        let e = expectation_exact(n, alpha, &self.tables)?;
        rec.e_exact = Some(e);
        let asym = expectation_asymptotic(n, alpha)?;
        rec.e_asym = Some(asym);
        rec.e_gap = Some(e - asym);
        rec.v_upper = Some(variance_upper_envelope(n, alpha));
        if let Some(q) = &exact_alpha {
            rec.e_rational = Some(expectation_exact_rational(n, q, &self.tables)?.to_string());
        }
        clock.lap("expectation");

        match spec.command {
            Command::Variance => {
                rec.v_exact = Some(variance_exact_bounded(n, alpha, &self.tables, spec.quadratic_limit)?);
                if let Some(q) = &exact_alpha {
                    rec.v_rational = Some(variance_exact_rational(n, q, &self.tables)?.to_string());
                }
                clock.lap("variance");
                if spec.with_vfun && alpha > 0.0 && alpha < 1.0 {
                    rec.v_alpha = Some(self.vfun(alpha)?);
                    clock.lap("v_alpha");
                }
            }
            Command::Simulate => {
                let params = ModelParams::new(n, alpha, spec.seed, spec.trials)?;
                let run = monte_carlo(&params, &self.tables)?;
                let s = run.summary;
                rec.mc = Some(McReport {
                    trials: s.trials,
                    mean: s.mean,
                    variance: s.variance,
                    std_error: s.std_error,
                    min: s.min,
                    max: s.max,
                    epsilon: spec.epsilon,
                    deviation_fraction: run.deviation_fraction(e, spec.epsilon),
                    z_score: (s.std_error > 0.0).then(|| (s.mean - e) / s.std_error),
                });
                clock.lap("monte_carlo");
            }
            _ => {}
        }
        rec.timings = clock.finish();
        Ok(rec)
    }

    fn oracle_check(&self, n: u64, alpha: f64) -> Result<OracleReport> {
        let params = ModelParams::new(n, alpha, self.spec.seed, self.spec.trials)?;
        let oracle = LcmOracle::default();
        let outcomes = (0..params.trials)
            .into_par_iter()
            .map(|t| {
                let set = sample_set(&params, t)?;
                let closed = degree_statistic(&set, n, &self.tables)?;
                let elems = set.elements();
                Ok((oracle.degree(&elems)? == closed, oracle.degree_by_gcd(&elems)? == closed))
            })
            .collect::<Result<Vec<(bool, bool)>>>()?;
        Ok(OracleReport {
            subsets: params.trials,
            agreements: outcomes.iter().filter(|o| o.0).count() as u64,
            gcd_agreements: outcomes.iter().filter(|o| o.1).count() as u64,
            first_mismatch: outcomes.iter().position(|&(a, b)| !(a && b)).map(|i| i as u64),
        })
    }
}

struct Clock {
    last: Option<Instant>,
    seconds: BTreeMap<String, f64>,
}

impl Clock {
    fn new(enabled: bool) -> Self {
        Self {
            last: enabled.then(Instant::now),
            seconds: BTreeMap::new(),
        }
    }

    fn lap(&mut self, phase: &str) {
        if let Some(last) = self.last {
            let now = Instant::now();
            self.seconds.insert(phase.to_string(), (now - last).as_secs_f64());
            self.last = Some(now);
        }
    }

    fn finish(self) -> Option<Timings> {
        self.last.map(|_| Timings { seconds: self.seconds })
    }
}
