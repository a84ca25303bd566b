use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qlcm::harness::{self, emit_bench, Command, ExperimentSpec, RecordWriter, Settings};
use qlcm::Error;

/// Degree statistics of lcm([k]_q : k in A) for random sets A.
#[derive(Parser, Debug)]
#[command(name = "qlcm", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// Flat `key = value` config file; flags and QLCM_* variables take precedence.
    #[arg(long, global = true, env = "QLCM_CONFIG")]
    config: Option<PathBuf>,
    /// json-lines or csv.
    #[arg(long, global = true, env = "QLCM_FORMAT")]
    format: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, env = "QLCM_THREADS")]
    threads: Option<String>,
    #[arg(long, global = true, env = "QLCM_SEED")]
    seed: Option<String>,
    /// Add per-phase wall-clock seconds to each record.
    #[arg(long, global = true)]
    timings: bool,
    /// Largest n accepted by the variance double sum.
    #[arg(long, global = true, env = "QLCM_QUADRATIC_LIMIT")]
    quadratic_limit: Option<String>,
}

#[derive(Args, Debug)]
struct Grid {
    /// `k`, `a:b`, `a:b:step` or a comma list.
    #[arg(long, env = "QLCM_N")]
    n: Option<String>,
    /// Comma list of decimals or fractions `p/q`.
    #[arg(long, env = "QLCM_ALPHA")]
    alpha: Option<String>,
    /// Also report exact rationals (rational alpha, n <= 30).
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct Truncation {
    #[arg(long, env = "QLCM_J3_MAX")]
    j3_max: Option<String>,
    #[arg(long, env = "QLCM_TAIL_TOL")]
    tail_tol: Option<String>,
    #[arg(long, env = "QLCM_C1_CUTOFF")]
    c1_cutoff: Option<String>,
    #[arg(long, env = "QLCM_DILOG_TOL")]
    dilog_tol: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Exact and asymptotic expectation.
    Expect {
        #[command(flatten)]
        grid: Grid,
    },
    /// Exact variance, optionally with v(alpha).
    Variance {
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        with_vfun: bool,
        #[command(flatten)]
        truncation: Truncation,
    },
    /// Monte Carlo sampling against the exact expectation.
    Simulate {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, env = "QLCM_TRIALS")]
        trials: Option<String>,
        /// Relative deviation threshold.
        #[arg(long, env = "QLCM_EPSILON")]
        epsilon: Option<String>,
    },
    /// The limit v(alpha) of Var[X] / n^3.
    Vfun {
        #[arg(long, env = "QLCM_ALPHA")]
        alpha: Option<String>,
        #[command(flatten)]
        truncation: Truncation,
    },
    /// Compare the closed form against polynomial lcm computations on random subsets.
    OracleCheck {
        /// Largest possible element.
        #[arg(long, env = "QLCM_N")]
        n: Option<String>,
        #[arg(long, env = "QLCM_TRIALS")]
        trials: Option<String>,
        /// Inclusion probability (default 1/2).
        #[arg(long, env = "QLCM_ALPHA")]
        alpha: Option<String>,
    },
    /// Run the acceptance criteria and print one PASS/FAIL line each.
    Check {
        /// A single criterion, 1 to 10.
        #[arg(long)]
        criterion: Option<u8>,
    },
    /// Timing suites: sieve, variance-sum, valpha, oracle.
    Bench {
        #[arg(long)]
        suite: Option<String>,
        #[arg(long, env = "QLCM_REPEATS")]
        repeats: Option<String>,
    },
}

fn put(s: &mut Settings, key: &str, v: &Option<String>) {
    if let Some(v) = v {
        s.set(key, v.clone());
    }
}

fn put_flag(s: &mut Settings, key: &str, on: bool) {
    if on {
        s.set(key, "true");
    }
}

fn put_grid(s: &mut Settings, g: &Grid) {
    put(s, "n", &g.n);
    put(s, "alpha", &g.alpha);
    put_flag(s, "exact", g.exact);
}

fn put_truncation(s: &mut Settings, t: &Truncation) {
    put(s, "j3_max", &t.j3_max);
    put(s, "tail_tol", &t.tail_tol);
    put(s, "c1_cutoff", &t.c1_cutoff);
    put(s, "dilog_tol", &t.dilog_tol);
}

fn settings(cli: &Cli) -> Option<(Command, Settings)> {
    let mut s = Settings::new();
    put(&mut s, "format", &cli.format);
    put(&mut s, "threads", &cli.threads);
    put(&mut s, "seed", &cli.seed);
    put(&mut s, "quadratic_limit", &cli.quadratic_limit);
    put_flag(&mut s, "timings", cli.timings);
    let command = match &cli.command {
        Sub::Expect { grid } => {
            put_grid(&mut s, grid);
            Command::Expect
        }
        Sub::Variance { grid, with_vfun, truncation } => {
            put_grid(&mut s, grid);
            put_flag(&mut s, "with_vfun", *with_vfun);
            put_truncation(&mut s, truncation);
            Command::Variance
        }
        Sub::Simulate { grid, trials, epsilon } => {
            put_grid(&mut s, grid);
            put(&mut s, "trials", trials);
            put(&mut s, "epsilon", epsilon);
            Command::Simulate
        }
        Sub::Vfun { alpha, truncation } => {
            put(&mut s, "alpha", alpha);
            put_truncation(&mut s, truncation);
            Command::Vfun
        }
        Sub::OracleCheck { n, trials, alpha } => {
            put(&mut s, "n", n);
            put(&mut s, "trials", trials);
            put(&mut s, "alpha", alpha);
            Command::OracleCheck
        }
        Sub::Bench { suite, repeats } => {
            put(&mut s, "suite", suite);
            put(&mut s, "repeats", repeats);
            Command::Bench
        }
        Sub::Check { .. } => return None,
    };
    Some((command, s))
}

/// Returns whether every selected criterion passed.
fn acceptance(criterion: Option<u8>) -> qlcm::Result<bool> {
    let ids: Vec<u8> = match criterion {
        Some(id) => vec![id],
        None => harness::acceptance::CRITERIA.iter().map(|c| c.0).collect(),
    };
    let mut all = true;
    for id in ids {
        let outcome = harness::acceptance::check(id)?;
        println!("{}", outcome.line());
        all &= outcome.passed;
    }
    Ok(all)
}

fn execute(cli: &Cli) -> qlcm::Result<()> {
    let Some((command, mut s)) = settings(cli) else {
        unreachable!("check is dispatched in main")
    };
    if let Some(path) = &cli.config {
        s = s.over(&Settings::load_config(path)?);
    }
    let spec = ExperimentSpec::from_settings(command, &s)?;
    let stdout = io::stdout().lock();
    let io_fail = |e: io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    if command == Command::Bench {
        let records = harness::bench(spec.suite.expect("validated"), spec.repeats)?;
        return emit_bench(&records, spec.output_format, stdout).map_err(io_fail);
    }
    let mut writer = RecordWriter::new(spec.output_format, stdout).map_err(io_fail)?;
    harness::run_with(&spec, |rec| writer.write(&rec).map_err(io_fail))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Sub::Check { criterion } = cli.command {
        return match acceptance(criterion) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::FAILURE,
            Err(e) => {
                let _ = writeln!(io::stderr(), "qlcm: {e}");
                ExitCode::from(2)
            }
        };
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "qlcm: {e}");
            ExitCode::from(match e {
                Error::InvalidSpec { .. } => 2,
                Error::ResourceLimit(_) => 3,
                _ => 1,
            })
        }
    }
}
