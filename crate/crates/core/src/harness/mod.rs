//! Experiment configuration, execution and reporting behind the `qlcm` CLI.
//!
//! Settings are plain `key = value` strings. The CLI merges them with precedence
//! flags > `QLCM_*` environment variables > config file > built-in defaults, then
//! [`ExperimentSpec::from_settings`] parses and validates them, naming the offending
//! field on error.

pub mod acceptance;
mod bench;
mod report;
mod run;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ENUMERATION_MAX_N;
use crate::moments::{TruncationConfig, EXACT_MODE_MAX_N, QUADRATIC_SUM_LIMIT};
use crate::qpoly::DEFAULT_ORACLE_LIMIT;

pub use bench::{bench, fit_exponent, BenchRecord, BenchSuite};
pub use report::{emit, emit_bench, format_f64, parse_json_lines, RecordWriter, ReportRecord, CSV_COLUMNS};
pub use report::{McReport, OracleReport, Timings, VfunReport};
pub use run::{run, run_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Expect,
    Variance,
    Simulate,
    Vfun,
    OracleCheck,
    Bench,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Expect => "expect",
            Command::Variance => "variance",
            Command::Simulate => "simulate",
            Command::Vfun => "vfun",
            Command::OracleCheck => "oracle-check",
            Command::Bench => "bench",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    JsonLines,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "json-lines" | "jsonl" | "json" => Ok(OutputFormat::JsonLines),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format `{other}` (json-lines or csv)")),
        }
    }
}

/// An inclusion probability, remembered exactly when it was written as a fraction
/// or a terminating decimal.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaValue {
    pub value: f64,
    pub exact: Option<Ratio<u64>>,
}

impl AlphaValue {
    pub fn from_f64(value: f64) -> Self {
        Self { value, exact: None }
    }

    pub fn exact(p: u64, q: u64) -> Self {
        let r = Ratio::new(p, q);
        Self {
            value: *r.numer() as f64 / *r.denom() as f64,
            exact: Some(r),
        }
    }

    pub fn as_big_rational(&self) -> Option<BigRational> {
        self.exact
            .map(|r| BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom())))
    }

    pub fn exact_string(&self) -> Option<String> {
        self.exact.map(|r| format!("{}/{}", r.numer(), r.denom()))
    }
}

impl FromStr for AlphaValue {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let p: u64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let q: u64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            if q == 0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            return Ok(AlphaValue::exact(p, q));
        }
        let value: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
        // Plain decimals such as 0.25 are exact rationals.
        let exact = match s.split_once('.') {
            Some((int, frac))
                if frac.len() <= 12
                    && !int.starts_with('-')
                    && int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) =>
            {
                let den = 10u64.pow(frac.len() as u32);
                let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| s.to_string())? };
                let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| s.to_string())? };
                Some(Ratio::new(int * den + frac, den))
            }
            None if s.chars().all(|c| c.is_ascii_digit()) => Some(Ratio::from_integer(value as u64)),
            _ => None,
        };
        Ok(AlphaValue { value, exact })
    }
}

/// `k`, `a:b`, `a:b:step` (inclusive) or a comma-separated mix of these.
pub fn parse_n_grid(s: &str) -> std::result::Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let num = |t: &str| -> std::result::Result<u64, String> {
            let t = t.trim();
            t.parse::<u64>()
                .or_else(|_| {
                    // Accept 1e4-style integers.
                    t.parse::<f64>()
                        .ok()
                        .filter(|v| v.fract() == 0.0 && *v >= 0.0 && *v < 1e15)
                        .map(|v| v as u64)
                        .ok_or(())
                })
                .map_err(|_| format!("`{t}` is not a nonnegative integer"))
        };
        match fields.as_slice() {
            [k] => out.push(num(k)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if fields.len() == 3 { num(fields[2])? } else { 1 };
                if step == 0 {
                    return Err(format!("zero step in `{part}`"));
                }
                if a > b {
                    return Err(format!("range `{part}` is not ordered"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => return Err(format!("cannot parse `{part}`")),
        }
    }
    if out.is_empty() {
        return Err("empty grid".into());
    }
    Ok(out)
}

pub fn parse_alpha_list(s: &str) -> std::result::Result<Vec<AlphaValue>, String> {
    let out = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(AlphaValue::from_str)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if out.is_empty() {
        return Err("empty alpha list".into());
    }
    Ok(out)
}

/// Raw `key -> value` settings from one source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

/// Keys understood in settings and config files.
pub const SETTING_KEYS: &[&str] = &[
    "n",
    "alpha",
    "seed",
    "trials",
    "threads",
    "format",
    "exact",
    "epsilon",
    "with_vfun",
    "j3_max",
    "tail_tol",
    "c1_cutoff",
    "dilog_tol",
    "quadratic_limit",
    "timings",
    "suite",
    "repeats",
];

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.values.insert(key.replace('-', "_"), value.into());
        self
    }

    pub fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses the flat config format: `key = value` lines, `#` comments, blank lines.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::spec("config", format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = k.trim().replace('-', "_");
            if !SETTING_KEYS.contains(&key.as_str()) {
                return Err(Error::spec("config", format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            s.set(&key, v.trim());
        }
        Ok(s)
    }

    pub fn load_config(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::spec("config", format!("{}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    /// Fills keys missing here from `lower`.
    pub fn over(mut self, lower: &Settings) -> Settings {
        for (k, v) in &lower.values {
            self.values.entry(k.clone()).or_insert_with(|| v.clone());
        }
        self
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.trim().parse::<T>().map_err(|e| Error::spec(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key).map(str::trim) {
            None => Ok(false),
            Some("1" | "true" | "yes" | "on") => Ok(true),
            Some("0" | "false" | "no" | "off") => Ok(false),
            Some(v) => Err(Error::spec(key, format!("`{v}` is not a boolean"))),
        }
    }
}

/// A fully parsed and validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    /// Grid of `n` values in output order (oracle-check: the largest element).
    pub n: Vec<u64>,
    pub alpha: Vec<AlphaValue>,
    pub seed: u64,
    pub trials: u64,
    pub truncation: TruncationConfig,
    pub output_format: OutputFormat,
    pub exact_mode: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Relative deviation threshold reported by `simulate`.
    pub epsilon: f64,
    /// `variance` also evaluates `v(alpha)`.
    pub with_vfun: bool,
    pub quadratic_limit: u64,
    pub timings: bool,
    pub suite: Option<BenchSuite>,
    pub repeats: usize,
}

pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const DEFAULT_TRIALS: u64 = 1000;
pub const DEFAULT_EPSILON: f64 = 0.05;

impl ExperimentSpec {
    /// Spec with built-in defaults; `n` and `alpha` still need filling in.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            n: Vec::new(),
            alpha: Vec::new(),
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
            truncation: TruncationConfig::default(),
            output_format: OutputFormat::JsonLines,
            exact_mode: false,
            threads: 0,
            epsilon: DEFAULT_EPSILON,
            with_vfun: false,
            quadratic_limit: QUADRATIC_SUM_LIMIT,
            timings: false,
            suite: None,
            repeats: 3,
        }
    }

    pub fn from_settings(command: Command, s: &Settings) -> Result<Self> {
        let mut spec = Self::new(command);
        if let Some(v) = s.get("n") {
            spec.n = parse_n_grid(v).map_err(|e| Error::spec("n", e))?;
        }
        if let Some(v) = s.get("alpha") {
            spec.alpha = parse_alpha_list(v).map_err(|e| Error::spec("alpha", e))?;
        }
        if let Some(v) = s.parsed("seed")? {
            spec.seed = v;
        }
        if let Some(v) = s.parsed("trials")? {
            spec.trials = v;
        }
        if let Some(v) = s.parsed("threads")? {
            spec.threads = v;
        }
        if let Some(v) = s.parsed("format")? {
            spec.output_format = v;
        }
        spec.exact_mode = s.flag("exact")?;
        spec.with_vfun = s.flag("with_vfun")?;
        spec.timings = s.flag("timings")?;
        if let Some(v) = s.parsed("epsilon")? {
            spec.epsilon = v;
        }
        if let Some(v) = s.parsed("j3_max")? {
            spec.truncation.j3_max = v;
        }
        if let Some(v) = s.parsed("tail_tol")? {
            spec.truncation.beta_tail_tol = v;
        }
        if let Some(v) = s.get("c1_cutoff") {
            spec.truncation.c1_cutoff = match parse_n_grid(v).map_err(|e| Error::spec("c1_cutoff", e))?[..] {
                [c] => c,
                _ => return Err(Error::spec("c1_cutoff", "expected a single integer")),
            };
        }
        if let Some(v) = s.parsed("dilog_tol")? {
            spec.truncation.dilog_tol = v;
        }
        if let Some(v) = s.parsed("quadratic_limit")? {
            spec.quadratic_limit = v;
        }
        if let Some(v) = s.parsed("suite")? {
            spec.suite = Some(v);
        }
        if let Some(v) = s.parsed("repeats")? {
            spec.repeats = v;
        }
        if command == Command::OracleCheck && spec.alpha.is_empty() {
            spec.alpha = vec![AlphaValue::exact(1, 2)];
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        self.truncation.validate()?;
        let needs_n = !matches!(self.command, Command::Vfun | Command::Bench);
        let needs_alpha = self.command != Command::Bench;
        if needs_n && self.n.is_empty() {
            return Err(Error::spec("n", "required for this command"));
        }
        if needs_alpha && self.alpha.is_empty() {
            return Err(Error::spec("alpha", "required for this command"));
        }
        if needs_n && self.n.contains(&0) {
            return Err(Error::spec("n", "values must be positive"));
        }
        for a in &self.alpha {
            if !(0.0..=1.0).contains(&a.value) {
                return Err(Error::spec("alpha", format!("{} is not in [0, 1]", a.value)));
            }
            if self.command == Command::Vfun && !(a.value > 0.0 && a.value < 1.0) {
                return Err(Error::spec("alpha", format!("v(alpha) needs alpha in (0, 1), got {}", a.value)));
            }
        }
        if self.trials == 0 {
            return Err(Error::spec("trials", "must be positive"));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::spec("epsilon", "must be positive"));
        }
        if self.exact_mode {
            if let Some(a) = self.alpha.iter().find(|a| a.exact.is_none()) {
                return Err(Error::spec("exact", format!("alpha {} is not rational", a.value)));
            }
            if let Some(&n) = self.n.iter().find(|&&n| n > EXACT_MODE_MAX_N) {
                return Err(Error::spec("exact", format!("n = {n} exceeds {EXACT_MODE_MAX_N}")));
            }
        }
        if self.command == Command::OracleCheck {
            if let Some(&n) = self.n.iter().find(|&&n| n > DEFAULT_ORACLE_LIMIT) {
                return Err(Error::spec("n", format!("oracle elements are limited to {DEFAULT_ORACLE_LIMIT}, got {n}")));
            }
        }
        if self.command == Command::Bench && self.suite.is_none() {
            return Err(Error::spec("suite", "required for bench"));
        }
        if self.repeats == 0 {
            return Err(Error::spec("repeats", "must be positive"));
        }
        Ok(())
    }

    /// Resource refusals that are known before any work starts.
    pub fn check_resources(&self) -> Result<()> {
        if self.command == Command::Variance {
            if let Some(&n) = self.n.iter().find(|&&n| n > self.quadratic_limit) {
                return Err(Error::ResourceLimit(format!(
                    "variance double sum refused: n = {n} exceeds quadratic_limit = {}",
                    self.quadratic_limit
                )));
            }
        }
        if self.exact_mode && self.command == Command::Simulate {
            if let Some(&n) = self.n.iter().find(|&&n| n > ENUMERATION_MAX_N) {
                return Err(Error::ResourceLimit(format!("exact simulate limited to n <= {ENUMERATION_MAX_N}, got {n}")));
            }
        }
        Ok(())
    }
}
