use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::bench::BenchRecord;
use super::{Command, OutputFormat};
use crate::error::{Error, Result};
use crate::moments::TruncationConfig;

/// Fixed-width scientific notation with 17 significant digits; `None` for non-finite.
pub fn format_f64(x: f64) -> Option<String> {
    x.is_finite().then(|| format!("{x:.16e}"))
}

mod f17 {
    use serde::ser::Error as _;
    use serde::Serializer;
    use serde_json::value::RawValue;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match super::format_f64(*x) {
            Some(text) => RawValue::from_string(text).map_err(S::Error::custom)?.serialize(s),
            None => s.serialize_none(),
        }
    }

    pub mod opt {
        use serde::Serializer;

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }
    }

    use serde::Serialize as _;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VfunReport {
    #[serde(serialize_with = "f17::serialize")]
    pub value: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub error_estimate: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub tail_bound: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub c1_error: f64,
    pub max_excess: u64,
    pub terms: u64,
    pub pairs: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub trials: u64,
    #[serde(serialize_with = "f17::serialize")]
    pub mean: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub variance: f64,
    #[serde(serialize_with = "f17::serialize")]
    pub std_error: f64,
    pub min: u64,
    pub max: u64,
    #[serde(serialize_with = "f17::serialize")]
    pub epsilon: f64,
    /// Fraction of trials with `|X - E[X]| > epsilon E[X]`.
    #[serde(serialize_with = "f17::serialize")]
    pub deviation_fraction: f64,
    /// `(mean - E[X]) / std_error`; null when the standard error is zero.
    #[serde(serialize_with = "f17::opt::serialize")]
    pub z_score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub subsets: u64,
    /// Subsets where the cyclotomic product degree equals the closed form.
    pub agreements: u64,
    /// Subsets where the gcd-fold degree equals the closed form.
    pub gcd_agreements: u64,
    /// First disagreeing trial index, if any.
    pub first_mismatch: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub seconds: BTreeMap<String, f64>,
}

/// One output line. Keys always appear, in this order; absent values are `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub command: Command,
    pub n: Option<u64>,
    #[serde(serialize_with = "f17::serialize")]
    pub alpha: f64,
    pub alpha_exact: Option<String>,
    pub seed: u64,
    #[serde(serialize_with = "f17::opt::serialize")]
    pub e_exact: Option<f64>,
    pub e_rational: Option<String>,
    #[serde(serialize_with = "f17::opt::serialize")]
    pub e_asym: Option<f64>,
    /// `e_exact - e_asym`.
    #[serde(serialize_with = "f17::opt::serialize")]
    pub e_gap: Option<f64>,
    #[serde(serialize_with = "f17::opt::serialize")]
    pub v_exact: Option<f64>,
    pub v_rational: Option<String>,
    #[serde(serialize_with = "f17::opt::serialize")]
    pub v_upper: Option<f64>,
    pub v_alpha: Option<VfunReport>,
    pub mc: Option<McReport>,
    pub oracle: Option<OracleReport>,
    pub truncation: TruncationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl ReportRecord {
    pub fn new(command: Command, n: Option<u64>, alpha: f64, seed: u64, truncation: TruncationConfig) -> Self {
        Self {
            command,
            n,
            alpha,
            alpha_exact: None,
            seed,
            e_exact: None,
            e_rational: None,
            e_asym: None,
            e_gap: None,
            v_exact: None,
            v_rational: None,
            v_upper: None,
            v_alpha: None,
            mc: None,
            oracle: None,
            truncation,
            timings: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))
    }

    fn csv_row(&self) -> Vec<String> {
        let f = |x: Option<f64>| x.and_then(format_f64).unwrap_or_default();
        vec![
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            f(Some(self.alpha)),
            f(self.e_exact),
            f(self.e_asym),
            f(self.v_exact),
            f(self.v_upper),
            f(self.v_alpha.as_ref().map(|v| v.value)),
            f(self.mc.as_ref().map(|m| m.mean)),
            f(self.mc.as_ref().map(|m| m.variance)),
            self.seed.to_string(),
        ]
    }
}

pub const CSV_COLUMNS: [&str; 10] = [
    "n", "alpha", "e_exact", "e_asym", "v_exact", "v_upper", "v_alpha", "mc_mean", "mc_var", "seed",
];

/// Streaming writer; the CSV header goes out on construction, so an empty stream
/// still produces it.
pub struct RecordWriter<W: Write> {
    inner: Sink<W>,
}

enum Sink<W: Write> {
    Json(W),
    Csv(Box<csv::Writer<W>>),
}

fn io_err(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

impl<W: Write> RecordWriter<W> {
    pub fn new(format: OutputFormat, out: W) -> io::Result<Self> {
        let inner = match format {
            OutputFormat::JsonLines => Sink::Json(out),
            OutputFormat::Csv => {
                let mut w = csv::Writer::from_writer(out);
                w.write_record(CSV_COLUMNS).map_err(io_err)?;
                w.flush()?;
                Sink::Csv(Box::new(w))
            }
        };
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &ReportRecord) -> io::Result<()> {
        match &mut self.inner {
            Sink::Json(w) => {
                serde_json::to_writer(&mut *w, record)?;
                w.write_all(b"\n")?;
                w.flush()
            }
            Sink::Csv(w) => {
                w.write_record(record.csv_row()).map_err(io_err)?;
                w.flush()
            }
        }
    }
}

pub fn emit<W: Write>(records: &[ReportRecord], format: OutputFormat, out: W) -> io::Result<()> {
    let mut w = RecordWriter::new(format, out)?;
    for r in records {
        w.write(r)?;
    }
    Ok(())
}

pub fn emit_bench<W: Write>(records: &[BenchRecord], format: OutputFormat, mut out: W) -> io::Result<()> {
    match format {
        OutputFormat::JsonLines => {
            for r in records {
                serde_json::to_writer(&mut out, r)?;
                out.write_all(b"\n")?;
            }
            out.flush()
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["suite", "label", "size", "repeats", "median_secs", "min_secs", "max_secs", "exponent"])
                .map_err(io_err)?;
            for r in records {
                let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.suite.clone(),
                    r.label.clone(),
                    r.size.to_string(),
                    r.repeats.to_string(),
                    opt(r.median_secs),
                    opt(r.min_secs),
                    opt(r.max_secs),
                    opt(r.exponent),
                ])
                .map_err(io_err)?;
            }
            w.flush()
        }
    }
}

pub fn parse_json_lines(text: &str) -> Result<Vec<ReportRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::InvalidArgument(format!("bad record: {e}"))))
        .collect()
}
