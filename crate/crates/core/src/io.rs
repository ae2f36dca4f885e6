//! Wire formats: matrices and states as JSON, run reports as JSON or CSV.
//! Floats are written with 17 significant digits so every emitted number
//! parses back to the same `f64`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::matcore::FactorSplit;
use crate::states::BipartiteState;
use crate::{CMat, Error, Result, C64};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Row-major matrix with separate real and imaginary parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        Self {
            rows: m.rows(),
            cols: m.cols(),
            re: m.as_slice().iter().map(|z| z.re).collect(),
            im: m.as_slice().iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.rows * self.cols;
        if self.re.len() != n || self.im.len() != n {
            return Err(Error::Parse(format!(
                "matrix {}x{} needs {n} entries in `re` and `im`, found {} and {}",
                self.rows,
                self.cols,
                self.re.len(),
                self.im.len()
            )));
        }
        if let Some(k) = self.re.iter().chain(&self.im).position(|v| !v.is_finite()) {
            return Err(Error::Parse(format!(
                "non-finite entry at flat index {}",
                k % n.max(1)
            )));
        }
        CMat::new(
            self.rows,
            self.cols,
            self.re
                .iter()
                .zip(&self.im)
                .map(|(&r, &i)| C64::new(r, i))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub split: FactorSplit,
    pub rho: MatrixJson,
}

impl StateFile {
    pub fn from_state(s: &BipartiteState) -> Self {
        Self {
            split: s.split(),
            rho: MatrixJson::from_matrix(s.rho()),
        }
    }

    pub fn to_state(&self) -> Result<BipartiteState> {
        BipartiteState::new(
            FactorSplit::new(self.split.d_a, self.split.d_b)?,
            self.rho.to_matrix()?,
        )
    }
}

fn parse_error(e: serde_json::Error) -> Error {
    Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
}

/// Deserializes with line/column diagnostics.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(parse_error)
}

pub fn parse_matrix(text: &str) -> Result<CMat> {
    from_json::<MatrixJson>(text)?.to_matrix()
}

pub fn parse_state(text: &str) -> Result<BipartiteState> {
    from_json::<StateFile>(text)?.to_state()
}

/// `{:.16e}`: 17 significant digits, always round-trips.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, item, indent + 2);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let n = map.len();
            for (k, (key, item)) in map.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 2);
                out.push_str(if k + 1 < n { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

/// Pretty JSON with sorted keys and 17-digit floats, newline-terminated.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    pub status: Status,
    /// Experimental checks are recorded but never fail a run.
    pub experimental: bool,
    pub metrics: BTreeMap<String, Value>,
}

impl CheckRecord {
    pub fn new(suite: &str, name: impl Into<String>, status: Status) -> Self {
        Self {
            suite: suite.to_string(),
            name: name.into(),
            status,
            experimental: false,
            metrics: BTreeMap::new(),
        }
    }

    pub fn metric(mut self, key: &str, v: impl Into<Value>) -> Self {
        self.metrics.insert(key.to_string(), v.into());
        self
    }

    pub fn experimental(mut self) -> Self {
        self.experimental = true;
        self
    }

    pub fn f64_metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).and_then(Value::as_f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub experimental: usize,
    /// Non-experimental failures; a run with any of these exits nonzero.
    pub gating_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub suites: Vec<String>,
    pub checks: Vec<CheckRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn new(seed: u64, suites: Vec<String>, checks: Vec<CheckRecord>) -> Self {
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Inconclusive => summary.inconclusive += 1,
            }
            if c.experimental {
                summary.experimental += 1;
            } else if c.status == Status::Fail {
                summary.gating_failures += 1;
            }
        }
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            seed,
            suites,
            checks,
            summary,
        }
    }

    pub fn passed(&self) -> bool {
        self.summary.gating_failures == 0
    }

    pub fn to_json(&self) -> Result<String> {
        to_json(self)
    }

    /// Long format: one row per metric (a row with empty metric for checks without any).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Parse(e.to_string());
        w.write_record([
            "suite",
            "check",
            "status",
            "experimental",
            "metric",
            "value",
        ])
        .map_err(io)?;
        for c in &self.checks {
            let exp = if c.experimental { "true" } else { "false" };
            if c.metrics.is_empty() {
                w.write_record([
                    c.suite.as_str(),
                    c.name.as_str(),
                    c.status.as_str(),
                    exp,
                    "",
                    "",
                ])
                .map_err(io)?;
            }
            for (k, v) in &c.metrics {
                let text = match v {
                    Value::Number(n) if n.is_f64() => format_f64(n.as_f64().unwrap_or(f64::NAN)),
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                w.write_record([
                    c.suite.as_str(),
                    c.name.as_str(),
                    c.status.as_str(),
                    exp,
                    k.as_str(),
                    text.as_str(),
                ])
                .map_err(io)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
    }
}
