//! Grades and deterministic serialization helpers (17 significant digits,
//! sorted JSON keys, LF-terminated CSV).

use std::fmt::Write as _;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grade {
    Pass,
    Fail,
    Inconclusive,
}

impl Grade {
    pub fn as_str(self) -> &'static str {
        match self {
            Grade::Pass => "pass",
            Grade::Fail => "fail",
            Grade::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(ok: bool) -> Grade {
        if ok {
            Grade::Pass
        } else {
            Grade::Fail
        }
    }
}

/// Decimal with 17 significant digits; `inf`, `-inf`, `nan` for non-finite.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.16e}")
    }
}

/// JSON number with 17 significant digits. Non-finite values become the
/// strings `"inf"`, `"-inf"` and `"nan"`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::String(fmt_f64(v));
    }
    let s = fmt_f64(v);
    match s.parse::<Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(s),
    }
}

pub fn nums(vs: &[f64]) -> Value {
    Value::Array(vs.iter().map(|&v| num(v)).collect())
}

/// Small builder for JSON objects; `serde_json::Map` keeps keys sorted.
#[derive(Debug, Default, Clone)]
pub struct Obj(Map<String, Value>);

impl Obj {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn f(mut self, key: &str, v: f64) -> Self {
        self.0.insert(key.to_string(), num(v));
        self
    }

    pub fn s(mut self, key: &str, v: impl Into<String>) -> Self {
        self.0.insert(key.to_string(), Value::String(v.into()));
        self
    }

    pub fn b(mut self, key: &str, v: bool) -> Self {
        self.0.insert(key.to_string(), Value::Bool(v));
        self
    }

    pub fn u(mut self, key: &str, v: u64) -> Self {
        self.0.insert(key.to_string(), Value::Number(v.into()));
        self
    }

    pub fn v(mut self, key: &str, v: Value) -> Self {
        self.0.insert(key.to_string(), v);
        self
    }

    pub fn build(self) -> Value {
        Value::Object(self.0)
    }
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}
