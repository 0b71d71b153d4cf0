//! JSON reports.

use std::path::Path;
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Result;
use serde_json::{json, Map, Number, Value};

pub const SCHEMA: u32 = 1;

/// A float with 17 significant digits; non-finite values become `null`.
pub fn num(v: f64) -> Value {
    if !v.is_finite() {
        return Value::Null;
    }
    Number::from_str(&format!("{v:.16e}")).map(Value::Number).unwrap_or(Value::Null)
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub error: Option<String>,
}

impl Check {
    /// Passes when `residual <= tolerance`.
    pub fn below(name: &str, residual: f64, tolerance: f64) -> Self {
        Check { name: name.into(), max_residual: residual, tolerance, pass: residual <= tolerance, error: None }
    }

    pub fn failed(name: &str, tolerance: f64, err: impl ToString) -> Self {
        Check { name: name.into(), max_residual: f64::NAN, tolerance, pass: false, error: Some(err.to_string()) }
    }

    fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("name".into(), json!(self.name));
        m.insert("max_residual".into(), num(self.max_residual));
        m.insert("tolerance".into(), num(self.tolerance));
        m.insert("pass".into(), json!(self.pass));
        if let Some(e) = &self.error {
            m.insert("error".into(), json!(e));
        }
        Value::Object(m)
    }
}

pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub checks: Vec<Check>,
    pub details: Value,
    started: Instant,
}

impl Report {
    pub fn new(command: &'static str, config: Value) -> Self {
        Report { command, config, checks: Vec::new(), details: Value::Object(Map::new()), started: Instant::now() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self, timestamp: bool) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), json!(SCHEMA));
        m.insert("version".into(), json!(finslerlab::VERSION));
        m.insert("command".into(), json!(self.command));
        m.insert("config".into(), self.config.clone());
        m.insert("checks".into(), Value::Array(self.checks.iter().map(Check::to_json).collect()));
        m.insert("pass".into(), json!(self.pass()));
        m.insert("details".into(), self.details.clone());
        if timestamp {
            let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            m.insert(
                "timing".into(),
                json!({ "unix_time": now, "elapsed_seconds": num(self.started.elapsed().as_secs_f64()) }),
            );
        }
        Value::Object(m)
    }

    pub fn checks_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "max_residual", "tolerance", "pass"])?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                format!("{:.16e}", c.max_residual),
                format!("{:.16e}", c.tolerance),
                c.pass.to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }
}

/// Writes to `path`, or to stdout without one.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(-2.5).to_string(), "-2.5000000000000000e+0");
    }
}
