//! Run configuration: a flat `key = value` file (TOML syntax, expressions
//! in quotes, one optional level of dotted keys) layered over a preset.
//!
//! ```text
//! preset = "example6"
//! mu = "1"
//! p = 2
//! fss.step = 5e-4
//! ```

use std::path::Path;

use toml::{Table, Value};

use crate::admissibility::{AdmissibilityConfig, Problem, Weight};
use crate::error::{Error, Result};
use crate::fss::FssConfig;
use crate::localscale::Potential;
use crate::presets::{example6_cutoff, EXAMPLE6_MU, EXAMPLE6_Q1, EXAMPLE6_Q2, EXAMPLE6_THETA};
use crate::realline::{claim_probes, Parity, Positivity, RealFunction};

pub const PRESETS: [&str; 3] = ["example6", "constant", "quadratic"];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub q: Option<String>,
    pub q1: Option<String>,
    pub q2: Option<String>,
    /// Radius past which `q2` is replaced by zero.
    pub cutoff: Option<f64>,
    pub mu: String,
    pub theta: String,
    pub f: Option<String>,
    pub p: f64,
    pub fss: FssConfig,
    pub grid_levels: usize,
    pub quad_rel_tol: f64,
    /// Every `stride`-th node goes into grid CSVs.
    pub stride: usize,
    pub report: Option<String>,
    pub profile: Option<String>,
    pub seed: u64,
    pub probes: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            preset: None,
            q: None,
            q1: None,
            q2: None,
            cutoff: None,
            mu: "1".into(),
            theta: "1".into(),
            f: None,
            p: 2.0,
            fss: FssConfig::default(),
            grid_levels: 20,
            quad_rel_tol: 1e-9,
            stride: 10,
            report: None,
            profile: None,
            seed: 0,
            probes: Vec::new(),
        }
    }
}

fn as_f64(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!("`{key}` must be a number"))),
    }
}

fn as_str(key: &str, v: &Value) -> Result<String> {
    v.as_str().map(str::to_string).ok_or_else(|| Error::Config(format!("`{key}` must be a quoted string")))
}

fn as_usize(key: &str, v: &Value) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(Error::Config(format!("`{key}` must be a nonnegative integer"))),
    }
}

/// Parses `a, b, c` into numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("`{s}` is not a number"))))
        .collect()
}

impl RunConfig {
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = RunConfig { preset: Some(name.to_string()), ..Default::default() };
        match name {
            "example6" => {
                c.q1 = Some(EXAMPLE6_Q1.into());
                c.q2 = Some(EXAMPLE6_Q2.into());
                c.cutoff = Some(example6_cutoff());
                c.mu = EXAMPLE6_MU.into();
                c.theta = EXAMPLE6_THETA.into();
                c.f = Some("exp(-x^2)".into());
                c.fss.step = 5e-4;
            }
            "constant" => c.q = Some("1".into()),
            "quadratic" => c.q = Some("1 + x^2".into()),
            _ => return Err(Error::Config(format!("unknown preset `{name}` (known: {})", PRESETS.join(", ")))),
        }
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    /// Parses the file text. A `preset` key is applied first; every other key
    /// overrides it.
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let mut c = match table.get("preset") {
            Some(v) => Self::preset(&as_str("preset", v)?)?,
            None => Self::default(),
        };
        for (key, value) in &table {
            match value {
                Value::Table(inner) => {
                    for (sub, v) in inner {
                        c.set(&format!("{key}.{sub}"), v)?;
                    }
                }
                v => c.set(key, v)?,
            }
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &Value) -> Result<()> {
        match key {
            "preset" => {}
            "q" => self.q = Some(as_str(key, v)?),
            "q1" => self.q1 = Some(as_str(key, v)?),
            "q2" => self.q2 = Some(as_str(key, v)?),
            "cutoff" => self.cutoff = Some(as_f64(key, v)?),
            "mu" => self.mu = as_str(key, v)?,
            "theta" => self.theta = as_str(key, v)?,
            "f" => self.f = Some(as_str(key, v)?),
            "p" => self.p = as_f64(key, v)?,
            "seed" => self.seed = as_usize(key, v)? as u64,
            "probes" => self.probes = parse_list(&as_str(key, v)?)?,
            "fss.x_max" => self.fss.x_max = as_f64(key, v)?,
            "fss.step" => self.fss.step = as_f64(key, v)?,
            "fss.tol_w" => self.fss.tol_w = as_f64(key, v)?,
            "grid.levels" => self.grid_levels = as_usize(key, v)?,
            "quad.rel_tol" => self.quad_rel_tol = as_f64(key, v)?,
            "output.report" => self.report = Some(as_str(key, v)?),
            "output.profile" => self.profile = Some(as_str(key, v)?),
            "output.stride" => self.stride = as_usize(key, v)?.max(1),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::Config(format!("p = {} must lie in [1, ∞)", self.p)));
        }
        if self.q.is_none() && self.q1.is_none() {
            return Err(Error::Config("the potential needs `q` or `q1` (optionally with `q2`)".into()));
        }
        self.fss.validate()?;
        if !(self.quad_rel_tol > 0.0) {
            return Err(Error::Config("quad.rel_tol must be positive".into()));
        }
        // every expression must parse
        self.potential()?;
        RealFunction::parse(&self.mu)?;
        RealFunction::parse(&self.theta)?;
        if let Some(f) = &self.f {
            RealFunction::parse(f)?;
        }
        Ok(())
    }

    /// Built from `q1`/`q2` when present (checked against `q` inside the
    /// cutoff when `q` is given too), otherwise from `q`.
    pub fn potential(&self) -> Result<Potential> {
        let Some(q1) = &self.q1 else {
            return Potential::parse(self.q.as_deref().unwrap_or_default());
        };
        let even = self.preset.as_deref() == Some("example6");
        let mk = |s: &str, pos| -> Result<RealFunction> {
            let f = RealFunction::parse(s)?;
            Ok(if even { f.with_parity(Parity::Even).with_positivity(pos) } else { f })
        };
        let q1 = mk(q1, Positivity::StrictlyPositive)?;
        let q2 = mk(self.q2.as_deref().unwrap_or("0"), Positivity::Unknown)?;
        let mut pot = Potential::split(q1, q2);
        if let Some(c) = self.cutoff {
            pot = pot.with_oscillation_cutoff(c);
        }
        if let Some(q) = &self.q {
            let limit = self.cutoff.unwrap_or(f64::INFINITY);
            let probes: Vec<f64> = claim_probes().into_iter().filter(|x| x.abs() < limit).collect();
            pot.check_split(&RealFunction::parse(q)?, &probes, 1e-10)?;
        }
        Ok(pot)
    }

    pub fn problem(&self) -> Result<Problem> {
        Ok(Problem::new(self.potential()?, Weight::parse(&self.mu)?, Weight::parse(&self.theta)?, self.p)?
            .with_fss(self.fss))
    }

    pub fn admissibility(&self) -> AdmissibilityConfig {
        let mut a = AdmissibilityConfig { seed: self.seed, probes: self.probes.clone(), ..Default::default() };
        a.grid.levels = self.grid_levels;
        a.agreement_grid.levels = self.grid_levels;
        a.quad = a.quad.with_tol(self.quad_rel_tol, a.quad.abs_tol);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_then_overrides() {
        let c = RunConfig::from_str("preset = \"example6\"\nmu = \"1\"\np = 3\nfss.x_max = 60\n").unwrap();
        assert_eq!(c.mu, "1");
        assert_eq!(c.p, 3.0);
        assert_eq!(c.fss.x_max, 60.0);
        assert_eq!(c.fss.step, 5e-4);
        assert_eq!(c.theta, EXAMPLE6_THETA);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_str("q = \"1\"\nbogus = 1\n").is_err());
        assert!(RunConfig::from_str("q = \"1 +\"\n").is_err());
        assert!(RunConfig::from_str("q = \"1\"\np = 0.5\n").is_err());
        assert!(RunConfig::from_str("mu = \"1\"\n").is_err());
        assert!(RunConfig::from_str("preset = \"nope\"\n").is_err());
        // q inconsistent with q1 + q2
        assert!(RunConfig::from_str("q = \"2\"\nq1 = \"1\"\nq2 = \"0\"\n").is_err());
    }

    #[test]
    fn list_parsing() {
        assert_eq!(parse_list("0, 1.5,-2").unwrap(), vec![0.0, 1.5, -2.0]);
        assert!(parse_list("1, x").is_err());
    }
}
