//! The local length scale of a potential.
//!
//! For `q ≥ 0` and a point `x` the scale `d(x)` solves `F(x, η) = 2` with
//! `F(x, η) = ∫₀^{√2η} ∫_{x−t}^{x+t} q`, and `d̂(x)` solves
//! `η ∫_{x−η}^{x+η} q = 2`. Both left-hand sides are nondecreasing in `η`,
//! so each root is bracketed by doubling and then found by a monotone
//! solver. The inner double integral is collapsed to the single weighted
//! integral `∫_{x−s}^{x+s} (s − |ξ − x|) q(ξ) dξ`, `s = √2 η`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::realline::{
    find_root_monotone_with, integrate_with_breaks, GridConfig, QuadratureConfig, RealFunction,
};
use crate::report::{csv_table, Grade};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A potential, either a single expression or a split `q = q1 + q2` where
/// `q1` is smooth and positive and `q2` is a perturbation. An optional
/// cutoff replaces `q2` by zero for `|x| > c`.
#[derive(Debug, Clone)]
pub struct Potential {
    q: RealFunction,
    split: Option<Split>,
}

#[derive(Debug, Clone)]
struct Split {
    q1: RealFunction,
    q2: RealFunction,
    q1pp: RealFunction,
    cutoff: Option<f64>,
}

impl Potential {
    pub fn new(q: RealFunction) -> Self {
        Self { q, split: None }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(Self::new(RealFunction::parse(text)?))
    }

    /// `q1''` defaults to the symbolic second derivative of `q1`.
    pub fn split(q1: RealFunction, q2: RealFunction) -> Self {
        let q1pp = q1.derivative().derivative();
        let q = RealFunction::new(crate::realline::Expr::Bin(
            crate::realline::expr::BinOp::Add,
            Box::new(q1.expr().clone()),
            Box::new(q2.expr().clone()),
        ));
        Self { q, split: Some(Split { q1, q2, q1pp, cutoff: None }) }
    }

    pub fn with_q1pp(mut self, q1pp: RealFunction) -> Self {
        if let Some(s) = self.split.as_mut() {
            s.q1pp = q1pp;
        }
        self
    }

    /// Drops `q2` outside `[-c, c]`.
    pub fn with_oscillation_cutoff(mut self, c: f64) -> Self {
        if let Some(s) = self.split.as_mut() {
            s.cutoff = Some(c);
        }
        self
    }

    pub fn cutoff(&self) -> Option<f64> {
        self.split.as_ref().and_then(|s| s.cutoff)
    }

    pub fn is_split(&self) -> bool {
        self.split.is_some()
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        match &self.split {
            None => self.q.eval(x),
            Some(s) => {
                let v1 = s.q1.eval(x)?;
                Ok(v1 + s.q2_eval(x)?)
            }
        }
    }

    /// Points where the potential may have a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        if let Some(c) = self.cutoff() {
            b.push(-c);
            b.push(c);
        }
        b
    }

    pub fn decomposition(&self) -> Option<AsymptoticDecomposition<'_>> {
        self.split.as_ref().map(|s| AsymptoticDecomposition { split: s })
    }

    /// Checks `q1 + q2 = q_ref` (within `tol`) and `q1 > 0` at the probes.
    pub fn check_split(&self, q_ref: &RealFunction, probes: &[f64], tol: f64) -> Result<()> {
        let Some(s) = &self.split else { return Ok(()) };
        for &x in probes {
            let v1 = s.q1.eval(x)?;
            if v1 <= 0.0 {
                return Err(Error::Precondition(format!("q1({x}) = {v1} is not positive")));
            }
            if s.cutoff.is_some_and(|c| x.abs() > c) {
                continue;
            }
            let v = v1 + s.q2.eval(x)?;
            let r = q_ref.eval(x)?;
            if (v - r).abs() > tol * (1.0 + r.abs()) {
                return Err(Error::Precondition(format!("q1 + q2 = {v} differs from q = {r} at x = {x}")));
            }
        }
        Ok(())
    }
}

impl Split {
    fn q2_eval(&self, x: f64) -> Result<f64> {
        match self.cutoff {
            Some(c) if x.abs() > c => Ok(0.0),
            _ => self.q2.eval(x),
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.split {
            None => write!(f, "{}", self.q),
            Some(s) => {
                write!(f, "({}) + ({})", s.q1, s.q2)?;
                if let Some(c) = s.cutoff {
                    write!(f, " [q2 = 0 for |x| > {c}]")?;
                }
                Ok(())
            }
        }
    }
}

/// Borrowed view of a split potential used by the asymptotic checks.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticDecomposition<'a> {
    split: &'a Split,
}

impl AsymptoticDecomposition<'_> {
    pub fn q1(&self, x: f64) -> Result<f64> {
        self.split.q1.eval(x)
    }

    pub fn q2(&self, x: f64) -> Result<f64> {
        self.split.q2_eval(x)
    }

    pub fn q1pp(&self, x: f64) -> Result<f64> {
        self.split.q1pp.eval(x)
    }

    /// Half-width `2/√q1(x)` of the averaging window.
    pub fn a_halfwidth(&self, x: f64) -> Result<f64> {
        let v = self.q1(x)?;
        if v <= 0.0 {
            return Err(Error::Precondition(format!("q1({x}) = {v} is not positive")));
        }
        Ok(2.0 / v.sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalScaleConfig {
    pub quad: QuadratureConfig,
    /// Relative tolerance on the roots `d`, `d̂`.
    pub root_tol: f64,
    /// Floor on `q(x)` when forming the initial bracket guess.
    pub eps_q: f64,
    /// Bracket doublings (or halvings) before giving up.
    pub max_doublings: usize,
}

impl Default for LocalScaleConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig { rel_tol: 1e-10, abs_tol: 1e-14, max_subdivisions: 20_000, ..Default::default() },
            root_tol: 1e-10,
            eps_q: 1e-12,
            max_doublings: 80,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalePoint {
    pub d: f64,
    pub bracket: (f64, f64),
}

/// Evaluator for `d`, `d̂` and derived quantities with a memo cache keyed on
/// the exact probe abscissa.
#[derive(Debug)]
pub struct LocalScale {
    pot: Arc<Potential>,
    cfg: LocalScaleConfig,
    d_cache: RwLock<HashMap<u64, ScalePoint>>,
    dh_cache: RwLock<HashMap<u64, ScalePoint>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Which {
    D,
    DHat,
}

impl LocalScale {
    pub fn new(pot: Arc<Potential>, cfg: LocalScaleConfig) -> Self {
        Self { pot, cfg, d_cache: RwLock::default(), dh_cache: RwLock::default() }
    }

    pub fn with_default(pot: Potential) -> Self {
        Self::new(Arc::new(pot), LocalScaleConfig::default())
    }

    pub fn potential(&self) -> &Arc<Potential> {
        &self.pot
    }

    pub fn config(&self) -> &LocalScaleConfig {
        &self.cfg
    }

    fn breaks_in(&self, x: f64) -> Vec<f64> {
        let mut b = self.pot.breakpoints();
        b.push(x);
        b
    }

    /// `∫_a^b q`.
    pub fn mass(&self, a: f64, b: f64) -> Result<f64> {
        let q = |t: f64| self.pot.eval(t);
        Ok(integrate_with_breaks(&q, a, b, &self.pot.breakpoints(), &self.cfg.quad)?.value)
    }

    /// `F(x, η) = ∫₀^{√2η} ∫_{x−t}^{x+t} q`.
    pub fn f_value(&self, x: f64, eta: f64) -> Result<f64> {
        if eta <= 0.0 {
            return Ok(0.0);
        }
        let s = SQRT2 * eta;
        let w = |t: f64| Ok((s - (t - x).abs()) * self.pot.eval(t)?);
        Ok(integrate_with_breaks(&w, x - s, x + s, &self.breaks_in(x), &self.cfg.quad)?.value)
    }

    /// `η ∫_{x−η}^{x+η} q`.
    pub fn g_value(&self, x: f64, eta: f64) -> Result<f64> {
        if eta <= 0.0 {
            return Ok(0.0);
        }
        let q = |t: f64| self.pot.eval(t);
        Ok(eta * integrate_with_breaks(&q, x - eta, x + eta, &self.breaks_in(x), &self.cfg.quad)?.value)
    }

    fn level(&self, which: Which, x: f64, eta: f64) -> Result<f64> {
        match which {
            Which::D => self.f_value(x, eta),
            Which::DHat => self.g_value(x, eta),
        }
    }

    fn solve(&self, which: Which, x: f64) -> Result<ScalePoint> {
        let cache = match which {
            Which::D => &self.d_cache,
            Which::DHat => &self.dh_cache,
        };
        let key = x.to_bits();
        if let Some(p) = cache.read().expect("cache lock").get(&key) {
            return Ok(*p);
        }
        let qx = self.pot.eval(x)?;
        // capped so that a nearly vanishing q(x) does not push the first
        // window into a region where q overflows
        let eta0 = if qx <= 0.0 { 1.0 } else { (1.0 / qx.max(self.cfg.eps_q).sqrt()).min(1.0 + x.abs()) };
        let g = |eta: f64| Ok(self.level(which, x, eta)? - 2.0);
        let (mut lo, mut hi) = (eta0, eta0);
        if g(eta0)? < 0.0 {
            let mut n = 0;
            loop {
                hi *= 2.0;
                if g(hi)? >= 0.0 {
                    break;
                }
                lo = hi;
                n += 1;
                if n >= self.cfg.max_doublings {
                    return Err(Error::BracketNotFound { x });
                }
            }
        } else {
            let mut n = 0;
            loop {
                lo *= 0.5;
                if g(lo)? < 0.0 {
                    break;
                }
                hi = lo;
                n += 1;
                if n >= self.cfg.max_doublings {
                    return Err(Error::BracketNotFound { x });
                }
            }
        }
        let d = find_root_monotone_with(g, lo, hi, self.cfg.root_tol * lo, 1e-15)?;
        let p = ScalePoint { d, bracket: (lo, hi) };
        cache.write().expect("cache lock").insert(key, p);
        Ok(p)
    }

    pub fn d(&self, x: f64) -> Result<f64> {
        Ok(self.solve(Which::D, x)?.d)
    }

    pub fn d_point(&self, x: f64) -> Result<ScalePoint> {
        self.solve(Which::D, x)
    }

    pub fn d_hat(&self, x: f64) -> Result<f64> {
        Ok(self.solve(Which::DHat, x)?.d)
    }

    pub fn q_star(&self, x: f64) -> Result<f64> {
        Ok(self.d(x)?.powi(-2))
    }

    pub fn q_hat_star(&self, x: f64) -> Result<f64> {
        Ok(self.d_hat(x)?.powi(-2))
    }

    /// Central difference of `d`; `h` defaults to `max(1e-5, 1e-5|x|)`.
    pub fn d_prime(&self, x: f64, h: Option<f64>) -> Result<f64> {
        let h = h.unwrap_or_else(|| default_step(x));
        Ok((self.d(x + h)? - self.d(x - h)?) / (2.0 * h))
    }

    /// `ν(x) = d(x) ∫₀^{√2 d(x)} (q(x+t) − q(x−t)) dt`.
    pub fn nu(&self, x: f64) -> Result<f64> {
        let d = self.d(x)?;
        let s = SQRT2 * d;
        let right = self.mass(x, x + s)?;
        let left = self.mass(x - s, x)?;
        Ok(d * (right - left))
    }

    pub fn cache_len(&self) -> usize {
        self.d_cache.read().expect("cache lock").len()
    }

    /// Rows `(x, d, d̂, q*, ν)` in the order of `xs`.
    pub fn profile(&self, xs: &[f64]) -> Result<Vec<ProfileRow>> {
        xs.iter()
            .map(|&x| {
                Ok(ProfileRow { x, d: self.d(x)?, d_hat: self.d_hat(x)?, q_star: self.q_star(x)?, nu: self.nu(x)? })
            })
            .collect()
    }

    /// Class-H indication: `ν(x) → 0` as `|x| → ∞`.
    pub fn class_h_check(&self, cfg: &ClassHConfig) -> Result<ClassHReport> {
        use rayon::prelude::*;
        let levels = cfg.grid.level_points();
        let mut profile = Vec::with_capacity(levels.len());
        let mut radius = cfg.grid.r0;
        for (k, pts) in levels.iter().enumerate() {
            if k > 0 {
                radius *= 2.0;
            }
            let vals: Vec<Result<f64>> = pts.par_iter().map(|&x| self.nu(x).map(f64::abs)).collect();
            let mut m = 0.0f64;
            for v in vals {
                m = m.max(v?);
            }
            profile.push((radius, m));
        }
        let maxima: Vec<f64> = profile.iter().map(|r| r.1).collect();
        let grade = crate::realline::grid::grade_vanishing(&maxima, cfg.grid.tail_levels, cfg.tol_h);
        Ok(ClassHReport { grade, tol_h: cfg.tol_h, profile })
    }

    /// `κ₁(x) = q1(x)^{-3/2} sup_{t ∈ [0, 2/√q1(x)]} |∫_{x−t}^{x+t} q1''|`.
    pub fn kappa1(&self, x: f64, dec: &AsymptoticDecomposition<'_>, cfg: &KappaConfig) -> Result<f64> {
        let q1 = dec.q1(x)?;
        let f = |t: f64| dec.q1pp(t);
        Ok(q1.powf(-1.5) * self.window_sup(&f, x, dec.a_halfwidth(x)?, cfg)?)
    }

    /// `κ₂(x) = q1(x)^{-1/2} sup_{t ∈ [0, 2/√q1(x)]} |∫_{x−t}^{x+t} q2|`.
    pub fn kappa2(&self, x: f64, dec: &AsymptoticDecomposition<'_>, cfg: &KappaConfig) -> Result<f64> {
        let q1 = dec.q1(x)?;
        let f = |t: f64| dec.q2(t);
        Ok(q1.powf(-0.5) * self.window_sup(&f, x, dec.a_halfwidth(x)?, cfg)?)
    }

    /// `sup_{t ∈ [0, a]} |∫_{x−t}^{x+t} f|` by uniform sampling, doubled
    /// until two successive estimates agree to `cfg.stable_rel`.
    fn window_sup<F>(&self, f: &F, x: f64, a: f64, cfg: &KappaConfig) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let quad = QuadratureConfig { abs_tol: 1e-300, ..self.cfg.quad };
        let breaks = self.pot.breakpoints();
        let sweep = |n: usize| -> Result<f64> {
            let mut acc = 0.0;
            let mut best = 0.0f64;
            let mut prev = 0.0;
            for j in 1..=n {
                let t = a * j as f64 / n as f64;
                acc += integrate_with_breaks(f, x - t, x - prev, &breaks, &quad)?.value;
                acc += integrate_with_breaks(f, x + prev, x + t, &breaks, &quad)?.value;
                best = best.max(acc.abs());
                prev = t;
            }
            Ok(best)
        };
        let mut n = cfg.samples.max(2) - 1;
        let mut est = sweep(n)?;
        while 2 * n <= cfg.max_samples {
            n *= 2;
            let next = sweep(n)?;
            let stable = (next - est).abs() <= cfg.stable_rel * next.abs().max(1e-300);
            est = next;
            if stable {
                break;
            }
        }
        Ok(est)
    }

    /// Checks `|d(x)√q1(x) − 1| ≤ 2(κ₁ + κ₂) + slack` at each probe where the
    /// asymptotic regime `2(κ₁ + κ₂) ≤ regime` holds, and records the range
    /// of `d√q1` over all probes.
    pub fn asymptotic_d_check(
        &self,
        dec: &AsymptoticDecomposition<'_>,
        probes: &[f64],
        cfg: &KappaConfig,
    ) -> Result<AsymptoticReport> {
        use rayon::prelude::*;
        let rows: Vec<Result<AsymptoticRow>> = probes
            .par_iter()
            .map(|&x| {
                let d = self.d(x)?;
                let scaled = d * dec.q1(x)?.sqrt();
                let k1 = self.kappa1(x, dec, cfg)?;
                let k2 = self.kappa2(x, dec, cfg)?;
                let bound = 2.0 * (k1 + k2);
                let in_regime = bound <= cfg.regime;
                let holds = !in_regime || (scaled - 1.0).abs() <= bound + cfg.slack;
                Ok(AsymptoticRow { x, d, scaled, kappa1: k1, kappa2: k2, bound, in_regime, holds })
            })
            .collect();
        let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
        let min_scaled = rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
        let max_scaled = rows.iter().map(|r| r.scaled).fold(0.0, f64::max);
        let violations = rows.iter().filter(|r| !r.holds).map(|r| r.x).collect();
        Ok(AsymptoticReport { rows, min_scaled, max_scaled, violations })
    }
}

pub(crate) fn default_step(x: f64) -> f64 {
    1e-5f64.max(1e-5 * x.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub x: f64,
    pub d: f64,
    pub d_hat: f64,
    pub q_star: f64,
    pub nu: f64,
}

pub const PROFILE_COLUMNS: [&str; 5] = ["x", "d", "d_hat", "q_star", "nu"];

/// CSV with columns `x,d,d_hat,q_star,nu`, rows in input order.
pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let data: Vec<Vec<f64>> = rows.iter().map(|r| vec![r.x, r.d, r.d_hat, r.q_star, r.nu]).collect();
    csv_table(&PROFILE_COLUMNS, &data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassHConfig {
    pub grid: GridConfig,
    pub tol_h: f64,
}

impl Default for ClassHConfig {
    fn default() -> Self {
        Self { grid: GridConfig { levels: 16, points_per_level: 8, ..Default::default() }, tol_h: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassHReport {
    pub grade: Grade,
    pub tol_h: f64,
    /// `(radius, max |ν|)` over each dyadic shell.
    pub profile: Vec<(f64, f64)>,
}

impl ClassHReport {
    pub fn in_h_indicated(&self) -> bool {
        self.grade == Grade::Pass
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaConfig {
    /// Initial number of `t` sample points (including `t = 0`).
    pub samples: usize,
    pub max_samples: usize,
    pub stable_rel: f64,
    /// Largest `2(κ₁+κ₂)` at which the asymptotic bound is tested.
    pub regime: f64,
    pub slack: f64,
}

impl Default for KappaConfig {
    fn default() -> Self {
        Self { samples: 257, max_samples: 4096, stable_rel: 0.01, regime: 0.5, slack: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticRow {
    pub x: f64,
    pub d: f64,
    pub scaled: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub bound: f64,
    pub in_regime: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub rows: Vec<AsymptoticRow>,
    /// Range of `d √q1` over the probes.
    pub min_scaled: f64,
    pub max_scaled: f64,
    pub violations: Vec<f64>,
}
