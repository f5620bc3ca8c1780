//! The decision pipeline for a weighted pair `{L_{p,μ}; L_{p,θ}}`:
//! preconditions on `q` and `μ`, correct solvability in `L_p`, class `H`,
//! agreement of the weights with `q`, the certificate
//! `m = sup (μ/θ) d²`, bounds on the solution operator, and a graded verdict.
//!
//! Every limit or supremum over the line is graded from expanding-grid
//! samples, so a verdict is an indication, never a proof.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fss::{build_fss, FssConfig, FundamentalSystem};
use crate::hardy::{grid_lp_norm, s_operator_bounds, NormBound, SOperatorReport};
use crate::localscale::{ClassHConfig, ClassHReport, LocalScale, LocalScaleConfig, Potential};
use crate::realline::{
    grade_vanishing, inf_on_expanding_grid, integrate_tail, sup_on_expanding_grid, Direction, GridConfig,
    QuadratureConfig, RealFunction, SupResult, Trend, Verdict as IntegralVerdict,
};
use crate::report::{num, nums, Grade, Obj};

/// A weight on the line: an expression, or one derived from the local scale.
#[derive(Debug, Clone)]
pub enum Weight {
    Expr(RealFunction),
    /// `q* = 1/d²`.
    QStar,
    /// `1/d`, so that `‖y‖_{p,1/d} = ‖y/d‖_p`.
    InvScale,
}

impl Weight {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(Weight::Expr(RealFunction::parse(text)?))
    }

    pub fn one() -> Self {
        Weight::Expr(RealFunction::constant(1.0))
    }

    pub fn eval(&self, x: f64, scale: &LocalScale) -> Result<f64> {
        match self {
            Weight::Expr(f) => f.eval(x),
            Weight::QStar => scale.q_star(x),
            Weight::InvScale => Ok(1.0 / scale.d(x)?),
        }
    }

    /// `(ln w)′(x)`.
    pub fn log_derivative(&self, x: f64, scale: &LocalScale) -> Result<f64> {
        match self {
            Weight::Expr(f) => {
                let v = f.eval(x)?;
                if !(v > 0.0) {
                    return Err(Error::Precondition(format!("weight {f} is not positive at x = {x}")));
                }
                Ok(f.derivative().eval(x)? / v)
            }
            Weight::QStar => Ok(-2.0 * scale.d_prime(x, None)? / scale.d(x)?),
            Weight::InvScale => Ok(-scale.d_prime(x, None)? / scale.d(x)?),
        }
    }

    /// Samples on `grid`. Scale-backed weights are computed every ~0.05 and
    /// interpolated linearly in `ln d` in between.
    pub fn sample_nodes(&self, grid: &[f64], scale: &LocalScale) -> Result<Vec<f64>> {
        let power = match self {
            Weight::Expr(f) => return grid.par_iter().map(|&x| f.eval(x)).collect(),
            Weight::QStar => -2.0,
            Weight::InvScale => -1.0,
        };
        let n = grid.len();
        if n < 2 {
            return grid.iter().map(|&x| self.eval(x, scale)).collect();
        }
        let h = grid[1] - grid[0];
        let stride = ((0.05 / h).round() as usize).max(1);
        let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
        if *idx.last().unwrap() != n - 1 {
            idx.push(n - 1);
        }
        let ln_d = idx.par_iter().map(|&i| scale.d(grid[i]).map(f64::ln)).collect::<Result<Vec<_>>>()?;
        let mut out = vec![0.0; n];
        for k in 0..idx.len() - 1 {
            let (i0, i1) = (idx[k], idx[k + 1]);
            for (i, o) in out.iter_mut().enumerate().take(i1 + 1).skip(i0) {
                let r = (i - i0) as f64 / (i1 - i0) as f64;
                *o = (power * ((1.0 - r) * ln_d[k] + r * ln_d[k + 1])).exp();
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Expr(e) => write!(f, "{e}"),
            Weight::QStar => write!(f, "q*"),
            Weight::InvScale => write!(f, "1/d"),
        }
    }
}

/// A potential together with a weight pair and exponent.
#[derive(Debug, Clone)]
pub struct Problem {
    pub potential: Arc<Potential>,
    pub mu: Weight,
    pub theta: Weight,
    pub p: f64,
    pub fss: FssConfig,
}

impl Problem {
    pub fn new(potential: Potential, mu: Weight, theta: Weight, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("exponent p = {p} must lie in [1, ∞)")));
        }
        Ok(Self { potential: Arc::new(potential), mu, theta, p, fss: FssConfig::default() })
    }

    pub fn with_fss(mut self, fss: FssConfig) -> Self {
        self.fss = fss;
        self
    }

    pub fn scale(&self) -> LocalScale {
        LocalScale::new(self.potential.clone(), LocalScaleConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityConfig {
    /// Schedule for suprema and infima: `|x| ∈ {0, r0, 2r0, …, 2^levels r0}`.
    pub grid: GridConfig,
    pub quad: QuadratureConfig,
    pub class_h: ClassHConfig,
    /// Shell maxima of `|(ln w)′ d|` must fall below this.
    pub agreement_tol: f64,
    pub agreement_grid: GridConfig,
    /// Window half-widths `a` for `q₀(a)`.
    pub q0_widths: Vec<f64>,
    /// Include the correct-solvability stage (informative for the verdict).
    pub solvability: bool,
    /// Extra probe abscissae for the positivity and mass checks.
    pub probes: Vec<f64>,
    pub seed: u64,
    pub stability_samples: usize,
}

impl Default for AdmissibilityConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig { levels: 20, points_per_level: 16, ..Default::default() },
            quad: QuadratureConfig::default().with_tol(1e-9, 1e-300),
            class_h: ClassHConfig::default(),
            agreement_tol: 0.05,
            agreement_grid: GridConfig { levels: 20, points_per_level: 8, ..Default::default() },
            q0_widths: vec![1.0, 2.0, 4.0],
            solvability: true,
            probes: Vec::new(),
            seed: 0,
            stability_samples: 20,
        }
    }
}

/// `{0, ±1, ±2, ±4, …, ±2^20}` plus user probes, sorted.
pub fn default_probes(extra: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0];
    for k in 0..=20 {
        let x = f64::powi(2.0, k);
        v.push(x);
        v.push(-x);
    }
    v.extend_from_slice(extra);
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub grade: Grade,
    pub detail: String,
}

impl Check {
    fn new(grade: Grade, detail: impl Into<String>) -> Self {
        Self { grade, detail: detail.into() }
    }

    fn to_json(&self) -> Value {
        Obj::new().s("grade", self.grade.as_str()).s("detail", self.detail.clone()).build()
    }
}

/// Positive mass of `q` on both sides of every probe: `∫_{−∞}^x q > 0` and
/// `∫_x^∞ q > 0`, searched over windows of width up to `2^20`.
pub fn check_positive_mass(scale: &LocalScale, probes: &[f64]) -> Result<Check> {
    let found = |x: f64, sgn: f64| -> Result<bool> {
        for k in 0..=20 {
            let w = f64::powi(2.0, k);
            let (a, b) = if sgn > 0.0 { (x, x + w) } else { (x - w, x) };
            if scale.mass(a, b)? > 0.0 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let results = probes
        .par_iter()
        .map(|&x| Ok((x, found(x, -1.0)?, found(x, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    if results.iter().all(|r| !r.1 && !r.2) {
        return Ok(Check::new(Grade::Inconclusive, "q vanishes numerically on every probed window"));
    }
    match results.iter().find(|r| !(r.1 && r.2)) {
        Some(&(x, l, _)) => Ok(Check::new(
            Grade::Fail,
            format!("no mass {} of x = {x} within distance 2^20", if l { "right" } else { "left" }),
        )),
        None => Ok(Check::new(Grade::Pass, format!("positive mass on both sides of {} probes", results.len()))),
    }
}

/// Both tails of `∫ w` graded divergent.
pub fn check_divergent_tails(w: &Weight, scale: &LocalScale, quad: &QuadratureConfig) -> Result<Check> {
    let f = |t: f64| w.eval(t, scale);
    // scale-backed weights carry root-solver noise near 1e-10 relative
    let quad = match w {
        Weight::Expr(_) => *quad,
        _ => quad.with_tol(quad.rel_tol.max(1e-6), quad.abs_tol),
    };
    let l = integrate_tail(&f, 0.0, Direction::Left, &quad)?;
    let r = integrate_tail(&f, 0.0, Direction::Right, &quad)?;
    let describe = |v: IntegralVerdict| match v {
        IntegralVerdict::Converged => "converges",
        IntegralVerdict::Divergent => "diverges",
        IntegralVerdict::Inconclusive => "inconclusive",
    };
    let detail = format!("left tail {}, right tail {}", describe(l.verdict), describe(r.verdict));
    let grade = match (l.verdict, r.verdict) {
        (IntegralVerdict::Divergent, IntegralVerdict::Divergent) => Grade::Pass,
        (IntegralVerdict::Converged, _) | (_, IntegralVerdict::Converged) => Grade::Fail,
        _ => Grade::Inconclusive,
    };
    Ok(Check::new(grade, detail))
}

/// `q₀(a) = inf_x ∫_{x−a}^{x+a} q` on the expanding grid; trend `Growing`
/// means the running infimum keeps falling (indicating `q₀(a) = 0`).
pub fn q0(a: f64, scale: &LocalScale, grid: &GridConfig) -> Result<SupResult> {
    if !(a > 0.0) {
        return Err(Error::Config(format!("window half-width a = {a} must be positive")));
    }
    inf_on_expanding_grid(&|x: f64| scale.mass(x - a, x + a), grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub grade: Grade,
    /// Bounded sup of `d̂`.
    pub by_d_hat: Grade,
    /// Some `q₀(a) > 0`.
    pub by_q0: Grade,
    pub d_hat_sup: SupResult,
    pub q0_profile: Vec<(f64, SupResult)>,
    pub detail: String,
}

fn trend_to_grade(t: Trend) -> Grade {
    match t {
        Trend::Bounded => Grade::Pass,
        Trend::Growing => Grade::Fail,
        Trend::Inconclusive => Grade::Inconclusive,
    }
}

/// Correct solvability of `{L_p; L_p}` graded two ways: a bounded sup of
/// `d̂`, and `q₀(a) > 0` for some window. The two criteria are equivalent,
/// so a disagreement is reported as inconclusive with both profiles.
pub fn lp_solvability(scale: &LocalScale, cfg: &AdmissibilityConfig) -> Result<SolvabilityReport> {
    let d_hat_sup = sup_on_expanding_grid(&|x: f64| scale.d_hat(x), &cfg.grid)?;
    let by_d_hat = trend_to_grade(d_hat_sup.trend);
    let q0_profile =
        cfg.q0_widths.iter().map(|&a| Ok((a, q0(a, scale, &cfg.grid)?))).collect::<Result<Vec<_>>>()?;
    let by_q0 = if q0_profile.iter().any(|(_, r)| r.trend == Trend::Bounded) {
        Grade::Pass
    } else if q0_profile.iter().all(|(_, r)| r.trend == Trend::Growing) {
        Grade::Fail
    } else {
        Grade::Inconclusive
    };
    let (grade, detail) = if by_d_hat == by_q0 {
        (by_d_hat, format!("sup d̂ {}, q₀ criterion agrees", d_hat_sup.trend.as_str()))
    } else {
        let q0s: Vec<String> =
            q0_profile.iter().map(|(a, r)| format!("q0({a}) levels {:?}", r.level_values)).collect();
        (
            Grade::Inconclusive,
            format!(
                "criteria disagree: d̂ sup {} (levels {:?}) vs q₀ {}; {}",
                d_hat_sup.trend.as_str(),
                d_hat_sup.level_values,
                by_q0.as_str(),
                q0s.join("; ")
            ),
        )
    };
    Ok(SolvabilityReport { grade, by_d_hat, by_q0, d_hat_sup, q0_profile, detail })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport {
    pub grade: Grade,
    pub tol: f64,
    /// `(radius, max |(ln w)′ d|)` over each dyadic shell.
    pub profile: Vec<(f64, f64)>,
}

/// Sufficient condition for agreement of a weight with `q`:
/// `(ln w)′(x)·d(x) → 0` as `|x| → ∞`. For `θ` this is applied to `1/θ`,
/// which has the same modulus. Shells past the point where the weight
/// leaves the floating-point range are dropped.
pub fn agreement_check(w: &Weight, scale: &LocalScale, cfg: &AdmissibilityConfig) -> Result<AgreementReport> {
    let levels = cfg.agreement_grid.level_points();
    let mut profile = Vec::with_capacity(levels.len());
    let mut radius = cfg.agreement_grid.r0;
    for (k, pts) in levels.iter().enumerate() {
        if k > 0 {
            radius *= 2.0;
        }
        let vals = pts
            .par_iter()
            .map(|&x| Ok((w.log_derivative(x, scale)? * scale.d(x)?).abs()))
            .collect::<Result<Vec<f64>>>();
        match vals {
            Ok(v) => profile.push((radius, v.into_iter().fold(0.0, f64::max))),
            // the weight overflows or underflows: grade the shells so far
            Err(Error::Domain { .. }) if profile.len() > cfg.agreement_grid.tail_levels => break,
            Err(e) => return Err(e),
        }
    }
    let maxima: Vec<f64> = profile.iter().map(|r| r.1).collect();
    let grade = grade_vanishing(&maxima, cfg.agreement_grid.tail_levels, cfg.agreement_tol);
    Ok(AgreementReport { grade, tol: cfg.agreement_tol, profile })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// The sup, or `∞` when the trend is growing.
    pub value: f64,
    pub sup: SupResult,
    pub grade: Grade,
}

/// `m = sup_x (μ/θ) d²`; pass when finite-indicated.
pub fn m_certificate(mu: &Weight, theta: &Weight, scale: &LocalScale, grid: &GridConfig) -> Result<Certificate> {
    let f = |x: f64| -> Result<f64> {
        let d = scale.d(x)?;
        Ok(mu.eval(x, scale)? / theta.eval(x, scale)? * d * d)
    };
    let sup = sup_on_expanding_grid(&f, grid)?;
    let value = if sup.trend == Trend::Growing { f64::INFINITY } else { sup.estimate };
    Ok(Certificate { value, grade: trend_to_grade(sup.trend), sup })
}

/// `m₀ = inf_x q*(x) θ(x)`; pass when the infimum stays positive.
pub fn m0_value(theta: &Weight, scale: &LocalScale, grid: &GridConfig) -> Result<Certificate> {
    let f = |x: f64| Ok(scale.q_star(x)? * theta.eval(x, scale)?);
    let inf = inf_on_expanding_grid(&f, grid)?;
    let value = if inf.trend == Trend::Growing { 0.0 } else { inf.estimate };
    Ok(Certificate { value, grade: trend_to_grade(inf.trend), sup: inf })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Admissible,
    NotAdmissible,
    Inconclusive,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Admissible => "admissible-indicated",
            Decision::NotAdmissible => "not-admissible-indicated",
            Decision::Inconclusive => "inconclusive",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Decision::Admissible => 0,
            Decision::NotAdmissible => 1,
            Decision::Inconclusive => 2,
        }
    }
}

/// Which criterion justified a field.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub check: &'static str,
    pub basis: &'static str,
}

const BASIS_POSITIVE_MASS: &str =
    "q has positive mass on both half-lines from every point; needed for the local scale d and the fundamental system";
const BASIS_MU_TAILS: &str =
    "int mu = infinity on both half-lines; gives uniqueness of bounded solutions and the operator criterion";
const BASIS_SOLVABILITY: &str = "{L_p; L_p} admissible iff sup d_hat < infinity iff q_0(a) > 0 for some a";
const BASIS_CLASS_H: &str = "nu(x) -> 0 as |x| -> infinity";
const BASIS_AGREEMENT: &str = "(ln w)' d -> 0 as |x| -> infinity implies agreement of the weight with q";
const BASIS_M: &str = "for q in H and agreeing weights: admissible iff m = sup (mu/theta) d^2 < infinity";
const BASIS_M0: &str = "inf q* theta > 0 implies {d L_p; L_{p,theta}} admissible";
const BASIS_S: &str = "admissible iff S f = mu G(f/theta) is bounded on L_p; Hardy-type two-sided bounds";
const BASIS_STABILITY: &str = "||G f||_{p,mu} <= c ||f||_{p,theta} with c = ||S||";

#[derive(Debug, Clone)]
pub struct AdmissibilityReport {
    pub p: f64,
    pub mu: String,
    pub theta: String,
    pub positive_mass: Check,
    pub mu_tails_divergent: Check,
    pub solvability: Option<SolvabilityReport>,
    pub class_h: ClassHReport,
    pub agreement_mu: AgreementReport,
    pub agreement_theta: AgreementReport,
    pub m: Certificate,
    pub m0: Certificate,
    pub s_bounds: Option<SOperatorReport>,
    pub s_stage: Check,
    pub verdict: Decision,
    /// Stage that decided (or blocked) the verdict.
    pub deciding_stage: String,
    pub provenance: Vec<Provenance>,
}

impl AdmissibilityReport {
    pub fn s_bound(&self) -> Option<NormBound> {
        self.s_bounds.as_ref().map(|s| s.bound)
    }

    pub fn to_json(&self) -> Value {
        let sup_json = |r: &SupResult| {
            Obj::new()
                .f("estimate", r.estimate)
                .f("argmax", r.argmax)
                .s("trend", r.trend.as_str())
                .v("level_values", nums(&r.level_values))
                .v("radii", nums(&r.radii))
                .build()
        };
        let profile_json = |p: &[(f64, f64)]| {
            Value::Array(p.iter().map(|&(r, v)| Value::Array(vec![num(r), num(v)])).collect())
        };
        let agreement = |a: &AgreementReport| {
            Obj::new()
                .s("grade", a.grade.as_str())
                .f("tol", a.tol)
                .v("profile", profile_json(&a.profile))
                .build()
        };
        let mut o = Obj::new()
            .f("p", self.p)
            .s("mu", self.mu.clone())
            .s("theta", self.theta.clone())
            .v("positive_mass", self.positive_mass.to_json())
            .v("mu_tails_divergent", self.mu_tails_divergent.to_json())
            .v(
                "in_H",
                Obj::new()
                    .s("grade", self.class_h.grade.as_str())
                    .f("tol", self.class_h.tol_h)
                    .v("profile", profile_json(&self.class_h.profile))
                    .build(),
            )
            .v("agreement_mu", agreement(&self.agreement_mu))
            .v("agreement_theta", agreement(&self.agreement_theta))
            .v(
                "m",
                Obj::new().f("value", self.m.value).s("grade", self.m.grade.as_str()).v("sup", sup_json(&self.m.sup)).build(),
            )
            .v(
                "m0",
                Obj::new().f("value", self.m0.value).s("grade", self.m0.grade.as_str()).v("inf", sup_json(&self.m0.sup)).build(),
            )
            .v("s_stage", self.s_stage.to_json())
            .v("s_bounds", self.s_bounds.as_ref().map_or(Value::Null, |s| s.to_json()))
            .s("verdict", self.verdict.as_str())
            .s("deciding_stage", self.deciding_stage.clone())
            .v(
                "provenance",
                Value::Array(
                    self.provenance
                        .iter()
                        .map(|p| Obj::new().s("check", p.check).s("basis", p.basis).build())
                        .collect(),
                ),
            );
        o = match &self.solvability {
            Some(s) => o.v(
                "lp_solvability",
                Obj::new()
                    .s("grade", s.grade.as_str())
                    .s("by_d_hat", s.by_d_hat.as_str())
                    .s("by_q0", s.by_q0.as_str())
                    .s("d_hat_sup_trend", s.d_hat_sup.trend.as_str())
                    .v("d_hat_sup", sup_json(&s.d_hat_sup))
                    .v(
                        "q0_profile",
                        Value::Array(
                            s.q0_profile.iter().map(|(a, r)| Obj::new().f("a", *a).v("inf", sup_json(r)).build()).collect(),
                        ),
                    )
                    .s("detail", s.detail.clone())
                    .build(),
            ),
            None => o.v("lp_solvability", Value::Null),
        };
        o.build()
    }
}

/// Builds the fundamental system for `problem` and samples both weights on
/// its grid.
pub fn realize(problem: &Problem, scale: &LocalScale) -> Result<(FundamentalSystem, Vec<f64>, Vec<f64>)> {
    let fs = build_fss(scale, &problem.fss)?;
    let mu = problem.mu.sample_nodes(fs.grid(), scale)?;
    let theta = problem.theta.sample_nodes(fs.grid(), scale)?;
    Ok((fs, mu, theta))
}

fn s_stage(problem: &Problem, scale: &LocalScale) -> (Option<SOperatorReport>, Check) {
    let run = || -> Result<SOperatorReport> {
        let (fs, mu, theta) = realize(problem, scale)?;
        s_operator_bounds(&fs, &mu, &theta, problem.p)
    };
    match run() {
        Ok(r) => {
            let grade = trend_to_grade(r.trend);
            let detail = format!("[{}, {}] ({})", r.bound.lower, r.bound.upper, r.bound.method);
            (Some(r), Check::new(grade, detail))
        }
        Err(e) => (None, Check::new(Grade::Inconclusive, e.to_string())),
    }
}

/// Runs every stage and assembles the graded verdict.
///
/// Admissible-indicated requires positive mass, divergent `μ` tails,
/// `q ∈ H`, agreement of both weights, a finite `m`, and bounded operator
/// bounds. A growing `m` gives not-admissible-indicated unless the
/// operator bounds contradict it. Positive mass failing while the `μ` tails
/// diverge also gives not-admissible-indicated.
pub fn verdict(problem: &Problem, cfg: &AdmissibilityConfig) -> Result<AdmissibilityReport> {
    let scale = problem.scale();
    let probes = default_probes(&cfg.probes);
    let positive_mass = check_positive_mass(&scale, &probes)?;
    let mu_tails_divergent = match check_divergent_tails(&problem.mu, &scale, &cfg.quad) {
        Ok(c) => c,
        Err(e) => Check::new(Grade::Inconclusive, e.to_string()),
    };
    let mut provenance = vec![
        Provenance { check: "positive_mass", basis: BASIS_POSITIVE_MASS },
        Provenance { check: "mu_tails_divergent", basis: BASIS_MU_TAILS },
    ];
    if positive_mass.grade != Grade::Pass {
        let v = if positive_mass.grade == Grade::Fail && mu_tails_divergent.grade == Grade::Pass {
            Decision::NotAdmissible
        } else {
            Decision::Inconclusive
        };
        return Err(Error::Precondition(format!(
            "{}: {} (positive mass {})",
            v.as_str(),
            positive_mass.detail,
            positive_mass.grade.as_str()
        )));
    }
    let solvability = if cfg.solvability { Some(lp_solvability(&scale, cfg)?) } else { None };
    let class_h = scale.class_h_check(&cfg.class_h)?;
    let agreement_mu = agreement_check(&problem.mu, &scale, cfg)?;
    let agreement_theta = agreement_check(&problem.theta, &scale, cfg)?;
    let m = m_certificate(&problem.mu, &problem.theta, &scale, &cfg.grid)?;
    let m0 = m0_value(&problem.theta, &scale, &cfg.grid)?;
    let (s_bounds, s_check) = s_stage(problem, &scale);
    if solvability.is_some() {
        provenance.push(Provenance { check: "lp_solvability", basis: BASIS_SOLVABILITY });
    }
    provenance.extend([
        Provenance { check: "in_H", basis: BASIS_CLASS_H },
        Provenance { check: "agreement_mu", basis: BASIS_AGREEMENT },
        Provenance { check: "agreement_theta", basis: BASIS_AGREEMENT },
        Provenance { check: "m", basis: BASIS_M },
        Provenance { check: "m0", basis: BASIS_M0 },
        Provenance { check: "s_bounds", basis: BASIS_S },
    ]);
    let stages = [
        ("mu_tails_divergent", mu_tails_divergent.grade),
        ("in_H", class_h.grade),
        ("agreement_mu", agreement_mu.grade),
        ("agreement_theta", agreement_theta.grade),
    ];
    let (decision, deciding) = match stages.iter().find(|s| s.1 != Grade::Pass) {
        Some(&(name, _)) => (Decision::Inconclusive, name.to_string()),
        None => match (m.grade, s_check.grade) {
            (Grade::Pass, Grade::Pass) => (Decision::Admissible, "m".to_string()),
            (Grade::Fail, Grade::Pass) => (Decision::Inconclusive, "m contradicts s_bounds".to_string()),
            (Grade::Fail, _) => (Decision::NotAdmissible, "m".to_string()),
            (Grade::Pass, Grade::Fail) => (Decision::Inconclusive, "s_bounds contradicts m".to_string()),
            (Grade::Pass, Grade::Inconclusive) => (Decision::Inconclusive, "s_bounds".to_string()),
            (Grade::Inconclusive, _) => (Decision::Inconclusive, "m".to_string()),
        },
    };
    Ok(AdmissibilityReport {
        p: problem.p,
        mu: problem.mu.to_string(),
        theta: problem.theta.to_string(),
        positive_mass,
        mu_tails_divergent,
        solvability,
        class_h,
        agreement_mu,
        agreement_theta,
        m,
        m0,
        s_bounds,
        s_stage: s_check,
        verdict: decision,
        deciding_stage: deciding,
        provenance,
    })
}

/// The pair `{L_{p,q*}; L_p}` for `q ∈ H` with unbounded `d` and
/// `∫ q* = ∞` on both half-lines, and its companion `{L_p; L_p}`, which is
/// then not admissible.
#[derive(Debug, Clone)]
pub struct SpecialPair {
    pub problem: Problem,
    pub companion: Option<Problem>,
    pub checks: Vec<(&'static str, Grade)>,
}

pub fn special_pair_qstar(potential: Potential, p: f64, cfg: &AdmissibilityConfig) -> Result<SpecialPair> {
    let problem = Problem::new(potential, Weight::QStar, Weight::one(), p)?;
    let scale = problem.scale();
    let in_h = scale.class_h_check(&cfg.class_h)?.grade;
    let d_sup = sup_on_expanding_grid(&|x: f64| scale.d(x), &cfg.grid)?;
    let d_unbounded = Grade::from_bool(d_sup.trend == Trend::Growing);
    let tails = check_divergent_tails(&Weight::QStar, &scale, &cfg.quad)?.grade;
    let checks = vec![("in_H", in_h), ("d_unbounded", d_unbounded), ("q_star_tails_divergent", tails)];
    if let Some((name, g)) = checks.iter().find(|c| c.1 != Grade::Pass) {
        return Err(Error::Precondition(format!("q* pair requires {name}, graded {}", g.as_str())));
    }
    let companion = Problem::new((*problem.potential).clone(), Weight::one(), Weight::one(), p)?;
    Ok(SpecialPair { problem, companion: Some(companion), checks })
}

/// The pair `{d L_p; L_{p,θ}}` (realized as `μ = 1/d`) for `q ∈ H` and
/// `inf q*θ > 0`.
pub fn special_pair_theta(potential: Potential, theta: Weight, p: f64, cfg: &AdmissibilityConfig) -> Result<SpecialPair> {
    let problem = Problem::new(potential, Weight::InvScale, theta, p)?;
    let scale = problem.scale();
    let in_h = scale.class_h_check(&cfg.class_h)?.grade;
    let m0 = m0_value(&problem.theta, &scale, &cfg.grid)?;
    let m0_grade = if m0.grade == Grade::Pass && m0.value > 0.0 { Grade::Pass } else { m0.grade };
    let checks = vec![("in_H", in_h), ("m0_positive", m0_grade)];
    if let Some((name, g)) = checks.iter().find(|c| c.1 != Grade::Pass) {
        return Err(Error::Precondition(format!("d L_p pair requires {name}, graded {}", g.as_str())));
    }
    Ok(SpecialPair { problem, companion: None, checks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub max_ratio: f64,
    pub ratios: Vec<f64>,
    /// Samples skipped (zero or non-finite norms), with the reason.
    pub skipped: Vec<String>,
    pub bound: f64,
    pub within_bound: bool,
    pub basis: &'static str,
}

/// Seeded test functions on `[−X/2, X/2]`: bumps, oscillatory packets and
/// truncated power tails.
pub fn stability_samples(grid: &[f64], count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * grid[grid.len() - 1].abs().min(grid[0].abs());
    (0..count)
        .map(|k| {
            let c = rng.gen_range(-0.5 * half..0.5 * half);
            let w = 10f64.powf(rng.gen_range(-0.7..0.9));
            let freq = rng.gen_range(0.0..5.0);
            let alpha = rng.gen_range(0.6..2.0);
            grid.iter()
                .map(|&x| {
                    if x.abs() > half {
                        return 0.0;
                    }
                    let t = (x - c) / w;
                    match k % 3 {
                        0 => (-t * t).exp(),
                        1 => (-t * t).exp() * (freq * x).cos(),
                        _ => (1.0 + t.abs()).powf(-alpha),
                    }
                })
                .collect()
        })
        .collect()
}

/// Ratios `‖G f‖_{p,μ} / ‖f‖_{p,θ}` over seeded test functions, compared
/// against `bound·(1 + δ)`.
pub fn stability_probe(
    fs: &FundamentalSystem,
    mu: &[f64],
    theta: &[f64],
    p: f64,
    bound: f64,
    delta: f64,
    samples: &[Vec<f64>],
) -> StabilityReport {
    let grid = fs.grid();
    let mut ratios = Vec::new();
    let mut skipped = Vec::new();
    for (k, f) in samples.iter().enumerate() {
        let tf: Vec<f64> = f.iter().zip(theta).map(|(a, b)| a * b).collect();
        let nf = grid_lp_norm(grid, &tf, p);
        if !(nf > 0.0 && nf.is_finite()) {
            skipped.push(format!("sample {k}: ‖f‖ = {nf}"));
            continue;
        }
        let y = fs.apply_samples(f);
        let my: Vec<f64> = y.iter().zip(mu).map(|(a, b)| a * b).collect();
        ratios.push(grid_lp_norm(grid, &my, p) / nf);
    }
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    StabilityReport { max_ratio, ratios, skipped, bound, within_bound: max_ratio <= bound * (1.0 + delta), basis: BASIS_STABILITY }
}

impl StabilityReport {
    pub fn to_json(&self) -> Value {
        Obj::new()
            .f("max_ratio", self.max_ratio)
            .v("ratios", nums(&self.ratios))
            .f("bound", self.bound)
            .b("within_bound", self.within_bound)
            .v("skipped", Value::Array(self.skipped.iter().map(|s| Value::String(s.clone())).collect()))
            .s("basis", self.basis)
            .build()
    }
}
