//! Hardy-type operators: Muckenhoupt quantities and two-sided norm bounds,
//! the exact `L₁` norm of an integral operator, bounds for the solution
//! operator `S f = μ G(f/θ)`, and an empirical norm estimator on grids.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fss::FundamentalSystem;
use crate::realline::{
    integrate, integrate_tail, sup_on_expanding_grid, Direction, GridConfig, QuadratureConfig, RealFunction,
    SupResult, Trend, Verdict,
};
use crate::report::Obj;

#[derive(Debug, Clone)]
pub struct HardyWeights {
    pub mu: RealFunction,
    pub theta: RealFunction,
    pub p: f64,
}

impl HardyWeights {
    pub fn new(mu: RealFunction, theta: RealFunction, p: f64) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::Config(format!("exponent p = {p} must lie in [1, ∞)")));
        }
        Ok(Self { mu, theta, p })
    }

    pub fn parse(mu: &str, theta: &str, p: f64) -> Result<Self> {
        Self::new(RealFunction::parse(mu)?, RealFunction::parse(theta)?, p)
    }

    /// Conjugate exponent; `∞` for `p = 1`.
    pub fn p_conj(&self) -> f64 {
        conjugate(self.p)
    }

    /// Both weights strictly positive at every probe.
    pub fn check_positive(&self, probes: &[f64]) -> Result<()> {
        for &x in probes {
            let (m, t) = (self.mu.eval(x)?, self.theta.eval(x)?);
            if !(m > 0.0 && t > 0.0) {
                return Err(Error::Precondition(format!("weights must be positive: μ({x}) = {m}, θ({x}) = {t}")));
            }
        }
        Ok(())
    }

    fn require_p_gt_one(&self) -> Result<()> {
        if self.p > 1.0 {
            Ok(())
        } else {
            Err(Error::Precondition("Muckenhoupt quantities need p > 1".into()))
        }
    }
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else {
        p / (p - 1.0)
    }
}

/// `p^{1/p} p′^{1/p′}`, the ratio between the two sides of the Hardy
/// sandwich (1 for `p = 1`).
pub fn hardy_constant(p: f64) -> f64 {
    if p == 1.0 {
        return 1.0;
    }
    let q = conjugate(p);
    p.powf(1.0 / p) * q.powf(1.0 / q)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBound {
    pub lower: f64,
    pub upper: f64,
    pub method: &'static str,
}

impl NormBound {
    pub fn new(lower: f64, upper: f64, method: &'static str) -> Result<Self> {
        if !(lower >= 0.0 && upper >= lower) {
            return Err(Error::Precondition(format!("malformed norm bound [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper, method })
    }

    pub fn is_finite(&self) -> bool {
        self.upper.is_finite()
    }

    /// `v ∈ [lower·(1−δ), upper·(1+δ)]`.
    pub fn contains(&self, v: f64, delta: f64) -> bool {
        v >= self.lower * (1.0 - delta) && v <= self.upper * (1.0 + delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyConfig {
    pub quad: QuadratureConfig,
    pub grid: GridConfig,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            quad: QuadratureConfig::default().with_tol(1e-9, 1e-300),
            grid: GridConfig { levels: 8, points_per_level: 16, refine: true, ..Default::default() },
        }
    }
}

/// Which Hardy operator: `H f(t) = μ(t)∫_t^∞ θf` or `H̃ f(t) = μ(t)∫_{−∞}^t θf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HardyKind {
    Forward,
    Backward,
}

/// `∫ |f|` from `x` to `±∞`; `∞` when graded divergent.
fn tail_mass<F>(f: &F, x: f64, dir: Direction, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let r = integrate_tail(f, x, dir, cfg)?;
    match r.verdict {
        Verdict::Converged => Ok(r.value),
        Verdict::Divergent => Ok(f64::INFINITY),
        Verdict::Inconclusive => Err(Error::Inconclusive(format!("tail integral from {x} ({dir:?}) did not settle"))),
    }
}

fn product(a: f64, pa: f64, b: f64, pb: f64) -> f64 {
    if a.is_infinite() || b.is_infinite() {
        f64::INFINITY
    } else {
        a.powf(1.0 / pa) * b.powf(1.0 / pb)
    }
}

/// `H_p(x) = (∫_{−∞}^x μ^p)^{1/p} (∫_x^∞ θ^{p′})^{1/p′}`; `∞` when either
/// factor diverges.
pub fn hp_at(x: f64, w: &HardyWeights, cfg: &HardyConfig) -> Result<f64> {
    w.require_p_gt_one()?;
    let (p, q) = (w.p, w.p_conj());
    let left = tail_mass(&|t| Ok(w.mu.eval(t)?.abs().powf(p)), x, Direction::Left, &cfg.quad)?;
    let right = tail_mass(&|t| Ok(w.theta.eval(t)?.abs().powf(q)), x, Direction::Right, &cfg.quad)?;
    Ok(product(left, p, right, q))
}

/// `H̃_p(x) = (∫_{−∞}^x θ^{p′})^{1/p′} (∫_x^∞ μ^p)^{1/p}`.
pub fn hp_tilde_at(x: f64, w: &HardyWeights, cfg: &HardyConfig) -> Result<f64> {
    w.require_p_gt_one()?;
    let (p, q) = (w.p, w.p_conj());
    let left = tail_mass(&|t| Ok(w.theta.eval(t)?.abs().powf(q)), x, Direction::Left, &cfg.quad)?;
    let right = tail_mass(&|t| Ok(w.mu.eval(t)?.abs().powf(p)), x, Direction::Right, &cfg.quad)?;
    Ok(product(left, q, right, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HardyBound {
    pub kind: HardyKind,
    pub bound: NormBound,
    pub sup: SupResult,
}

impl HardyBound {
    pub fn bounded(&self) -> bool {
        self.sup.trend == Trend::Bounded && self.bound.is_finite()
    }
}

/// Sandwich `[H_p, p^{1/p}p′^{1/p′} H_p]` with `H_p` the expanding-grid sup;
/// a growing sup gives an infinite upper end.
pub fn hardy_norm_bounds(w: &HardyWeights, kind: HardyKind, cfg: &HardyConfig) -> Result<HardyBound> {
    w.require_p_gt_one()?;
    let f = |x: f64| match kind {
        HardyKind::Forward => hp_at(x, w, cfg),
        HardyKind::Backward => hp_tilde_at(x, w, cfg),
    };
    let mut sup = sup_on_expanding_grid(&f, &cfg.grid)?;
    if sup.estimate.is_infinite() {
        sup.trend = Trend::Growing;
    }
    let h = sup.estimate;
    let upper = if sup.trend == Trend::Growing { f64::INFINITY } else { hardy_constant(w.p) * h };
    let method = match kind {
        HardyKind::Forward => "muckenhoupt_forward",
        HardyKind::Backward => "muckenhoupt_backward",
    };
    Ok(HardyBound { kind, bound: NormBound::new(h, upper, method)?, sup })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorm {
    pub value: f64,
    pub argmax: f64,
}

/// `‖K‖_{L₁→L₁} = sup_s ∫_a^b |K(s, t)| dt` for `(Kf)(t) = ∫ K(s,t) f(s) ds`,
/// with the sup taken over `s_points`. Bounds may be infinite.
pub fn kernel_l1_norm<K>(k: &K, a: f64, b: f64, s_points: &[f64], quad: &QuadratureConfig) -> Result<KernelNorm>
where
    K: Fn(f64, f64) -> Result<f64> + Sync,
{
    if !(a < b) {
        return Err(Error::Config(format!("empty interval ({a}, {b})")));
    }
    let row = |s: f64| -> Result<f64> {
        let g = |t: f64| Ok(k(s, t)?.abs());
        let pivot = s.clamp(a.max(-f64::MAX), b.min(f64::MAX));
        let left = if a.is_infinite() {
            tail_mass(&g, pivot, Direction::Left, quad)?
        } else {
            integrate(&g, a, pivot, quad)?.value
        };
        let right = if b.is_infinite() {
            tail_mass(&g, pivot, Direction::Right, quad)?
        } else {
            integrate(&g, pivot, b, quad)?.value
        };
        Ok(left + right)
    };
    let vals = s_points.par_iter().map(|&s| row(s)).collect::<Result<Vec<_>>>()?;
    let mut best = KernelNorm { value: 0.0, argmax: s_points.first().copied().unwrap_or(0.0) };
    for (&s, v) in s_points.iter().zip(vals) {
        if v > best.value {
            best = KernelNorm { value: v, argmax: s };
        }
    }
    Ok(best)
}

/// Samples of `μ` and `θ` at the nodes of `fs`.
pub fn sample_weights(fs: &FundamentalSystem, w: &HardyWeights) -> Result<(Vec<f64>, Vec<f64>)> {
    let mu = fs.grid().par_iter().map(|&x| w.mu.eval(x)).collect::<Result<Vec<_>>>()?;
    let theta = fs.grid().par_iter().map(|&x| w.theta.eval(x)).collect::<Result<Vec<_>>>()?;
    Ok((mu, theta))
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

/// `ln ∫ e^{g}` over a cell of width `h` on which `g` is linear from `a0` to `a1`.
fn log_cell(a0: f64, a1: f64, h: f64) -> f64 {
    let hi = a0.max(a1);
    let delta = (a1 - a0).abs();
    if delta < 1e-9 {
        hi + h.ln() - 0.5 * delta
    } else {
        hi + (h * -(-delta).exp_m1() / delta).ln()
    }
}

/// Cumulative `ln ∫ e^{g}` from the far end, seeded with the exponential
/// tail `e^{g_end}/|g′_end|` beyond the grid. Returns the profile and the
/// log of the tail.
fn log_cumulative(g: &[f64], h: f64, from_left: bool) -> Result<(Vec<f64>, f64)> {
    let n = g.len();
    let (i0, i1, i2) = if from_left { (0, 1, 2) } else { (n - 1, n - 2, n - 3) };
    // one-sided slope pointing away from the grid
    let slope = (-3.0 * g[i0] + 4.0 * g[i1] - g[i2]) / (2.0 * h);
    if !(slope > 0.0) {
        return Err(Error::Inconclusive(format!(
            "modeled tail does not decay beyond the {} truncation point (log-slope {slope})",
            if from_left { "left" } else { "right" }
        )));
    }
    let tail = g[i0] - slope.ln();
    let mut out = vec![0.0; n];
    out[i0] = tail;
    if from_left {
        for i in 1..n {
            out[i] = log_add(out[i - 1], log_cell(g[i - 1], g[i], h));
        }
    } else {
        for i in (0..n - 1).rev() {
            out[i] = log_add(out[i + 1], log_cell(g[i], g[i + 1], h));
        }
    }
    Ok((out, tail))
}

/// `M_p` and `M̃_p` on the nodes of `fs` (the Muckenhoupt quantities of the
/// two Hardy pieces of `S`), computed in log space.
#[derive(Debug, Clone)]
pub struct MpProfile {
    pub p: f64,
    pub ln_mp: Vec<f64>,
    pub ln_mp_tilde: Vec<f64>,
    /// Largest share of a cumulative integral contributed by the modeled
    /// tail, over the interior `[−X/2, X/2]`.
    pub tail_fraction: f64,
}

pub fn mp_profile(fs: &FundamentalSystem, mu: &[f64], theta: &[f64], p: f64) -> Result<MpProfile> {
    if !(p > 1.0) {
        return Err(Error::Precondition("M_p needs p > 1".into()));
    }
    let n = fs.len();
    if mu.len() != n || theta.len() != n {
        return Err(Error::Config("weight samples do not match the grid".into()));
    }
    if let Some(i) = (0..n).find(|&i| !(mu[i] > 0.0 && theta[i] > 0.0)) {
        return Err(Error::Precondition(format!("weights must be positive at x = {}", fs.grid()[i])));
    }
    let q = conjugate(p);
    let (lu, lv) = (fs.ln_u_nodes(), fs.ln_v_nodes());
    let lmu: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let lth: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    let h = fs.step();
    // M_p:  (∫_{−∞}^x (μv)^p)^{1/p} (∫_x^∞ (u/θ)^{p′})^{1/p′}
    let a: Vec<f64> = (0..n).map(|i| p * (lmu[i] + lv[i])).collect();
    let b: Vec<f64> = (0..n).map(|i| q * (lu[i] - lth[i])).collect();
    // M̃_p: (∫_{−∞}^x (v/θ)^{p′})^{1/p′} (∫_x^∞ (μu)^p)^{1/p}
    let c: Vec<f64> = (0..n).map(|i| q * (lv[i] - lth[i])).collect();
    let d: Vec<f64> = (0..n).map(|i| p * (lmu[i] + lu[i])).collect();
    let (la, ta) = log_cumulative(&a, h, true)?;
    let (rb, tb) = log_cumulative(&b, h, false)?;
    let (lc, tc) = log_cumulative(&c, h, true)?;
    let (rd, td) = log_cumulative(&d, h, false)?;
    let ln_mp = (0..n).map(|i| la[i] / p + rb[i] / q).collect();
    let ln_mp_tilde = (0..n).map(|i| lc[i] / q + rd[i] / p).collect();
    let inner = fs.interior();
    let (first, last) = (inner.start, inner.end - 1);
    let tail_fraction = [(ta - la[first]), (tb - rb[last]), (tc - lc[first]), (td - rd[last])]
        .iter()
        .map(|v| v.exp())
        .fold(0.0, f64::max);
    Ok(MpProfile { p, ln_mp, ln_mp_tilde, tail_fraction })
}

/// Expanding-grid sup of node data (given as logs) over `[−X/2, X/2]`,
/// linear interpolation in log space between nodes.
fn interior_sup(fs: &FundamentalSystem, ln_vals: &[f64]) -> Result<SupResult> {
    let half = 0.5 * fs.x_max();
    let levels = 5;
    let cfg = GridConfig {
        r0: half / f64::powi(2.0, levels as i32),
        levels,
        points_per_level: 64,
        tail_levels: 3,
        ..Default::default()
    };
    let grid = fs.grid();
    let h = fs.step();
    let f = |x: f64| -> Result<f64> {
        let s = (x - grid[0]) / h;
        let i = (s.floor() as usize).min(grid.len() - 2);
        let r = s - i as f64;
        Ok(((1.0 - r) * ln_vals[i] + r * ln_vals[i + 1]).exp())
    };
    sup_on_expanding_grid(&f, &cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SOperatorReport {
    pub p: f64,
    pub bound: NormBound,
    /// `sup M_p`; for `p = 1` the exact norm.
    pub mp_sup: f64,
    /// `sup M̃_p`; for `p = 1` equal to `mp_sup`.
    pub mp_tilde_sup: f64,
    pub argmax_x: f64,
    pub trend: Trend,
    pub tail_model_used: bool,
    pub tail_fraction: f64,
}

impl SOperatorReport {
    pub fn bounded(&self) -> bool {
        self.trend == Trend::Bounded && self.bound.is_finite()
    }

    pub fn to_json(&self) -> serde_json::Value {
        Obj::new()
            .f("p", self.p)
            .f("Mp_sup", self.mp_sup)
            .f("Mp_tilde_sup", self.mp_tilde_sup)
            .f("s_lower", self.bound.lower)
            .f("s_upper", self.bound.upper)
            .s("method", self.bound.method)
            .f("argmax_x", self.argmax_x)
            .s("trend", self.trend.as_str())
            .b("tail_model_used", self.tail_model_used)
            .f("tail_fraction", self.tail_fraction)
            .build()
    }
}

fn combine(a: Trend, b: Trend) -> Trend {
    match (a, b) {
        (Trend::Growing, _) | (_, Trend::Growing) => Trend::Growing,
        (Trend::Bounded, Trend::Bounded) => Trend::Bounded,
        _ => Trend::Inconclusive,
    }
}

/// Modeled tails contributing more than this share make the bounds
/// inconclusive.
pub const MAX_TAIL_FRACTION: f64 = 0.05;

/// Bounds on `‖S‖_{p→p}` for `S f = μ G(f/θ)` from the weight samples on
/// the grid of `fs`.
///
/// For `p > 1`: `[(sup M_p + sup M̃_p)/2, p^{1/p}p′^{1/p′}(sup M_p + sup M̃_p)]`.
/// For `p = 1` the norm is exact: `sup_x θ(x)^{-1} ∫ μ(t) G(x,t) dt`.
pub fn s_operator_bounds(fs: &FundamentalSystem, mu: &[f64], theta: &[f64], p: f64) -> Result<SOperatorReport> {
    if p == 1.0 {
        if mu.len() != fs.len() || theta.len() != fs.len() {
            return Err(Error::Config("weight samples do not match the grid".into()));
        }
        let g = fs.apply_samples(mu);
        let ln_vals: Vec<f64> = g.iter().zip(theta).map(|(y, t)| (y / t).ln()).collect();
        let sup = interior_sup(fs, &ln_vals)?;
        let upper = if sup.trend == Trend::Growing { f64::INFINITY } else { sup.estimate };
        return Ok(SOperatorReport {
            p,
            bound: NormBound::new(sup.estimate, upper, "kernel_l1_exact")?,
            mp_sup: sup.estimate,
            mp_tilde_sup: sup.estimate,
            argmax_x: sup.argmax,
            trend: sup.trend,
            tail_model_used: false,
            tail_fraction: 0.0,
        });
    }
    let prof = mp_profile(fs, mu, theta, p)?;
    let m = interior_sup(fs, &prof.ln_mp)?;
    let mt = interior_sup(fs, &prof.ln_mp_tilde)?;
    let mut trend = combine(m.trend, mt.trend);
    if prof.tail_fraction > MAX_TAIL_FRACTION && trend == Trend::Bounded {
        trend = Trend::Inconclusive;
    }
    let sum = m.estimate + mt.estimate;
    let upper = if trend == Trend::Growing { f64::INFINITY } else { hardy_constant(p) * sum };
    Ok(SOperatorReport {
        p,
        bound: NormBound::new(0.5 * sum, upper, "hardy_sandwich")?,
        mp_sup: m.estimate,
        mp_tilde_sup: mt.estimate,
        argmax_x: if m.estimate >= mt.estimate { m.argmax } else { mt.argmax },
        trend,
        tail_model_used: true,
        tail_fraction: prof.tail_fraction,
    })
}

/// `M_p(x)` at a single point (interpolated from the node profile).
pub fn mp_at(x: f64, fs: &FundamentalSystem, prof: &MpProfile) -> Result<f64> {
    interp_exp(x, fs, &prof.ln_mp)
}

pub fn mp_tilde_at(x: f64, fs: &FundamentalSystem, prof: &MpProfile) -> Result<f64> {
    interp_exp(x, fs, &prof.ln_mp_tilde)
}

fn interp_exp(x: f64, fs: &FundamentalSystem, ln_vals: &[f64]) -> Result<f64> {
    let grid = fs.grid();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    let s = (x - lo) / fs.step();
    let i = (s.floor() as usize).min(grid.len() - 2);
    let r = s - i as f64;
    Ok(((1.0 - r) * ln_vals[i] + r * ln_vals[i + 1]).exp())
}

/// A linear map acting on functions sampled at `nodes()`.
pub trait GridOperator: Sync {
    fn nodes(&self) -> &[f64];
    fn apply(&self, f: &[f64]) -> Vec<f64>;
    /// Adjoint with respect to `∫ f g`, when available (enables power
    /// iteration).
    fn apply_adjoint(&self, _g: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Trapezoid `(∫ |f|^p)^{1/p}` on (possibly non-uniform) nodes.
pub fn grid_lp_norm(nodes: &[f64], f: &[f64], p: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..nodes.len().saturating_sub(1) {
        acc += 0.5 * (nodes[i + 1] - nodes[i]) * (f[i].abs().powf(p) + f[i + 1].abs().powf(p));
    }
    acc.powf(1.0 / p)
}

fn cumulative_from_left(nodes: &[f64], g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for i in 1..g.len() {
        out[i] = out[i - 1] + 0.5 * (nodes[i] - nodes[i - 1]) * (g[i - 1] + g[i]);
    }
    out
}

fn cumulative_from_right(nodes: &[f64], g: &[f64]) -> Vec<f64> {
    let n = g.len();
    let mut out = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] = out[i + 1] + 0.5 * (nodes[i + 1] - nodes[i]) * (g[i] + g[i + 1]);
    }
    out
}

/// Hardy operator with sampled weights, trapezoid cumulative integrals.
#[derive(Debug, Clone)]
pub struct HardyGridOp {
    pub nodes: Vec<f64>,
    pub mu: Vec<f64>,
    pub theta: Vec<f64>,
    pub kind: HardyKind,
}

impl HardyGridOp {
    pub fn from_weights(nodes: Vec<f64>, w: &HardyWeights, kind: HardyKind) -> Result<Self> {
        let mu = nodes.iter().map(|&x| w.mu.eval(x)).collect::<Result<Vec<_>>>()?;
        let theta = nodes.iter().map(|&x| w.theta.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes, mu, theta, kind })
    }

    /// Extremal test function for `H_p(x)`: `θ^{p′−1}` on the side of `x`
    /// that the operator integrates over, zero elsewhere.
    pub fn test_function(&self, x: f64, p: f64) -> Vec<f64> {
        let q = conjugate(p);
        self.nodes
            .iter()
            .zip(&self.theta)
            .map(|(&t, &th)| {
                let inside = match self.kind {
                    HardyKind::Forward => t >= x,
                    HardyKind::Backward => t <= x,
                };
                if inside {
                    th.powf(q - 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

impl GridOperator for HardyGridOp {
    fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = self.theta.iter().zip(f).map(|(t, v)| t * v).collect();
        let c = match self.kind {
            HardyKind::Forward => cumulative_from_right(&self.nodes, &g),
            HardyKind::Backward => cumulative_from_left(&self.nodes, &g),
        };
        self.mu.iter().zip(c).map(|(m, v)| m * v).collect()
    }

    fn apply_adjoint(&self, g: &[f64]) -> Option<Vec<f64>> {
        let h: Vec<f64> = self.mu.iter().zip(g).map(|(m, v)| m * v).collect();
        let c = match self.kind {
            HardyKind::Forward => cumulative_from_left(&self.nodes, &h),
            HardyKind::Backward => cumulative_from_right(&self.nodes, &h),
        };
        Some(self.theta.iter().zip(c).map(|(t, v)| t * v).collect())
    }
}

/// `S f = μ G(f/θ)` on the grid of a fundamental system.
#[derive(Debug, Clone)]
pub struct SGridOp<'a> {
    fs: &'a FundamentalSystem,
    mu: Vec<f64>,
    theta: Vec<f64>,
}

impl<'a> SGridOp<'a> {
    pub fn new(fs: &'a FundamentalSystem, mu: Vec<f64>, theta: Vec<f64>) -> Result<Self> {
        if mu.len() != fs.len() || theta.len() != fs.len() {
            return Err(Error::Config("weight samples do not match the grid".into()));
        }
        Ok(Self { fs, mu, theta })
    }
}

impl GridOperator for SGridOp<'_> {
    fn nodes(&self) -> &[f64] {
        self.fs.grid()
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = f.iter().zip(&self.theta).map(|(v, t)| v / t).collect();
        let y = self.fs.apply_samples(&g);
        y.iter().zip(&self.mu).map(|(v, m)| v * m).collect()
    }

    fn apply_adjoint(&self, g: &[f64]) -> Option<Vec<f64>> {
        let h: Vec<f64> = g.iter().zip(&self.mu).map(|(v, m)| v * m).collect();
        let y = self.fs.apply_samples(&h);
        Some(y.iter().zip(&self.theta).map(|(v, t)| v / t).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalConfig {
    /// Random test functions (sums of a few signed Gaussian bumps).
    pub trials: usize,
    pub seed: u64,
    /// Power-iteration steps from the best few candidates.
    pub power_iters: usize,
}

impl Default for EmpiricalConfig {
    fn default() -> Self {
        Self { trials: 16, seed: 0, power_iters: 25 }
    }
}

fn ratio<O: GridOperator + ?Sized>(op: &O, f: &[f64], p: f64) -> f64 {
    let nf = grid_lp_norm(op.nodes(), f, p);
    if !(nf > 0.0) || !nf.is_finite() {
        return 0.0;
    }
    let r = grid_lp_norm(op.nodes(), &op.apply(f), p) / nf;
    if r.is_finite() {
        r
    } else {
        0.0
    }
}

fn bump(nodes: &[f64], c: f64, w: f64) -> Vec<f64> {
    nodes.iter().map(|&x| (-((x - c) / w).powi(2)).exp()).collect()
}

/// Lower estimate of `‖op‖_{p→p}`: the best ratio `‖op f‖_p/‖f‖_p` over
/// seeded random functions, spikes and broad bumps (centered at 0 and at
/// `centers`), the caller's `extra` functions, and Boyd power iteration
/// from the best candidates when the adjoint is available.
pub fn empirical_operator_norm<O: GridOperator + ?Sized>(
    op: &O,
    p: f64,
    cfg: &EmpiricalConfig,
    centers: &[f64],
    extra: &[Vec<f64>],
) -> f64 {
    let nodes = op.nodes();
    if nodes.len() < 2 {
        return 0.0;
    }
    let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
    let span = hi - lo;
    let h_min = nodes.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut candidates: Vec<Vec<f64>> = extra.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.trials {
        let mut f = vec![0.0; nodes.len()];
        for _ in 0..4 {
            let c = rng.gen_range(lo..hi);
            let w = span * 10f64.powf(rng.gen_range(-3.0..-0.5));
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            for (fi, b) in f.iter_mut().zip(bump(nodes, c, w)) {
                *fi += s * b;
            }
        }
        candidates.push(f);
    }
    let mid = 0.5 * (lo + hi);
    for &c in std::iter::once(&mid).chain(centers) {
        for w in [2.0 * h_min, 0.01 * span, 0.05 * span, 0.15 * span] {
            candidates.push(bump(nodes, c, w.max(h_min)));
        }
    }
    let mut scored: Vec<(f64, usize)> =
        candidates.par_iter().enumerate().map(|(i, f)| (ratio(op, f, p), i)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut best = scored.first().map_or(0.0, |s| s.0);
    if cfg.power_iters == 0 {
        return best;
    }
    let q = conjugate(p);
    for &(_, i) in scored.iter().take(3) {
        let mut x = candidates[i].clone();
        for _ in 0..cfg.power_iters {
            let y = op.apply(&x);
            let dual: Vec<f64> = y.iter().map(|v| v.signum() * v.abs().powf(p - 1.0)).collect();
            let Some(z) = op.apply_adjoint(&dual) else { break };
            x = if q.is_infinite() {
                let k = z.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map_or(0, |(k, _)| k);
                let mut s = vec![0.0; z.len()];
                s[k] = z[k].signum();
                s
            } else {
                z.iter().map(|v| v.signum() * v.abs().powf(q - 1.0)).collect()
            };
            let r = ratio(op, &x, p);
            if !(r > 0.0) {
                break;
            }
            best = best.max(r);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        assert!((hardy_constant(2.0) - 2.0).abs() < 1e-15);
        assert_eq!(hardy_constant(1.0), 1.0);
        assert!(conjugate(1.0).is_infinite());
        assert!((conjugate(3.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn log_cell_matches_direct_integral() {
        let (a0, a1, h) = (0.3f64, 1.7f64, 0.5f64);
        let exact = h * (a1.exp() - a0.exp()) / (a1 - a0);
        assert!((log_cell(a0, a1, h).exp() - exact).abs() < 1e-14 * exact);
        assert!((log_cell(2.0, 2.0, h).exp() - h * 2f64.exp()).abs() < 1e-14);
        assert!((log_add(1.0, 2.0) - (1f64.exp() + 2f64.exp()).ln()).abs() < 1e-15);
    }

    #[test]
    fn norm_bound_rejects_inverted_interval() {
        assert!(NormBound::new(2.0, 1.0, "x").is_err());
        let b = NormBound::new(1.0, 2.0, "x").unwrap();
        assert!(b.contains(0.96, 0.05) && !b.contains(2.2, 0.05));
    }
}
