//! Suprema and infima over ℝ by sampling on geometrically expanding,
//! symmetric grids, with a trend grade over the last few doublings.

use rayon::prelude::*;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    /// Radius of the first level.
    pub r0: f64,
    /// Number of doublings after the first level.
    pub levels: usize,
    /// New abscissae per side per level.
    pub points_per_level: usize,
    /// Doublings inspected when grading the trend.
    pub tail_levels: usize,
    /// Total relative increase over the tail below which the sup is `Bounded`.
    pub stable_tol: f64,
    /// Per-doubling relative increase above which (at every tail level) the
    /// sup is `Growing`.
    pub growth_tol: f64,
    /// Sample negative abscissae too.
    pub symmetric: bool,
    /// Golden-section refinement around the grid argmax.
    pub refine: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            r0: 1.0,
            levels: 20,
            points_per_level: 32,
            tail_levels: 4,
            stable_tol: 0.05,
            growth_tol: 0.02,
            symmetric: true,
            refine: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Bounded,
    Growing,
    Inconclusive,
}

impl Trend {
    pub fn as_str(self) -> &'static str {
        match self {
            Trend::Bounded => "bounded",
            Trend::Growing => "growing",
            Trend::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub estimate: f64,
    pub argmax: f64,
    pub trend: Trend,
    /// Running maximum after each level.
    pub level_values: Vec<f64>,
    /// Radius of each level.
    pub radii: Vec<f64>,
}

impl GridConfig {
    /// Abscissae of each level, in deterministic order.
    pub fn level_points(&self) -> Vec<Vec<f64>> {
        let m = self.points_per_level.max(1);
        let mut out = Vec::with_capacity(self.levels + 1);
        let mut first = vec![0.0];
        for j in 1..=m {
            let x = self.r0 * j as f64 / m as f64;
            first.push(x);
            if self.symmetric {
                first.push(-x);
            }
        }
        out.push(first);
        let mut inner = self.r0;
        for _ in 0..self.levels {
            let outer = 2.0 * inner;
            let mut pts = Vec::with_capacity(2 * m);
            for j in 1..=m {
                let x = inner + (outer - inner) * j as f64 / m as f64;
                pts.push(x);
                if self.symmetric {
                    pts.push(-x);
                }
            }
            out.push(pts);
            inner = outer;
        }
        out
    }
}

pub(crate) fn grade_trend(values: &[f64], cfg: &GridConfig) -> Trend {
    let k = cfg.tail_levels.max(1);
    if values.len() < k + 1 {
        return Trend::Inconclusive;
    }
    let tail = &values[values.len() - k - 1..];
    let mut total = 0.0;
    let mut all_growing = true;
    for w in tail.windows(2) {
        let base = w[0].abs().max(1e-300);
        let inc = (w[1] - w[0]) / base;
        total += inc;
        if inc < cfg.growth_tol {
            all_growing = false;
        }
    }
    if all_growing {
        Trend::Growing
    } else if total <= cfg.stable_tol {
        Trend::Bounded
    } else {
        Trend::Inconclusive
    }
}

/// Grades `values → 0` from per-shell maxima: pass when the last
/// `tail_levels + 1` values are nonincreasing (up to `0.1·tol`) and the last
/// is at most `tol`; fail when the last exceeds `tol` and is no smaller than
/// the first of that tail.
pub fn grade_vanishing(values: &[f64], tail_levels: usize, tol: f64) -> crate::report::Grade {
    use crate::report::Grade;
    if values.len() < 2 {
        return Grade::Inconclusive;
    }
    let k = tail_levels.max(1).min(values.len() - 1);
    let tail = &values[values.len() - k - 1..];
    let (first, last) = (tail[0], tail[tail.len() - 1]);
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] + 0.1 * tol);
    if decreasing && last <= tol {
        Grade::Pass
    } else if last > tol && last >= first {
        Grade::Fail
    } else {
        Grade::Inconclusive
    }
}

fn golden_max<F>(f: &F, mut a: f64, mut b: f64, iters: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

pub fn sup_on_expanding_grid<F>(f: &F, cfg: &GridConfig) -> Result<SupResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let levels = cfg.level_points();
    let mut all: Vec<(f64, f64)> = Vec::new();
    let mut level_values = Vec::with_capacity(levels.len());
    let mut radii = Vec::with_capacity(levels.len());
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut radius = cfg.r0;
    for (k, pts) in levels.iter().enumerate() {
        if k > 0 {
            radius *= 2.0;
        }
        let vals: Vec<Result<f64>> = pts.par_iter().map(|&x| f(x)).collect();
        for (&x, v) in pts.iter().zip(vals) {
            let v = v?;
            all.push((x, v));
            if v > best.1 {
                best = (x, v);
            }
        }
        level_values.push(best.1);
        radii.push(radius);
    }
    let trend = grade_trend(&level_values, cfg);
    if cfg.refine {
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        let i = all.iter().position(|p| p.0 == best.0).unwrap_or(0);
        let lo = all[i.saturating_sub(1)].0;
        let hi = all[(i + 1).min(all.len() - 1)].0;
        if hi > lo {
            let (x, v) = golden_max(f, lo, hi, 60)?;
            if v > best.1 {
                best = (x, v);
                if let Some(last) = level_values.last_mut() {
                    *last = v;
                }
            }
        }
    }
    Ok(SupResult { estimate: best.1, argmax: best.0, trend, level_values, radii })
}

/// Infimum; `trend = Growing` means the running infimum keeps decreasing
/// across doublings (the infimum is indicated to vanish / run off).
pub fn inf_on_expanding_grid<F>(f: &F, cfg: &GridConfig) -> Result<SupResult>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let neg = |x: f64| f(x).map(|v| -v);
    let mut r = sup_on_expanding_grid(&neg, cfg)?;
    r.estimate = -r.estimate;
    for v in r.level_values.iter_mut() {
        *v = -*v;
    }
    // grade on the infimum itself: relative decrease per doubling
    let inv: Vec<f64> = r.level_values.iter().map(|&m| 1.0 / m.max(1e-300)).collect();
    r.trend = grade_trend(&inv, cfg);
    Ok(r)
}
