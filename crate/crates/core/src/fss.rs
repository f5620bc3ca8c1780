//! Fundamental system `{u, v}` of `z'' = q z`, the Green kernel
//! `G(x, t) = u(max) v(min)` and the Green operator on a uniform grid.
//!
//! Both solutions are integrated in log form: with `ℓ = ln z` and
//! `w = z'/z` the equation becomes the Riccati system `ℓ' = w`,
//! `w' = q − w²`, which never overflows. `v` is integrated forward from
//! `−X` and `u` backward from `X`, each in its stable (growing) direction,
//! starting from the slopes `±√q*(∓X)`. The pair is then shifted so that
//! `v'u − u'v = 1` at the origin.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::localscale::LocalScale;
use crate::realline::RealFunction;
use crate::report::{csv_table, num, Obj};

const RESIDUAL_BASE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FssConfig {
    /// Truncation radius `X`; the grid covers `[−X, X]`.
    pub x_max: f64,
    /// Target step; the actual step divides `2X` into an even number of cells.
    pub step: f64,
    /// Largest accepted `|v'u − u'v − 1|`.
    pub tol_w: f64,
}

impl Default for FssConfig {
    fn default() -> Self {
        Self { x_max: 40.0, step: 1e-3, tol_w: 1e-6 }
    }
}

impl FssConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.x_max > 0.0 && self.step > 0.0 && self.step < self.x_max && self.tol_w > 0.0) {
            return Err(Error::Config(format!("invalid fss config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    grid: Vec<f64>,
    h: f64,
    lu: Vec<f64>,
    wu: Vec<f64>,
    lv: Vec<f64>,
    wv: Vec<f64>,
    q_nodes: Vec<f64>,
    x0: f64,
    wronskian_residual: f64,
    reduced_confidence: bool,
}

fn riccati(q: f64, w: f64) -> f64 {
    q - w * w
}

/// One RK4 step of `(ℓ, w)` with signed step `h`; `q0, qm, q1` are `q` at
/// the start, midpoint and end of the step.
fn rk4(l: f64, w: f64, h: f64, q0: f64, qm: f64, q1: f64) -> (f64, f64) {
    let (k1l, k1w) = (w, riccati(q0, w));
    let w2 = w + 0.5 * h * k1w;
    let (k2l, k2w) = (w2, riccati(qm, w2));
    let w3 = w + 0.5 * h * k2w;
    let (k3l, k3w) = (w3, riccati(qm, w3));
    let w4 = w + h * k3w;
    let (k4l, k4w) = (w4, riccati(q1, w4));
    (
        l + h / 6.0 * (k1l + 2.0 * k2l + 2.0 * k3l + k4l),
        w + h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w),
    )
}

/// Cubic Hermite value at fraction `s` of a cell of width `h`.
fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

/// Builds the fundamental system of `z'' = q z` for the potential behind
/// `scale` on `[−X, X]`.
pub fn build_fss(scale: &LocalScale, cfg: &FssConfig) -> Result<FundamentalSystem> {
    cfg.validate()?;
    let x_max = cfg.x_max;
    let d0 = scale.d(0.0)?;
    if x_max < 10.0 * d0 {
        return Err(Error::Precondition(format!("truncation radius {x_max} is below 10·d(0) = {}", 10.0 * d0)));
    }
    let mut n = (2.0 * x_max / cfg.step).ceil() as usize;
    if n % 2 == 1 {
        n += 1;
    }
    let h = 2.0 * x_max / n as f64;
    let grid: Vec<f64> = (0..=n).map(|i| if i == n / 2 { 0.0 } else { -x_max + i as f64 * h }).collect();
    let pot = scale.potential();
    let q_nodes = grid.par_iter().map(|&x| pot.eval(x)).collect::<Result<Vec<_>>>()?;
    let q_mid = grid[..n].par_iter().map(|&x| pot.eval(x + 0.5 * h)).collect::<Result<Vec<_>>>()?;

    let slope_left = scale.q_star(-x_max)?.sqrt();
    let slope_right = scale.q_star(x_max)?.sqrt();
    let (mut lv, mut wv) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    wv[0] = slope_left;
    for i in 0..n {
        let (l, w) = rk4(lv[i], wv[i], h, q_nodes[i], q_mid[i], q_nodes[i + 1]);
        lv[i + 1] = l;
        wv[i + 1] = w;
    }
    let (mut lu, mut wu) = (vec![0.0; n + 1], vec![0.0; n + 1]);
    wu[n] = -slope_right;
    for i in (0..n).rev() {
        let (l, w) = rk4(lu[i + 1], wu[i + 1], -h, q_nodes[i + 1], q_mid[i], q_nodes[i]);
        lu[i] = l;
        wu[i] = w;
    }
    if lv.iter().chain(&lu).chain(&wv).chain(&wu).any(|v| !v.is_finite()) {
        return Err(Error::Fss("non-finite state during integration; reduce the step".into()));
    }
    if let Some(i) = (0..=n).find(|&i| wu[i] >= 0.0 || wv[i] <= 0.0) {
        return Err(Error::Fss(format!("monotonicity lost at x = {}: u'/u = {}, v'/v = {}", grid[i], wu[i], wv[i])));
    }

    // shift ln u and ln v by the same constant so that W(0) = 1
    let m = n / 2;
    let ln_w0 = lu[m] + lv[m] + (wv[m] - wu[m]).ln();
    let shift = -0.5 * ln_w0;
    lu.iter_mut().for_each(|l| *l += shift);
    lv.iter_mut().for_each(|l| *l += shift);

    let wronskian_residual = (0..=n)
        .map(|i| ((lu[i] + lv[i]).exp() * (wv[i] - wu[i]) - 1.0).abs())
        .fold(0.0, f64::max);
    if wronskian_residual > cfg.tol_w {
        return Err(Error::Fss(format!(
            "Wronskian residual {wronskian_residual:e} exceeds {:e}",
            cfg.tol_w
        )));
    }

    // potentials decaying faster than x^{-2} make the truncated boundary
    // slope a poor proxy for the principal solution
    let reduced_confidence = q_nodes[0] * x_max * x_max < 1.0 || q_nodes[n] * x_max * x_max < 1.0;

    let mut fs = FundamentalSystem {
        grid,
        h,
        lu,
        wu,
        lv,
        wv,
        q_nodes,
        x0: f64::NAN,
        wronskian_residual,
        reduced_confidence,
    };
    fs.x0 = fs.locate_crossing()?;
    Ok(fs)
}

impl FundamentalSystem {
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn x_max(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn wronskian_residual(&self) -> f64 {
        self.wronskian_residual
    }

    pub fn reduced_confidence(&self) -> bool {
        self.reduced_confidence
    }

    pub fn ln_u_nodes(&self) -> &[f64] {
        &self.lu
    }

    pub fn ln_v_nodes(&self) -> &[f64] {
        &self.lv
    }

    /// `u'/u` at the nodes.
    pub fn log_slope_u(&self) -> &[f64] {
        &self.wu
    }

    pub fn log_slope_v(&self) -> &[f64] {
        &self.wv
    }

    pub fn q_nodes(&self) -> &[f64] {
        &self.q_nodes
    }

    pub fn u_node(&self, i: usize) -> f64 {
        self.lu[i].exp()
    }

    pub fn v_node(&self, i: usize) -> f64 {
        self.lv[i].exp()
    }

    pub fn rho_node(&self, i: usize) -> f64 {
        (self.lu[i] + self.lv[i]).exp()
    }

    fn cell(&self, x: f64) -> Result<(usize, f64)> {
        let (lo, hi) = (self.grid[0], self.x_max());
        if !(x >= lo && x <= hi) {
            return Err(Error::OutOfRange { x, lo, hi });
        }
        let n = self.grid.len() - 1;
        let i = (((x - lo) / self.h).floor() as usize).min(n - 1);
        let s = ((x - self.grid[i]) / self.h).clamp(0.0, 1.0);
        Ok((i, s))
    }

    fn interp_log(&self, l: &[f64], w: &[f64], x: f64) -> Result<f64> {
        let (i, s) = self.cell(x)?;
        Ok(hermite(l[i], w[i], l[i + 1], w[i + 1], self.h, s))
    }

    fn interp_slope(&self, w: &[f64], x: f64) -> Result<f64> {
        let (i, s) = self.cell(x)?;
        let d0 = riccati(self.q_nodes[i], w[i]);
        let d1 = riccati(self.q_nodes[i + 1], w[i + 1]);
        Ok(hermite(w[i], d0, w[i + 1], d1, self.h, s))
    }

    pub fn ln_u(&self, x: f64) -> Result<f64> {
        self.interp_log(&self.lu, &self.wu, x)
    }

    pub fn ln_v(&self, x: f64) -> Result<f64> {
        self.interp_log(&self.lv, &self.wv, x)
    }

    pub fn u(&self, x: f64) -> Result<f64> {
        Ok(self.ln_u(x)?.exp())
    }

    pub fn v(&self, x: f64) -> Result<f64> {
        Ok(self.ln_v(x)?.exp())
    }

    pub fn u_prime(&self, x: f64) -> Result<f64> {
        Ok(self.u(x)? * self.interp_slope(&self.wu, x)?)
    }

    pub fn v_prime(&self, x: f64) -> Result<f64> {
        Ok(self.v(x)? * self.interp_slope(&self.wv, x)?)
    }

    pub fn rho(&self, x: f64) -> Result<f64> {
        Ok((self.ln_u(x)? + self.ln_v(x)?).exp())
    }

    /// `G(x, t) = u(max(x, t)) v(min(x, t))`.
    pub fn green_kernel(&self, x: f64, t: f64) -> Result<f64> {
        let (lo, hi) = if x <= t { (x, t) } else { (t, x) };
        Ok((self.ln_u(hi)? + self.ln_v(lo)?).exp())
    }

    fn locate_crossing(&self) -> Result<f64> {
        let n = self.grid.len() - 1;
        let gap = |i: usize| self.lv[i] - self.lu[i];
        if gap(0) > 0.0 || gap(n) < 0.0 {
            return Err(Error::Fss("u = v has no crossing on the grid".into()));
        }
        let i = (0..n).find(|&i| gap(i) <= 0.0 && gap(i + 1) >= 0.0).expect("sign change exists");
        let f = |s: f64| {
            hermite(self.lv[i], self.wv[i], self.lv[i + 1], self.wv[i + 1], self.h, s)
                - hermite(self.lu[i], self.wu[i], self.lu[i + 1], self.wu[i + 1], self.h, s)
        };
        let (mut a, mut b) = (0.0, 1.0);
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if f(m) < 0.0 {
                a = m
            } else {
                b = m
            }
        }
        Ok(self.grid[i] + 0.5 * (a + b) * self.h)
    }

    /// Indices of nodes in `[−X/2, X/2]`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        let n = self.grid.len() - 1;
        n / 4..3 * n / 4 + 1
    }

    /// Checks the sign, monotonicity, Wronskian and `|ρ'| < 1` properties.
    pub fn structural_checks(&self, tol: f64) -> StructuralReport {
        let n = self.grid.len() - 1;
        let signs_ok = (0..=n).all(|i| self.wu[i] < 0.0 && self.wv[i] > 0.0);
        let ratio_decreasing = (0..n).all(|i| self.lu[i + 1] - self.lv[i + 1] < self.lu[i] - self.lv[i]);
        let left_edge_ratio = (self.lv[0] - self.lu[0]).exp();
        let right_edge_ratio = (self.lu[n] - self.lv[n]).exp();
        let interior = self.interior();
        let rho_prime_max = interior
            .clone()
            .filter(|&i| i > 0 && i < n)
            .map(|i| ((self.rho_node(i + 1) - self.rho_node(i - 1)) / (2.0 * self.h)).abs())
            .fold(0.0, f64::max);
        StructuralReport {
            signs_ok,
            ratio_decreasing,
            left_edge_ratio,
            right_edge_ratio,
            wronskian_residual: self.wronskian_residual,
            rho_prime_max,
            ok: signs_ok && ratio_decreasing && rho_prime_max < 1.0 + tol && left_edge_ratio < 1.0 && right_edge_ratio < 1.0,
        }
    }

    /// Cumulative `∫_{x0}^{x_i} 1/ρ` at the nodes, trapezoid with the
    /// Hermite end correction (fourth order).
    fn inverse_rho_integral(&self) -> Result<Vec<f64>> {
        let n = self.grid.len() - 1;
        let g: Vec<f64> = (0..=n).map(|i| 1.0 / self.rho_node(i)).collect();
        let dg: Vec<f64> = (0..=n).map(|i| -(self.wu[i] + self.wv[i]) * g[i]).collect();
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            cum[i + 1] = cum[i] + 0.5 * self.h * (g[i] + g[i + 1]) + self.h * self.h / 12.0 * (dg[i] - dg[i + 1]);
        }
        // re-anchor at x0
        let (i, s) = self.cell(self.x0)?;
        let hs = s * self.h;
        let g0 = (1.0 / self.rho(self.x0)?).max(0.0);
        let at_x0 = cum[i] + 0.5 * hs * (g[i] + g0);
        cum.iter_mut().for_each(|c| *c -= at_x0);
        Ok(cum)
    }

    /// Reconstructs `u`, `v` from `ρ` and `x0` and compares with the
    /// integrated solutions on the interior; also compares the kernel
    /// representation with `u(max) v(min)` at the probe pairs.
    pub fn davies_harrell_check(&self, probes: &[f64]) -> Result<DaviesHarrellReport> {
        let cum = self.inverse_rho_integral()?;
        let mut max_dev_u = 0.0f64;
        let mut max_dev_v = 0.0f64;
        for i in self.interior() {
            let half_ln_rho = 0.5 * (self.lu[i] + self.lv[i]);
            let du = (half_ln_rho - 0.5 * cum[i]) - self.lu[i];
            let dv = (half_ln_rho + 0.5 * cum[i]) - self.lv[i];
            max_dev_u = max_dev_u.max(du.exp_m1().abs());
            max_dev_v = max_dev_v.max(dv.exp_m1().abs());
        }
        let at = |x: f64| -> Result<f64> {
            let (i, s) = self.cell(x)?;
            Ok(cum[i] + s * (cum[i + 1] - cum[i]))
        };
        let mut max_dev_kernel = 0.0f64;
        let mut diagonal_dev = 0.0f64;
        for &x in probes {
            for &t in probes {
                let rep = (self.rho(x)? * self.rho(t)?).sqrt() * (-0.5 * (at(t)? - at(x)?).abs()).exp();
                let direct = self.green_kernel(x, t)?;
                max_dev_kernel = max_dev_kernel.max((rep / direct - 1.0).abs());
            }
            diagonal_dev = diagonal_dev.max((self.green_kernel(x, x)? / self.rho(x)? - 1.0).abs());
        }
        Ok(DaviesHarrellReport { max_dev_u, max_dev_v, max_dev_kernel, diagonal_dev })
    }

    /// `∫ e^{ℓ(t) − ℓ(anchor)} f(t) dt` over cells in both directions,
    /// giving `a_i = ∫_{−X}^{x_i} v f / v(x_i)` and
    /// `b_i = ∫_{x_i}^{X} u f / u(x_i)`.
    fn sweep(&self, f_nodes: &[f64], f_mid: Option<&[f64]>) -> (Vec<f64>, Vec<f64>) {
        let n = self.grid.len() - 1;
        let h = self.h;
        let mid = |l: &[f64], w: &[f64], i: usize| hermite(l[i], w[i], l[i + 1], w[i + 1], h, 0.5);
        let mut a = vec![0.0; n + 1];
        for i in 0..n {
            let r = (self.lv[i] - self.lv[i + 1]).exp();
            let cell = match f_mid {
                Some(fm) => {
                    let rm = (mid(&self.lv, &self.wv, i) - self.lv[i + 1]).exp();
                    h / 6.0 * (r * f_nodes[i] + 4.0 * rm * fm[i] + f_nodes[i + 1])
                }
                None => 0.5 * h * (r * f_nodes[i] + f_nodes[i + 1]),
            };
            a[i + 1] = a[i] * r + cell;
        }
        let mut b = vec![0.0; n + 1];
        for i in (0..n).rev() {
            let r = (self.lu[i + 1] - self.lu[i]).exp();
            let cell = match f_mid {
                Some(fm) => {
                    let rm = (mid(&self.lu, &self.wu, i) - self.lu[i]).exp();
                    h / 6.0 * (f_nodes[i] + 4.0 * rm * fm[i] + r * f_nodes[i + 1])
                }
                None => 0.5 * h * (f_nodes[i] + r * f_nodes[i + 1]),
            };
            b[i] = b[i + 1] * r + cell;
        }
        (a, b)
    }

    /// `(G f)` at the nodes for samples of `f` (trapezoid cells).
    pub fn apply_samples(&self, f_nodes: &[f64]) -> Vec<f64> {
        let (a, b) = self.sweep(f_nodes, None);
        (0..a.len()).map(|i| self.rho_node(i) * (a[i] + b[i])).collect()
    }

    /// Solves `−y'' + q y = f` on the grid as `y = G f` (Simpson cells).
    pub fn apply_green(&self, f: &RealFunction) -> Result<GreenSolution> {
        let n = self.grid.len() - 1;
        let f_nodes = self.grid.par_iter().map(|&x| f.eval(x)).collect::<Result<Vec<_>>>()?;
        let f_mid = self.grid[..n].par_iter().map(|&x| f.eval(x + 0.5 * self.h)).collect::<Result<Vec<_>>>()?;
        let (a, b) = self.sweep(&f_nodes, Some(&f_mid));
        let y: Vec<f64> = (0..=n).map(|i| self.rho_node(i) * (a[i] + b[i])).collect();
        let yp: Vec<f64> = (0..=n).map(|i| self.rho_node(i) * (self.wu[i] * b[i] + self.wv[i] * a[i])).collect();
        let mut residual_sup = 0.0f64;
        let mut f_sup = 0.0f64;
        let mut fd_error = 0.0f64;
        let h2 = self.h * self.h;
        for i in self.interior() {
            if i < 2 || i + 2 > n {
                continue;
            }
            let ypp = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / h2;
            residual_sup = residual_sup.max((-ypp + self.q_nodes[i] * y[i] - f_nodes[i]).abs());
            f_sup = f_sup.max(f_nodes[i].abs());
            // truncation error of the second difference itself, h²/12 · y''''
            let d4 = (y[i + 2] - 4.0 * y[i + 1] + 6.0 * y[i] - 4.0 * y[i - 1] + y[i - 2]) / (h2 * h2);
            fd_error = fd_error.max(d4.abs() / 12.0 * h2);
        }
        let residual_tol = RESIDUAL_BASE_TOL * (1.0 + f_sup) + 2.0 * fd_error;
        Ok(GreenSolution { y, yp, f_nodes, f_mid, residual_sup, residual_tol, f_sup, norms: None })
    }

    /// `(∫ |w g|^p)^{1/p}` over the grid (Simpson cells) for `g` given at
    /// nodes and midpoints.
    pub fn weighted_norm(&self, g_nodes: &[f64], g_mid: &[f64], weight: &RealFunction, p: f64) -> Result<f64> {
        let n = self.grid.len() - 1;
        let w_nodes = self.grid.par_iter().map(|&x| weight.eval(x)).collect::<Result<Vec<_>>>()?;
        let w_mid = self.grid[..n].par_iter().map(|&x| weight.eval(x + 0.5 * self.h)).collect::<Result<Vec<_>>>()?;
        let pw = |w: f64, g: f64| (w * g).abs().powf(p);
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.h / 6.0
                * (pw(w_nodes[i], g_nodes[i]) + 4.0 * pw(w_mid[i], g_mid[i]) + pw(w_nodes[i + 1], g_nodes[i + 1]));
        }
        Ok(acc.powf(1.0 / p))
    }

    /// Midpoint values of a Green solution, from the Hermite data of `y`.
    fn y_mid(&self, sol: &GreenSolution) -> Vec<f64> {
        let n = self.grid.len() - 1;
        (0..n)
            .map(|i| hermite(sol.y[i], sol.yp[i], sol.y[i + 1], sol.yp[i + 1], self.h, 0.5))
            .collect()
    }

    /// Attaches `‖y‖_{p,μ}`, `‖f‖_{p,θ}` on the truncated grid. Fails with
    /// `DivergentNorm` when `∫|θ f|^p` over the line is graded divergent.
    pub fn attach_norms(
        &self,
        sol: &mut GreenSolution,
        f: &RealFunction,
        p: f64,
        mu: &RealFunction,
        theta: &RealFunction,
        cfg: &crate::realline::QuadratureConfig,
    ) -> Result<()> {
        let integrand = |t: f64| Ok((theta.eval(t)? * f.eval(t)?).abs().powf(p));
        let tail = crate::realline::integrate_improper(&integrand, crate::realline::Side::Both, cfg)?;
        if tail.verdict == crate::realline::Verdict::Divergent {
            return Err(Error::DivergentNorm(format!("‖f‖_(p,θ) diverges for f = {f}")));
        }
        let y_norm = self.weighted_norm(&sol.y, &self.y_mid(sol), mu, p)?;
        let f_norm = self.weighted_norm(&sol.f_nodes, &sol.f_mid, theta, p)?;
        sol.norms = Some(Norms { p, y_norm, f_norm, ratio: y_norm / f_norm });
        Ok(())
    }

    /// Ratios `u(t)/u(x)`, `v(t)/v(x)`, `ρ(t)/ρ(x)` within `[1/c, c]` and
    /// `d(t)/d(x)` within `[1/4, 4]` for `|t − x| ≤ d(x)`.
    pub fn local_equivalence_check(
        &self,
        scale: &LocalScale,
        probes: &[f64],
        c: f64,
        samples: usize,
    ) -> Result<LocalEquivalenceReport> {
        let mut worst = 1.0f64;
        let mut worst_d = 1.0f64;
        let mut violations = Vec::new();
        let spread = |r: f64| r.max(1.0 / r);
        for &x in probes {
            let d = scale.d(x)?;
            let (ux, vx, rx) = (self.u(x)?, self.v(x)?, self.rho(x)?);
            let m = samples.max(2);
            for j in 0..=m {
                let t = x - d + 2.0 * d * j as f64 / m as f64;
                let ratios = [self.u(t)? / ux, self.v(t)? / vx, self.rho(t)? / rx];
                let s = ratios.iter().map(|&r| spread(r)).fold(1.0, f64::max);
                worst = worst.max(s);
                let sd = spread(scale.d(t)? / d);
                worst_d = worst_d.max(sd);
                if s > c || sd > 4.0 {
                    violations.push((x, t));
                }
            }
        }
        Ok(LocalEquivalenceReport { c, worst_ratio: worst, worst_d_ratio: worst_d, violations })
    }

    /// Rows `(x, u, v, ρ)` at every `stride`-th node.
    pub fn profile_rows(&self, stride: usize) -> Vec<Vec<f64>> {
        (0..self.grid.len())
            .step_by(stride.max(1))
            .map(|i| vec![self.grid[i], self.u_node(i), self.v_node(i), self.rho_node(i)])
            .collect()
    }

    pub fn summary_json(&self) -> serde_json::Value {
        Obj::new()
            .f("x0", self.x0)
            .f("x_max", self.x_max())
            .f("step", self.h)
            .u("nodes", self.grid.len() as u64)
            .f("wronskian_residual", self.wronskian_residual)
            .b("reduced_confidence", self.reduced_confidence)
            .build()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuralReport {
    pub signs_ok: bool,
    pub ratio_decreasing: bool,
    /// `v/u` at `−X`.
    pub left_edge_ratio: f64,
    /// `u/v` at `X`.
    pub right_edge_ratio: f64,
    pub wronskian_residual: f64,
    pub rho_prime_max: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DaviesHarrellReport {
    pub max_dev_u: f64,
    pub max_dev_v: f64,
    pub max_dev_kernel: f64,
    /// `max |G(x,x)/ρ(x) − 1|` over the probes.
    pub diagonal_dev: f64,
}

impl DaviesHarrellReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_dev_u.max(self.max_dev_v).max(self.max_dev_kernel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub p: f64,
    pub y_norm: f64,
    pub f_norm: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenSolution {
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
    f_nodes: Vec<f64>,
    f_mid: Vec<f64>,
    /// `sup |−y'' + q y − f|` on the interior nodes (second differences).
    pub residual_sup: f64,
    /// Accepted residual: a base tolerance scaled by `1 + sup|f|` plus twice
    /// the estimated finite-difference error `h²/12 · sup|y''''|`.
    pub residual_tol: f64,
    /// `sup |f|` on the interior nodes.
    pub f_sup: f64,
    pub norms: Option<Norms>,
}

impl GreenSolution {
    pub fn residual_ok(&self) -> bool {
        self.residual_sup <= self.residual_tol
    }

    pub fn f_nodes(&self) -> &[f64] {
        &self.f_nodes
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let norms = match &self.norms {
            Some(n) => Obj::new().f("p", n.p).f("y_norm", n.y_norm).f("f_norm", n.f_norm).f("ratio", n.ratio).build(),
            None => serde_json::Value::Null,
        };
        Obj::new()
            .f("residual_sup", self.residual_sup)
            .f("residual_tol", self.residual_tol)
            .b("residual_ok", self.residual_ok())
            .f("f_sup", self.f_sup)
            .v("norms", norms)
            .build()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalEquivalenceReport {
    pub c: f64,
    pub worst_ratio: f64,
    pub worst_d_ratio: f64,
    /// Witnesses `(x, t)`.
    pub violations: Vec<(f64, f64)>,
}

pub const SOLUTION_COLUMNS: [&str; 5] = ["x", "u", "v", "rho", "y"];

/// CSV `x,u,v,rho,y` at every `stride`-th node.
pub fn solution_csv(fs: &FundamentalSystem, sol: Option<&GreenSolution>, stride: usize) -> String {
    let rows: Vec<Vec<f64>> = (0..fs.len())
        .step_by(stride.max(1))
        .map(|i| {
            let y = sol.map_or(f64::NAN, |s| s.y[i]);
            vec![fs.grid[i], fs.u_node(i), fs.v_node(i), fs.rho_node(i), y]
        })
        .collect();
    csv_table(&SOLUTION_COLUMNS, &rows)
}

pub fn fss_json(fs: &FundamentalSystem, sol: Option<&GreenSolution>) -> serde_json::Value {
    let mut o = Obj::new().v("fss", fs.summary_json());
    if let Some(s) = sol {
        o = o.v("solution", s.summary_json());
    }
    o.f("x0", fs.x0()).v("wronskian_residual", num(fs.wronskian_residual())).build()
}
