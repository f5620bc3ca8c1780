//! Command-line front end: config ingestion, subcommand dispatch and
//! report/profile emission.
//!
//! Exit codes: 0 admissible-indicated (or success), 1 not-admissible-indicated
//! (or a failed example6 assertion), 2 inconclusive, 3 error.

pub mod config;

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::admissibility::{
    default_probes, lp_solvability, realize, stability_probe, stability_samples, verdict, AdmissibilityConfig,
    AdmissibilityReport, Decision, Problem, Weight,
};
use crate::error::Error;
use crate::fss::{build_fss, fss_json, solution_csv};
use crate::localscale::{KappaConfig, LocalScale, LocalScaleConfig};
use crate::presets::Example6;
use crate::realline::{sup_on_expanding_grid, GridConfig, RealFunction};
use crate::report::{csv_table, num, nums, to_json_string, Grade, Obj};

pub use config::RunConfig;

pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "sturm-admissible", version, about = "Weighted admissibility diagnostics for -y'' + q y = f on the real line")]
pub struct Cli {
    /// Flat key = value config file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory for JSON and CSV files.
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Extra probe abscissae, comma separated.
    #[arg(long, global = true, value_name = "LIST", allow_hyphen_values = true)]
    pub probes: Option<String>,
    /// Seed for randomized test functions.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Write the JSON report only, no CSV profiles.
    #[arg(long, global = true)]
    pub json_only: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Local scale profile: d, d-hat, q*, nu, kappa1, kappa2.
    Scale,
    /// Fundamental system u, v, rho and its structural checks.
    Fss,
    /// Solves -y'' + q y = f by the Green operator and reports weighted norms.
    Solve,
    /// Full admissibility pipeline with graded verdict.
    Verdict,
    /// Both assertions of the bundled oscillating example, end to end.
    Example6,
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    if cli.command == Command::Example6 {
        let mut cfg = match &cli.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::preset("example6")?,
        };
        apply_flags(cli, &mut cfg)?;
        return cmd_example6(cli, &cfg);
    }
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config PATH is required".into()))?;
    let mut cfg = RunConfig::from_file(path)?;
    apply_flags(cli, &mut cfg)?;
    match cli.command {
        Command::Scale => cmd_scale(cli, &cfg),
        Command::Fss => cmd_fss(cli, &cfg),
        Command::Solve => cmd_solve(cli, &cfg),
        Command::Verdict => cmd_verdict(cli, &cfg),
        Command::Example6 => unreachable!(),
    }
}

fn apply_flags(cli: &Cli, cfg: &mut RunConfig) -> CliResult<()> {
    if let Some(list) = &cli.probes {
        cfg.probes.extend(config::parse_list(list)?);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, text: &str) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
}

fn emit(cli: &Cli, cfg: &RunConfig, default_report: &str, json: &Value, csv: Option<String>, default_csv: &str) -> CliResult<()> {
    let text = to_json_string(json);
    write_file(&cli.out, cfg.report.as_deref().unwrap_or(default_report), &text)?;
    if let (Some(csv), false) = (csv, cli.json_only) {
        write_file(&cli.out, cfg.profile.as_deref().unwrap_or(default_csv), &csv)?;
    }
    print!("{text}");
    Ok(())
}

fn local_scale(cfg: &RunConfig) -> CliResult<LocalScale> {
    Ok(LocalScale::new(Arc::new(cfg.potential()?), LocalScaleConfig::default()))
}

fn config_json(cfg: &RunConfig) -> Value {
    let opt = |s: &Option<String>| s.clone().map_or(Value::Null, Value::String);
    Obj::new()
        .v("preset", opt(&cfg.preset))
        .v("q", opt(&cfg.q))
        .v("q1", opt(&cfg.q1))
        .v("q2", opt(&cfg.q2))
        .v("cutoff", cfg.cutoff.map_or(Value::Null, num))
        .s("mu", cfg.mu.clone())
        .s("theta", cfg.theta.clone())
        .v("f", opt(&cfg.f))
        .f("p", cfg.p)
        .f("x_max", cfg.fss.x_max)
        .f("step", cfg.fss.step)
        .u("seed", cfg.seed)
        .build()
}

pub const SCALE_COLUMNS: [&str; 7] = ["x", "d", "d_hat", "q_star", "nu", "kappa1", "kappa2"];

/// Profile at `0, ±2^k` (k ≤ 20) and the user probes; κ columns are `nan`
/// unless the potential is given as `q1 + q2`.
fn cmd_scale(cli: &Cli, cfg: &RunConfig) -> CliResult<i32> {
    use rayon::prelude::*;
    let scale = local_scale(cfg)?;
    let xs = default_probes(&cfg.probes);
    let kcfg = KappaConfig::default();
    let dec = scale.potential().decomposition();
    let rows = xs
        .par_iter()
        .map(|&x| -> crate::error::Result<Vec<f64>> {
            let (k1, k2) = match &dec {
                Some(dec) => (scale.kappa1(x, dec, &kcfg)?, scale.kappa2(x, dec, &kcfg)?),
                None => (f64::NAN, f64::NAN),
            };
            Ok(vec![x, scale.d(x)?, scale.d_hat(x)?, scale.q_star(x)?, scale.nu(x)?, k1, k2])
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    let class_h = scale.class_h_check(&Default::default())?;
    let grid = GridConfig { levels: cfg.grid_levels, points_per_level: 16, ..Default::default() };
    let d_sup = sup_on_expanding_grid(&|x: f64| scale.d(x), &grid)?;
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<_>>();
    let json = Obj::new()
        .v("config", config_json(cfg))
        .f("d_at_0", scale.d(0.0)?)
        .f("d_hat_at_0", scale.d_hat(0.0)?)
        .f("d_sup", d_sup.estimate)
        .s("d_sup_trend", d_sup.trend.as_str())
        .s("in_H", class_h.grade.as_str())
        .v("x", nums(&col(0)))
        .v("d", nums(&col(1)))
        .v("d_hat", nums(&col(2)))
        .build();
    emit(cli, cfg, "scale.json", &json, Some(csv_table(&SCALE_COLUMNS, &rows)), "scale.csv")?;
    Ok(0)
}

fn cmd_fss(cli: &Cli, cfg: &RunConfig) -> CliResult<i32> {
    let scale = local_scale(cfg)?;
    let fs = build_fss(&scale, &cfg.fss)?;
    let checks = fs.structural_checks(cfg.fss.tol_w);
    let json = Obj::new()
        .v("config", config_json(cfg))
        .v("fss", fss_json(&fs, None))
        .v(
            "structural",
            Obj::new()
                .b("ok", checks.ok)
                .b("signs_ok", checks.signs_ok)
                .b("ratio_decreasing", checks.ratio_decreasing)
                .f("left_edge_ratio", checks.left_edge_ratio)
                .f("right_edge_ratio", checks.right_edge_ratio)
                .f("wronskian_residual", checks.wronskian_residual)
                .f("rho_prime_max", checks.rho_prime_max)
                .build(),
        )
        .build();
    emit(cli, cfg, "fss.json", &json, Some(solution_csv(&fs, None, cfg.stride)), "fss.csv")?;
    Ok(if checks.ok { 0 } else { 2 })
}

/// A divergent `‖f‖_{p,θ}` is reported in the JSON, not raised.
fn cmd_solve(cli: &Cli, cfg: &RunConfig) -> CliResult<i32> {
    let f_text = cfg.f.as_deref().ok_or_else(|| CliError::Usage("solve needs `f` in the config".into()))?;
    let f = RealFunction::parse(f_text)?;
    let scale = local_scale(cfg)?;
    let fs = build_fss(&scale, &cfg.fss)?;
    let mut sol = fs.apply_green(&f)?;
    let (mu, theta) = (RealFunction::parse(&cfg.mu)?, RealFunction::parse(&cfg.theta)?);
    let quad = cfg.admissibility().quad;
    let divergent = match fs.attach_norms(&mut sol, &f, cfg.p, &mu, &theta, &quad) {
        Ok(()) => None,
        Err(Error::DivergentNorm(msg)) => Some(msg),
        Err(e) => return Err(e.into()),
    };
    let json = Obj::new()
        .v("config", config_json(cfg))
        .v("fss", fss_json(&fs, Some(&sol)))
        .v("divergent_norm", divergent.clone().map_or(Value::Null, Value::String))
        .build();
    emit(cli, cfg, "solve.json", &json, Some(solution_csv(&fs, Some(&sol), cfg.stride)), "solution.csv")?;
    Ok(if sol.residual_ok() && divergent.is_none() { 0 } else { 2 })
}

/// Verdict plus, when operator bounds exist, a seeded stability probe.
fn verdict_json(problem: &Problem, acfg: &AdmissibilityConfig) -> CliResult<(AdmissibilityReport, Value)> {
    let report = verdict(problem, acfg)?;
    let mut json = report.to_json();
    let stability = match report.s_bound().filter(|b| b.upper.is_finite()) {
        Some(b) => {
            let scale = problem.scale();
            let (fs, mu, theta) = realize(problem, &scale)?;
            let samples = stability_samples(fs.grid(), acfg.stability_samples, acfg.seed);
            stability_probe(&fs, &mu, &theta, problem.p, b.upper, 0.05, &samples).to_json()
        }
        None => Value::Null,
    };
    if let Value::Object(m) = &mut json {
        m.insert("stability".into(), stability);
        m.insert("exit_code".into(), report.verdict.exit_code().into());
    }
    Ok((report, json))
}

fn cmd_verdict(cli: &Cli, cfg: &RunConfig) -> CliResult<i32> {
    let (report, json) = verdict_json(&cfg.problem()?, &cfg.admissibility())?;
    let json = Obj::new().v("config", config_json(cfg)).v("report", json).build();
    emit(cli, cfg, "verdict.json", &json, None, "")?;
    Ok(report.verdict.exit_code())
}

/// Abscissae of the asymptotic tables.
pub const EXAMPLE6_TABLE_X: [f64; 4] = [1e3, 1e4, 1e5, 1e6];
pub const D_RATIO_TOL: f64 = 0.05;
pub const KAPPA1_CAP: f64 = 10.0;
pub const M_RANGE: (f64, f64) = (0.5, 2.0);
pub const D_HAT_GROWTH_MIN: f64 = 9.0;
pub const Q0_AT_1E6_MAX: f64 = 1e-2;

/// `sup d̂` over `|x| ≤ r` for each `r`, from one log-spaced sweep (the
/// potential is even, so `x ≥ 0` suffices).
fn d_hat_running_sup(scale: &LocalScale, radii: &[f64]) -> crate::error::Result<Vec<f64>> {
    use rayon::prelude::*;
    let top = radii.iter().copied().fold(1.0, f64::max);
    let n = (top.log10() * 64.0).ceil() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|k| 10f64.powf(top.log10() * k as f64 / n as f64)).collect();
    xs.push(0.0);
    xs.extend_from_slice(radii);
    let vals = xs.par_iter().map(|&x| Ok((x, scale.d_hat(x)?))).collect::<crate::error::Result<Vec<_>>>()?;
    Ok(radii
        .iter()
        .map(|&r| vals.iter().filter(|(x, _)| *x <= r).map(|v| v.1).fold(0.0, f64::max))
        .collect())
}

fn cmd_example6(cli: &Cli, cfg: &RunConfig) -> CliResult<i32> {
    use rayon::prelude::*;
    let e = Example6::with_cutoff(cfg.cutoff.unwrap_or_else(crate::presets::example6_cutoff))?;
    let pot = e.potential();
    let scale = LocalScale::new(Arc::new(pot.clone()), LocalScaleConfig::default());
    let acfg = cfg.admissibility();
    let mut violations: Vec<String> = Vec::new();
    let mut check = |ok: bool, what: String| {
        if !ok {
            violations.push(what);
        }
        ok
    };

    // assertion A: {L_p; L_p} is not admissible
    let radii = [1e2, 1e6];
    let sups = d_hat_running_sup(&scale, &radii)?;
    let growth = sups[1] / sups[0];
    let q0_far = scale.mass(1e6 - 1.0, 1e6 + 1.0)?;
    let solv = lp_solvability(&scale, &acfg)?;
    let unit = Problem::new(pot.clone(), Weight::one(), Weight::one(), cfg.p)?.with_fss(cfg.fss);
    let (unit_report, unit_json) = verdict_json(&unit, &acfg)?;
    let a_ok = [
        check(growth >= D_HAT_GROWTH_MIN, format!("d_hat running sup grew by {growth} < {D_HAT_GROWTH_MIN}")),
        check(q0_far <= Q0_AT_1E6_MAX, format!("q0(1) at 1e6 is {q0_far} > {Q0_AT_1E6_MAX}")),
        check(solv.grade == Grade::Fail, format!("lp_solvability graded {}", solv.grade.as_str())),
        check(
            unit_report.verdict == Decision::NotAdmissible,
            format!("unit weights verdict {}", unit_report.verdict.as_str()),
        ),
    ]
    .iter()
    .all(|&b| b);

    // assertion B: the weighted pair is admissible
    let dec = pot.decomposition().ok_or_else(|| CliError::Usage("example6 potential must be split".into()))?;
    let kcfg = KappaConfig::default();
    let rows = EXAMPLE6_TABLE_X
        .par_iter()
        .map(|&x| -> crate::error::Result<[f64; 6]> {
            let s = (1.0 + x * x).sqrt();
            let d = scale.d(x)?;
            let k1 = scale.kappa1(x, &dec, &kcfg)?;
            let k2 = scale.kappa2(x, &dec, &kcfg)?;
            Ok([x, d, d / s.sqrt(), k1, k1 * s, k2])
        })
        .collect::<crate::error::Result<Vec<_>>>()?;
    let mut b_ok = true;
    for r in &rows {
        b_ok &= check((r[2] - 1.0).abs() <= D_RATIO_TOL, format!("d ratio {} at x = {}", r[2], r[0]));
        b_ok &= check(r[4] <= KAPPA1_CAP, format!("kappa1 sqrt(1+x^2) = {} at x = {}", r[4], r[0]));
    }
    let weighted = Problem::new(pot, Weight::Expr(e.mu.clone()), Weight::Expr(e.theta.clone()), cfg.p)?.with_fss(cfg.fss);
    let (w_report, w_json) = verdict_json(&weighted, &acfg)?;
    let m = w_report.m.value;
    b_ok &= check(m >= M_RANGE.0 && m <= M_RANGE.1, format!("m = {m} outside [{}, {}]", M_RANGE.0, M_RANGE.1));
    b_ok &= check(w_report.verdict == Decision::Admissible, format!("weighted verdict {}", w_report.verdict.as_str()));

    let table = |j: usize| nums(&rows.iter().map(|r| r[j]).collect::<Vec<_>>());
    let json = Obj::new()
        .v("config", config_json(cfg))
        .v(
            "assertion_a",
            Obj::new()
                .b("ok", a_ok)
                .v("d_hat_running_sup", Obj::new().v("radius", nums(&radii)).v("sup", nums(&sups)).build())
                .f("d_hat_growth", growth)
                .f("q0_1_at_1e6", q0_far)
                .b("lp_solvable", solv.grade == Grade::Pass)
                .s("lp_solvability", solv.grade.as_str())
                .s("verdict", unit_report.verdict.as_str())
                .v("report", unit_json)
                .build(),
        )
        .v(
            "assertion_b",
            Obj::new()
                .b("ok", b_ok)
                .v(
                    "tables",
                    Obj::new()
                        .v("x", table(0))
                        .v("d", table(1))
                        .v("d_ratio", table(2))
                        .v("kappa1", table(3))
                        .v("kappa1_scaled", table(4))
                        .v("kappa2", table(5))
                        .build(),
                )
                .f("m", m)
                .s("verdict", w_report.verdict.as_str())
                .v("report", w_json)
                .build(),
        )
        .v("violations", Value::Array(violations.iter().cloned().map(Value::String).collect()))
        .build();
    let csv_rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    let csv = csv_table(&["x", "d", "d_ratio", "kappa1", "kappa1_scaled", "kappa2"], &csv_rows);
    emit(cli, cfg, "example6.json", &json, Some(csv), "example6_tables.csv")?;
    for v in &violations {
        eprintln!("violation: {v}");
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}
