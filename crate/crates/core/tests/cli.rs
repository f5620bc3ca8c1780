use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sturm-admissible"))
}

/// Writes `config`, runs `cmd` with output under `dir`, returns the exit code.
fn run(dir: &Path, config: &str, cmd: &str, extra: &[&str]) -> i32 {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    bin()
        .args(["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), cmd])
        .args(extra)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn csv_column(dir: &Path, name: &str, col: &str) -> Vec<(f64, f64)> {
    let text = std::fs::read_to_string(dir.join("out").join(name)).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == col).unwrap();
    lines
        .map(|l| {
            let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            (cells[0], cells[j])
        })
        .collect()
}

fn as_f64(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| v.as_str().unwrap().parse().unwrap())
}

#[test]
fn scale_profiles() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "preset = \"constant\"\n", "scale", &["--probes", "-3.5,7"]), 0);
    let d = csv_column(dir.path(), "scale.csv", "d");
    assert!(d.len() >= 45);
    assert!(d.iter().any(|r| r.0 == -3.5));
    assert!(d.iter().all(|r| (r.1 - 1.0).abs() < 1e-8));

    // 2η² + (2/3)η⁴ = 2 at x = 0
    let eta = ((-2.0 + (4.0f64 + 16.0 / 3.0).sqrt()) / (4.0 / 3.0)).sqrt();
    assert_eq!(run(dir.path(), "q = \"1 + x^2\"\n", "scale", &["--json-only"]), 0);
    let s = json(dir.path(), "scale.json");
    assert!((as_f64(&s["d_at_0"]) - eta).abs() < 1e-8);

    assert_eq!(run(dir.path(), "preset = \"example6\"\n", "scale", &[]), 0);
    for (x, d) in csv_column(dir.path(), "scale.csv", "d") {
        if x.abs() >= 1e3 {
            assert!((d / (1.0 + x * x).powf(0.25) - 1.0).abs() < 0.05, "x = {x}");
        }
    }
}

#[test]
fn solve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // f ≡ 1 is not in L_p, so the norms are reported divergent
    assert_eq!(run(dir.path(), "q = \"1\"\nf = \"1\"\n", "solve", &[]), 2);
    assert!(json(dir.path(), "solve.json")["divergent_norm"].is_string());
    for (x, y) in csv_column(dir.path(), "solution.csv", "y") {
        if x.abs() <= 20.0 {
            assert!((y - 1.0).abs() < 1e-6, "y({x}) = {y}");
        }
    }

    // y(0) = ∫ e^{-|t|} e^{-t²} / 2 dt, composite Simpson on [0, 12]
    let n = 24_000;
    let h = 12.0 / n as f64;
    let g = |t: f64| (-t - t * t).exp();
    let oracle = (0..=n)
        .map(|k| {
            let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            w * g(k as f64 * h)
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert_eq!(run(dir.path(), "q = \"1\"\nf = \"exp(-x^2)\"\n", "solve", &[]), 0);
    let y0 = csv_column(dir.path(), "solution.csv", "y").into_iter().find(|r| r.0 == 0.0).unwrap().1;
    assert!((y0 - oracle).abs() < 1e-8, "{y0} vs {oracle}");
    let s = json(dir.path(), "solve.json");
    let ratio = as_f64(&s["fss"]["solution"]["norms"]["ratio"]);
    assert!(ratio > 0.0 && ratio <= 1.0);
}

#[test]
fn fss_command() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "q = \"1 + x^2\"\nfss.x_max = 10\n", "fss", &[]), 0);
    let s = json(dir.path(), "fss.json");
    assert_eq!(s["structural"]["ok"], Value::Bool(true));
    assert!(as_f64(&s["fss"]["wronskian_residual"]) <= 1e-6);
}

#[test]
fn verdict_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "preset = \"constant\"\n", "verdict", &[]), 0);
    assert_eq!(run(dir.path(), "preset = \"example6\"\n", "verdict", &[]), 0);
    let r = json(dir.path(), "verdict.json");
    assert_eq!(r["report"]["verdict"], "admissible-indicated");
    assert_eq!(r["report"]["stability"]["within_bound"], Value::Bool(true));
    assert_eq!(run(dir.path(), "preset = \"example6\"\nmu = \"1\"\ntheta = \"1\"\n", "verdict", &[]), 1);
    assert_eq!(json(dir.path(), "verdict.json")["report"]["verdict"], "not-admissible-indicated");
}

#[test]
fn deterministic_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = "preset = \"example6\"\n";
    assert_eq!(run(dir.path(), config, "verdict", &["--seed", "7"]), 0);
    let first = std::fs::read(dir.path().join("out/verdict.json")).unwrap();
    assert_eq!(run(dir.path(), config, "verdict", &["--seed", "7"]), 0);
    assert_eq!(first, std::fs::read(dir.path().join("out/verdict.json")).unwrap());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["config"]["seed"], 7);
}

#[test]
fn example6_command() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = bin().args(["example6", "--out", out.to_str().unwrap()]).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    let r = json(dir.path(), "example6.json");
    assert_eq!(r["assertion_a"]["lp_solvable"], Value::Bool(false));
    assert_eq!(r["assertion_b"]["verdict"], "admissible-indicated");
    assert!(as_f64(&r["assertion_b"]["m"]) <= 2.0);
    assert_eq!(r["violations"], Value::Array(vec![]));
}

#[test]
fn errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "q = \"1\"\nbogus = 1\n", "scale", &[]), 3);
    assert_eq!(run(dir.path(), "q = \"1 +\"\n", "scale", &[]), 3);
    assert_eq!(run(dir.path(), "q = \"1\"\n", "solve", &[]), 3);
    // positive mass fails for compactly supported q
    assert_eq!(run(dir.path(), "q = \"max(0, 1 - abs(x))\"\n", "verdict", &[]), 3);
    let status = bin().arg("scale").output().unwrap().status;
    assert_eq!(status.code(), Some(3));
}
