use sturm_admissible::admissibility::{
    agreement_check, check_divergent_tails, check_positive_mass, default_probes, lp_solvability, m_certificate,
    q0, realize, special_pair_qstar, special_pair_theta, stability_probe, stability_samples, verdict,
    AdmissibilityConfig, Decision, Problem, Weight,
};
use sturm_admissible::hardy::s_operator_bounds;
use sturm_admissible::localscale::{LocalScale, Potential};
use sturm_admissible::presets::Example6;
use sturm_admissible::realline::Trend;
use sturm_admissible::report::Grade;

fn scale(text: &str) -> LocalScale {
    LocalScale::with_default(Potential::parse(text).unwrap())
}

fn example6_scale() -> LocalScale {
    LocalScale::with_default(Example6::new().unwrap().potential())
}

fn w(text: &str) -> Weight {
    Weight::parse(text).unwrap()
}

fn example6_problem(mu: Weight, theta: Weight) -> Problem {
    let e = Example6::new().unwrap();
    Problem::new(e.potential(), mu, theta, 2.0).unwrap().with_fss(e.fss_config())
}

fn example6_weighted() -> Problem {
    let e = Example6::new().unwrap();
    example6_problem(Weight::Expr(e.mu), Weight::Expr(e.theta))
}

fn constant_problem() -> Problem {
    Problem::new(Potential::parse("1").unwrap(), Weight::one(), Weight::one(), 2.0).unwrap()
}

#[test]
fn positive_mass() {
    let probes = default_probes(&[]);
    assert_eq!(check_positive_mass(&scale("1"), &probes).unwrap().grade, Grade::Pass);
    assert_eq!(check_positive_mass(&example6_scale(), &probes).unwrap().grade, Grade::Pass);
    assert_eq!(check_positive_mass(&scale("max(0, 1 - abs(x))"), &probes).unwrap().grade, Grade::Fail);
    assert_eq!(check_positive_mass(&scale("0"), &probes).unwrap().grade, Grade::Inconclusive);
}

#[test]
fn mu_tails() {
    let cfg = AdmissibilityConfig::default();
    let s = scale("1");
    let e = Example6::new().unwrap();
    assert_eq!(check_divergent_tails(&Weight::one(), &s, &cfg.quad).unwrap().grade, Grade::Pass);
    assert_eq!(check_divergent_tails(&Weight::Expr(e.mu), &s, &cfg.quad).unwrap().grade, Grade::Pass);
    assert_eq!(check_divergent_tails(&w("exp(-abs(x))"), &s, &cfg.quad).unwrap().grade, Grade::Fail);
}

#[test]
fn q0_examples() {
    let cfg = AdmissibilityConfig::default();
    for a in [0.5, 1.0, 3.0] {
        let r = q0(a, &scale("1"), &cfg.grid).unwrap();
        assert!((r.estimate - 2.0 * a).abs() < 1e-9 && r.trend == Trend::Bounded);
        let r = q0(a, &scale("1 + x^2"), &cfg.grid).unwrap();
        let oracle = 2.0 * a + 2.0 * a * a * a / 3.0;
        assert!((r.estimate - oracle).abs() < 1e-9 * oracle && r.argmax == 0.0 && r.trend == Trend::Bounded);
    }
    let s = example6_scale();
    let r = q0(1.0, &s, &cfg.grid).unwrap();
    assert_eq!(r.trend, Trend::Growing);
    // beyond the oscillation cutoff the window mass is that of 1/√(1+t²)
    for x in [1e3f64, 1e6] {
        let oracle = (x + 1.0).asinh() - (x - 1.0).asinh();
        assert!((s.mass(x - 1.0, x + 1.0).unwrap() - oracle).abs() < 1e-9 * oracle);
        assert!(oracle < 2.1 / x);
    }
}

#[test]
fn solvability_examples() {
    let cfg = AdmissibilityConfig::default();
    let r = lp_solvability(&scale("1"), &cfg).unwrap();
    assert_eq!(r.grade, Grade::Pass);
    assert!((r.d_hat_sup.estimate - 1.0).abs() < 1e-8);
    let r = lp_solvability(&scale("1 + x^2"), &cfg).unwrap();
    assert_eq!(r.grade, Grade::Pass);
    assert_eq!(r.d_hat_sup.argmax, 0.0);
    let r = lp_solvability(&example6_scale(), &cfg).unwrap();
    assert_eq!((r.grade, r.by_d_hat, r.by_q0), (Grade::Fail, Grade::Fail, Grade::Fail), "{}", r.detail);
}

#[test]
fn agreement_examples() {
    let cfg = AdmissibilityConfig::default();
    let e = Example6::new().unwrap();
    let s = example6_scale();
    assert_eq!(agreement_check(&Weight::one(), &scale("1"), &cfg).unwrap().grade, Grade::Pass);
    assert_eq!(agreement_check(&Weight::Expr(e.mu), &s, &cfg).unwrap().grade, Grade::Pass);
    let r = agreement_check(&Weight::Expr(e.theta), &s, &cfg).unwrap();
    assert_eq!(r.grade, Grade::Pass);
    assert_eq!(agreement_check(&w("exp(x)"), &scale("1"), &cfg).unwrap().grade, Grade::Fail);
}

#[test]
fn certificate_examples() {
    let cfg = AdmissibilityConfig::default();
    let m = m_certificate(&w("2 + sin(x)"), &w("2 + sin(x)"), &scale("1"), &cfg.grid).unwrap();
    assert!((m.value - 1.0).abs() < 1e-8 && m.grade == Grade::Pass);
    let e = Example6::new().unwrap();
    let s = example6_scale();
    let m = m_certificate(&Weight::Expr(e.mu), &Weight::Expr(e.theta), &s, &cfg.grid).unwrap();
    assert!(m.grade == Grade::Pass && (0.5..=2.0).contains(&m.value), "{m:?}");
    let m = m_certificate(&Weight::one(), &Weight::one(), &s, &cfg.grid).unwrap();
    assert!(m.value.is_infinite() && m.grade == Grade::Fail);
}

#[test]
fn verdict_examples() {
    let cfg = AdmissibilityConfig::default();
    let r = verdict(&constant_problem(), &cfg).unwrap();
    assert_eq!(r.verdict, Decision::Admissible, "{}", r.deciding_stage);
    assert_eq!(r.verdict.exit_code(), 0);
    let r = verdict(&example6_weighted(), &cfg).unwrap();
    assert_eq!(r.verdict, Decision::Admissible, "{}", r.deciding_stage);
    assert_eq!(r.solvability.as_ref().unwrap().grade, Grade::Fail);
    let r = verdict(&example6_problem(Weight::one(), Weight::one()), &cfg).unwrap();
    assert_eq!(r.verdict, Decision::NotAdmissible, "{}", r.deciding_stage);
    assert_eq!(r.verdict.exit_code(), 1);
    // every stage in the report carries a basis
    let json = r.to_json();
    let tagged: Vec<&str> =
        json["provenance"].as_array().unwrap().iter().map(|p| p["check"].as_str().unwrap()).collect();
    for key in ["positive_mass", "mu_tails_divergent", "lp_solvability", "in_H", "agreement_mu", "agreement_theta", "m", "m0", "s_bounds"] {
        assert!(json.get(key).is_some(), "{key}");
        assert!(tagged.contains(&key), "{key}");
    }
}

#[test]
fn verdict_is_monotone_under_shrinking_mu() {
    let cfg = AdmissibilityConfig { solvability: false, ..Default::default() };
    let e = Example6::new().unwrap();
    for lambda in [1.0, 0.5, 0.1] {
        let mu = Weight::parse(&format!("{lambda:?} * ({})", e.mu)).unwrap();
        let r = verdict(&example6_problem(mu, Weight::Expr(e.theta.clone())), &cfg).unwrap();
        assert_eq!(r.verdict, Decision::Admissible, "λ = {lambda}");
        let base = verdict(&example6_weighted(), &cfg).unwrap().m.value;
        assert!((r.m.value - lambda * base).abs() < 1e-9 * base);
    }
}

#[test]
fn qstar_pair() {
    let cfg = AdmissibilityConfig { solvability: false, ..Default::default() };
    let e = Example6::new().unwrap();
    let sp = special_pair_qstar(e.potential(), 2.0, &cfg).unwrap();
    assert!(sp.checks.iter().all(|c| c.1 == Grade::Pass));
    let r = verdict(&sp.problem.clone().with_fss(e.fss_config()), &cfg).unwrap();
    assert_eq!(r.verdict, Decision::Admissible, "{}", r.deciding_stage);
    assert!((r.m.value - 1.0).abs() < 1e-9);
    let companion = sp.companion.unwrap().with_fss(e.fss_config());
    assert_eq!(verdict(&companion, &cfg).unwrap().verdict, Decision::NotAdmissible);
    assert!(special_pair_qstar(Potential::parse("1").unwrap(), 2.0, &cfg).is_err());
}

#[test]
fn scale_pair() {
    let cfg = AdmissibilityConfig { solvability: false, ..Default::default() };
    let sp = special_pair_theta(Potential::parse("1").unwrap(), Weight::one(), 2.0, &cfg).unwrap();
    assert_eq!(verdict(&sp.problem, &cfg).unwrap().verdict, Decision::Admissible);
    let e = Example6::new().unwrap();
    let sp = special_pair_theta(e.potential(), w("sqrt(1+x^2)"), 2.0, &cfg).unwrap();
    let r = verdict(&sp.problem.clone().with_fss(e.fss_config()), &cfg).unwrap();
    assert_eq!(r.verdict, Decision::Admissible, "{}", r.deciding_stage);
    assert!((r.m0.value - 1.0).abs() < 0.25, "{}", r.m0.value);
    assert!(special_pair_theta(e.potential(), Weight::one(), 2.0, &cfg).is_err());
}

#[test]
fn stability_examples() {
    let pr = constant_problem();
    let s = pr.scale();
    let (fs, mu, th) = realize(&pr, &s).unwrap();
    let gauss: Vec<f64> = fs.grid().iter().map(|x| (-x * x).exp()).collect();
    let zero = vec![0.0; fs.len()];
    let r = stability_probe(&fs, &mu, &th, 2.0, 1.0, 0.0, &[gauss, zero]);
    assert_eq!(r.ratios.len(), 1);
    assert_eq!(r.skipped.len(), 1);
    assert!(r.max_ratio <= 1.0 && r.within_bound);

    let pr = example6_weighted();
    let s = pr.scale();
    let (fs, mu, th) = realize(&pr, &s).unwrap();
    let b = s_operator_bounds(&fs, &mu, &th, 2.0).unwrap();
    let samples = stability_samples(fs.grid(), 20, 7);
    let r = stability_probe(&fs, &mu, &th, 2.0, b.bound.upper, 0.05, &samples);
    assert!(r.within_bound && r.max_ratio > 0.0, "{r:?}");
    // seeded: identical samples for the same seed
    assert_eq!(samples, stability_samples(fs.grid(), 20, 7));
}

#[test]
fn certificate_operator_and_stability_agree() {
    let cfg = AdmissibilityConfig { solvability: false, ..Default::default() };
    for (pr, finite) in [
        (constant_problem(), true),
        (example6_weighted(), true),
        (example6_problem(Weight::one(), Weight::one()), false),
    ] {
        let r = verdict(&pr, &cfg).unwrap();
        let s = r.s_bounds.clone().unwrap();
        assert_eq!(r.m.value.is_finite(), finite);
        assert_eq!(s.bounded(), finite);
        if finite {
            let scale = pr.scale();
            let (fs, mu, th) = realize(&pr, &scale).unwrap();
            let samples = stability_samples(fs.grid(), 20, 0);
            assert!(stability_probe(&fs, &mu, &th, 2.0, s.bound.upper, 0.05, &samples).within_bound);
        }
    }
}
