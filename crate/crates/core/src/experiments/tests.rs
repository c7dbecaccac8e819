use super::acceptance::{self, Tolerances};
use super::*;

fn conv(n: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Conv, "Z^d:d=1", "srw");
    cfg.params.n = Some(n);
    cfg
}

#[test]
fn conv_srw_z_return_at_four() {
    let rec = evaluate(&conv(4), None).unwrap();
    let m = rec.metric("mass[e]").unwrap();
    assert_eq!(m.exact.as_deref(), Some("3/8"));
    assert_eq!(m.value, 0.375);
    assert!(!rec.incomplete);
    assert_eq!(rec.series["return"][0].n, 4);
}

#[test]
fn same_config_same_digest() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Walk, "F:k=2", "srw");
    cfg.params.n = Some(30);
    cfg.params.trials = Some(500);
    cfg.backend = "float".into();
    cfg.seed = 9;
    let a = evaluate(&cfg, None).unwrap();
    let b = evaluate(&cfg, None).unwrap();
    assert_eq!(a.digest(), b.digest());
    cfg.seed = 10;
    assert_ne!(evaluate(&cfg, None).unwrap().digest(), a.digest());
}

#[test]
fn validation_errors() {
    let mut cfg = conv(4);
    cfg.group = "Q8".into();
    assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));
    assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);

    let mut cfg = conv(4);
    cfg.budget.eps = 1e-9;
    assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));
    cfg.backend = "float".into();
    cfg.validate().unwrap();

    let mut cfg = conv(4);
    cfg.params.n = None;
    assert!(matches!(cfg.validate(), Err(Error::Validation { .. })));

    let cfg = ExperimentConfig::new(ExperimentKind::Conv, "F:k=2", "weights:a=1");
    assert!(cfg.validate().is_err());
}

#[test]
fn toml_round_trip_and_hash() {
    let mut cfg = conv(6);
    cfg.params.elements = Some(vec!["e".into(), "x1.x1".into()]);
    let text = cfg.to_toml_string();
    let back = ExperimentConfig::from_toml_str(&text).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(back.hash(), cfg.hash());

    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(other.hash(), cfg.hash());
    let mut other = cfg.clone();
    other.budget.max_support -= 1;
    assert_ne!(other.hash(), cfg.hash());

    assert!(ExperimentConfig::from_toml_str("kind = \"conv\"\ngroup = \"F:k=2\"\nbogus = 1\n").is_err());
}

#[test]
fn run_writes_artifacts_and_guards_directories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = conv(4);
    let (rec, out) = run(&cfg, dir.path(), None).unwrap();
    assert!(out.join("record.json").exists());
    let csv = std::fs::read_to_string(out.join("return.csv")).unwrap();
    assert!(csv.starts_with("n,value,err_lo,err_hi\n4,"));
    let stored: ResultRecord = serde_json::from_str(&std::fs::read_to_string(out.join("record.json")).unwrap()).unwrap();
    assert_eq!(stored.digest(), rec.digest());

    // rerun in place is fine
    run(&cfg, dir.path(), None).unwrap();

    // a foreign config under this hash is refused
    std::fs::write(out.join("config.toml"), conv(5).to_toml_string()).unwrap();
    assert!(matches!(run(&cfg, dir.path(), None), Err(Error::Config(_))));
}

#[test]
fn budget_yields_partial_results() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Kesten, "Z^d:d=3", "lazy");
    cfg.params.nmin = Some(1);
    cfg.params.nmax = Some(30);
    cfg.budget.max_support = 2_000;
    let rec = evaluate(&cfg, None).unwrap();
    assert!(rec.incomplete);
    let rows = &rec.series["return"];
    assert!(!rows.is_empty() && rows.len() < 30);
}

#[test]
fn cache_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let cache = DiskCache::new(dir.path()).unwrap();
    let mut cfg = conv(12);
    cfg.group = "Z^d:d=2".into();
    let a = evaluate(&cfg, Some(&cache)).unwrap();
    let b = evaluate(&cfg, Some(&cache)).unwrap();
    assert_eq!(a.provenance.cache_hits, 0);
    assert_eq!(b.provenance.cache_hits, 1);
    assert_eq!(a.digest(), b.digest());
}

#[test]
fn acceptance_lines_have_verdicts() {
    let tol = Tolerances::default();
    let r = acceptance::run_criterion(1, 0, &tol);
    assert!(r.passed, "{}", r.line());
    assert!(r.line().starts_with("[PASS]  1 "));
    assert!(r.exact_digest.is_some());
}

#[test]
fn perturbed_tolerance_fails_only_its_criterion() {
    let tol = Tolerances {
        c4_slack: -1.0,
        ..Tolerances::default()
    };
    let report = acceptance::acceptance_suite_with(0, &tol, &[1, 4, 12]);
    let verdicts: Vec<bool> = report.results.iter().map(|r| r.passed).collect();
    assert_eq!(verdicts, vec![true, false, true], "{:#?}", report.lines());
    assert!(!report.all_passed());
}

#[test]
fn unknown_criterion_is_a_failure() {
    let r = acceptance::run_criterion(99, 0, &Tolerances::default());
    assert!(!r.passed);
}

#[test]
fn product_measures_use_the_factorized_route() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Thin, "product:Z^d:d=2|F:k=2", "product:lazy|lazy");
    cfg.params.ns = Some(vec![6, 12]);
    cfg.params.q = Some(1.0);
    cfg.budget.max_support = 10_000;
    let rec = evaluate(&cfg, None).unwrap();
    assert!(!rec.incomplete);
    let rows = &rec.series["rho[([1, 0], e)]"];
    assert!((rows[0].value - 0.744_962_660_447).abs() < 1e-9);
    assert!(rows[1].value < rows[0].value);
}
