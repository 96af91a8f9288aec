use std::fs;

use cspath::experiments::{
    aggregate, derive_seed, frontier_growth_experiment, read_trials_csv, report_json, run_experiment, simulate_bh,
    truncation_experiment, truncation_experiment_with_threshold, write_trials_csv, C0Rule, ExperimentConfig, ExperimentError,
    Method, TrialStatus, CSV_HEADER,
};
use cspath::instance::{DistributionSpec, Instance, PathResult, StorageMode};

fn config(dir: &std::path::Path, text: &str) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(text).unwrap();
    cfg.output_dir = dir.to_path_buf();
    cfg
}

fn strip_runtime(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(10);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn tiny_exact_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=6\ntrials=3\nmethods=exact\nc0_rule=absolute:0.3\nworkers=1");
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.len(), 3);
    for r in &out.records {
        assert!(matches!(r.status, TrialStatus::Optimal | TrialStatus::Infeasible));
        assert_eq!(r.seed, derive_seed(cfg.master_seed, 6, r.trial));
    }
    let csv = fs::read_to_string(&out.trials_path).unwrap();
    assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn records_are_reproducible_in_isolation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=20,40\ntrials=4\nmethods=exact,dual,shrink\nmaster_seed=11\nworkers=2");
    let out = run_experiment(&cfg).unwrap();
    for r in out.records.iter().filter(|r| r.method == Method::Exact && r.status == TrialStatus::Optimal) {
        let inst = Instance::generate(r.n, r.seed, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Implicit).unwrap();
        let sol = cspath::pareto::solve_csp(&inst, r.c0).unwrap();
        let p: &PathResult = sol.path().unwrap();
        assert_eq!(Some(p.length), r.length);
        assert_eq!(Some(p.hops), r.hops);
        assert!(p.cost <= r.c0);
        let recomputed = PathResult::from_vertices(&inst, p.vertices.clone());
        assert!((recomputed.length - p.length).abs() <= 1e-12 * p.length);
    }
    for r in &out.records {
        if let Some(h) = r.hops {
            assert!(h >= 1);
        }
    }
}

#[test]
fn sandwich_holds_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=30,60\ntrials=6\nmethods=exact,dual,shrink\nworkers=1");
    let out = run_experiment(&cfg).unwrap();
    for chunk in out.records.chunks(3) {
        let (e, d, s) = (&chunk[0], &chunk[1], &chunk[2]);
        assert_eq!((e.method, d.method, s.method), (Method::Exact, Method::Dual, Method::Shrink));
        let exact = e.length.unwrap_or(f64::INFINITY);
        let shrink = if s.status == TrialStatus::Optimal { s.length.unwrap() } else { f64::INFINITY };
        assert!(d.dual_value.unwrap() <= exact + 1e-9);
        assert!(exact <= shrink);
    }
}

#[test]
fn rerun_and_csv_round_trip_are_exact() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let text = "n_grid=16,32\ntrials=5\nmethods=exact,dual,shrink\nmaster_seed=3";
    let ca = config(a.path(), &format!("{text}\nworkers=1"));
    let cb = config(b.path(), &format!("{text}\nworkers=3"));
    let ra = run_experiment(&ca).unwrap();
    let rb = run_experiment(&cb).unwrap();
    let csv_a = fs::read_to_string(&ra.trials_path).unwrap();
    let csv_b = fs::read_to_string(&rb.trials_path).unwrap();
    assert_eq!(strip_runtime(&csv_a), strip_runtime(&csv_b));
    let json_a = fs::read_to_string(&ra.report_path).unwrap();
    assert_eq!(json_a, fs::read_to_string(&rb.report_path).unwrap());

    let back = read_trials_csv(fs::File::open(&ra.trials_path).unwrap()).unwrap();
    assert_eq!(back, ra.records);
    assert_eq!(report_json(&aggregate(&back)).unwrap(), json_a);
    let mut again = Vec::new();
    write_trials_csv(&back, &mut again).unwrap();
    assert_eq!(String::from_utf8(again).unwrap(), csv_a);
}

#[test]
fn aggregate_report_shape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=50\ntrials=8\nmethods=exact,dual\ngamma=0.6\nworkers=1");
    let out = run_experiment(&cfg).unwrap();
    let c0 = C0Rule::WindowFraction(0.5).resolve(50);
    let exact = &out.report[&format!("n=50/c0={c0}/method=exact")];
    let dual = &out.report[&format!("n=50/c0={c0}/method=dual")];
    assert_eq!(exact.trials, 8);
    assert_eq!(exact.length_ratio.len(), 2);
    assert!(exact.min_product_ratio.is_some());
    assert!(exact.duality_gap.is_none());
    let gap = dual.duality_gap.as_ref().unwrap();
    assert!(gap.min >= -1e-9);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out.report_path).unwrap()).unwrap();
    assert!(json.as_object().unwrap().keys().all(|k| k.starts_with("n=50/c0=")));
}

#[test]
fn exact_skipped_above_cap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=10,30\ntrials=2\nmethods=exact,shrink\nexact_n_cap=20\nworkers=1");
    let out = run_experiment(&cfg).unwrap();
    assert_eq!(out.records.iter().filter(|r| r.method == Method::Exact).count(), 2);
    assert!(out.records.iter().filter(|r| r.n == 30).all(|r| r.method == Method::Shrink));
}

#[test]
fn too_many_errors_fail_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "n_grid=30\ntrials=3\nmethods=exact,shrink\nmax_labels=2\nworkers=1");
    match run_experiment(&cfg) {
        Err(ExperimentError::TooManyErrors { errored: 3, total: 6 }) => {}
        other => panic!("expected failure, got {other:?}"),
    }
    let back = read_trials_csv(fs::File::open(dir.path().join("trials.csv")).unwrap()).unwrap();
    let errors: Vec<_> = back.iter().filter(|r| r.status == TrialStatus::Error).collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.iter().all(|r| r.length.is_none()));
    let report = aggregate(&back);
    let exact = report.values().find(|s| s.method == Method::Exact).unwrap();
    assert_eq!(exact.errors, 3);
    assert!(exact.length.is_none());
}

#[test]
fn bh_trials_are_sane() {
    let r = simulate_bh(200, 0.5, 5, 9).unwrap();
    assert_eq!(r.trials.len(), 5);
    for t in &r.trials {
        assert!(t.length > 0.0);
        assert!(t.hops >= 1);
    }
    assert!(simulate_bh(200, 1.0, 5, 9).is_err());
}

#[test]
fn truncation_edge_cases() {
    let r = truncation_experiment_with_threshold(100, 10, 1, f64::INFINITY).unwrap();
    assert_eq!(r.fraction, 1.0);
    let r = truncation_experiment(128, 10, 1).unwrap();
    assert!(r.fraction > 0.5);
    // A threshold far below every edge removes them all.
    let r = truncation_experiment_with_threshold(64, 4, 1, 1e-12).unwrap();
    assert_eq!(r.equal, 0);
}

#[test]
fn frontier_growth_small() {
    let r = frontier_growth_experiment(&[2, 16, 32, 64], 3, 5).unwrap();
    assert_eq!(r.rows[0].target_labels, vec![1, 1, 1]);
    for w in r.rows.windows(2) {
        assert!(w[1].median_total_labels >= w[0].median_total_labels);
    }
    assert!(r.slope.unwrap() > 0.0);
}
