use std::process::Command;

use htdp_cli::output::{read_csv, read_json, write_csv, write_json};
use htdp_cli::summary::log_log_slope;
use htdp_cli::{run_experiment, summarize, ExperimentConfig, ResultRow, Task};
use proptest::prelude::*;

fn config(task: Task) -> ExperimentConfig {
    ExperimentConfig {
        task: Some(task),
        ..Default::default()
    }
}

fn synthetic(n: usize, trial: usize, value: f64) -> ResultRow {
    ResultRow {
        task: "mean-est".into(),
        algorithm: "cdp_hdme".into(),
        n,
        d: 2,
        k: 2.0,
        rho_or_eps: 1.0,
        tau: Some(10.0),
        t: None,
        eta: None,
        q: None,
        trial,
        seed: 42,
        metric_name: "l2_error".into(),
        metric_value: value,
        stderr: None,
        budget_spent: 1.0,
        runtime_ms: 0.0,
        warnings: String::new(),
    }
}

#[test]
fn single_point_gives_one_row() {
    let rows = run_experiment(&config(Task::MeanEst)).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].metric_name, "l2_error");
    assert!(rows[0].metric_value.is_finite());
    assert_eq!(rows[0].budget_spent, 1.0);
}

#[test]
fn csv_header_is_exact() {
    let mut buf = Vec::new();
    write_csv(&[synthetic(10, 0, 1.5)], &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "task,algorithm,n,d,k,rho_or_eps,tau,T,eta,q,trial,seed,metric_name,metric_value,stderr,budget_spent,runtime_ms,warnings"
    );
    assert!(!text.contains('\r'));
}

#[test]
fn real_rows_round_trip_through_csv_and_json() {
    let mut c = config(Task::Sco);
    c.n = vec![1024, 2048];
    c.trials = 2;
    c.algorithm = Some("cdp_sco_strongly_convex".into());
    let rows = run_experiment(&c).unwrap();
    assert!(rows.iter().any(|r| !r.warnings.is_empty()));

    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let back: Vec<ResultRow> = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);

    let mut buf = Vec::new();
    write_json(&rows, &mut buf).unwrap();
    let back: Vec<ResultRow> = read_json(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        -1e3..1e3f64
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn csv_round_trip_is_exact(
        n in 2usize..1 << 20,
        value in finite(),
        tau in proptest::option::of(finite()),
        eta in proptest::option::of(finite()),
        t in proptest::option::of(0usize..1_000_000),
        seed in any::<u64>(),
        warnings in "[a-z ,;=\"0-9.]{0,30}",
    ) {
        let mut r = synthetic(n, 3, value);
        r.tau = tau;
        r.eta = eta;
        r.t = t;
        r.seed = seed;
        r.warnings = warnings;
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let back: Vec<ResultRow> = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, vec![r]);
    }
}

#[test]
fn worker_count_does_not_change_rows() {
    let mut c = config(Task::MeanEst);
    c.n = vec![512, 5000];
    c.d = vec![3];
    c.trials = 4;
    c.algorithm = Some("cdp_nsme".into());
    c.workers = Some(1);
    let one = run_experiment(&c).unwrap();
    c.workers = Some(3);
    let three = run_experiment(&c).unwrap();
    assert_eq!(one, three);
    let order: Vec<(usize, usize)> = one.iter().map(|r| (r.n, r.trial)).collect();
    assert_eq!(
        order,
        vec![
            (512, 0),
            (512, 1),
            (512, 2),
            (512, 3),
            (5000, 0),
            (5000, 1),
            (5000, 2),
            (5000, 3)
        ]
    );
}

#[test]
fn adding_grid_points_keeps_existing_trials() {
    let mut c = config(Task::MeanEst);
    c.n = vec![1000];
    c.trials = 2;
    let small = run_experiment(&c).unwrap();
    c.n = vec![500, 1000];
    c.rho = Some(vec![1.0, 2.0]);
    let big = run_experiment(&c).unwrap();
    for r in &small {
        assert!(big.contains(r));
    }
}

#[test]
fn failed_trials_are_recorded_not_fatal() {
    // 40 batches cannot be formed from 20 rows.
    let mut c = config(Task::MeanEst);
    c.n = vec![20, 4000];
    c.beta = 1e-4;
    let rows = run_experiment(&c).unwrap();
    assert!(rows[0].metric_value.is_nan());
    assert!(
        rows[0].warnings.contains("trial failed"),
        "{}",
        rows[0].warnings
    );
    assert!(rows[1].metric_value.is_finite());
}

#[test]
fn summarize_constant_metric_has_zero_slope() {
    let rows: Vec<ResultRow> = [1 << 10, 1 << 12, 1 << 14]
        .iter()
        .flat_map(|&n| (0..5).map(move |t| synthetic(n, t, 0.25)))
        .collect();
    let s = summarize(&rows).unwrap();
    assert_eq!(s.len(), 3);
    for p in &s {
        assert_eq!(p.median, 0.25);
        assert_eq!(p.trials, 5);
        assert!(p.slope.unwrap().abs() < 1e-12);
    }
}

#[test]
fn summarize_recovers_inverse_n_slope() {
    let rows: Vec<ResultRow> = (10..=16)
        .flat_map(|e| {
            let n = 1usize << e;
            // Noise around c/n that is symmetric, so medians are exact.
            [0.98, 1.0, 1.02]
                .into_iter()
                .enumerate()
                .map(move |(t, f)| synthetic(n, t, 3.0 * f / n as f64))
        })
        .collect();
    let s = summarize(&rows).unwrap();
    let slope = s[0].slope.unwrap();
    assert!((slope + 1.0).abs() < 0.01, "{slope}");
    assert!(s[0].slope_lo.unwrap() <= slope && slope <= s[0].slope_hi.unwrap());
}

#[test]
fn summarize_single_point_has_no_slope() {
    let s = summarize(&[synthetic(100, 0, 1.0), synthetic(100, 1, 3.0)]).unwrap();
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].median, 2.0);
    assert_eq!(s[0].mean, 2.0);
    assert!((s[0].stderr - 1.0).abs() < 1e-12);
    assert!(s[0].slope.is_none());
    assert!(summarize(&[]).is_err());
}

#[test]
fn slope_interval_needs_three_points() {
    let fit = log_log_slope(&[1.0, 2.0], &[1.0, 0.5]).unwrap();
    assert!((fit.slope + 1.0).abs() < 1e-12);
    assert!(fit.interval.is_none());
    assert!(log_log_slope(&[1.0, 2.0], &[1.0, 0.0]).is_none());
}

#[test]
fn budget_is_spent_exactly_for_every_private_algorithm() {
    for (task, alg) in [
        (Task::MeanEst, "cdp_hdme"),
        (Task::MeanEst, "cdp_nsme"),
        (Task::Sco, "cdp_sco_convex_hdme"),
        (Task::Sco, "cdp_sco_convex_nsme"),
        (Task::Sco, "cdp_sco_strongly_convex"),
    ] {
        let mut c = config(task);
        c.algorithm = Some(alg.into());
        c.rho = Some(vec![0.3, 2.7]);
        c.n = vec![2048];
        for r in run_experiment(&c).unwrap() {
            assert!(r.metric_value.is_finite(), "{alg}: {}", r.warnings);
            assert!(
                htdp_cli::runner::within_one_ulp(r.budget_spent, r.rho_or_eps),
                "{alg}: {r:?}"
            );
        }
    }
    let mut c = config(Task::MeanEst);
    c.algorithm = Some("dp_hdme".into());
    c.eps = Some(vec![0.7]);
    let r = &run_experiment(&c).unwrap()[0];
    assert_eq!(r.budget_spent, 0.7);
}

#[test]
fn lower_bound_lab_rows() {
    let mut c = config(Task::LowerBound);
    c.d = vec![24];
    c.n = vec![4];
    c.distribution = Some("packing:p=0.01".into());
    let r = &run_experiment(&c).unwrap()[0];
    assert_eq!(r.metric_name, "fano_bound");
    assert!(r.metric_value > 0.0);

    c.algorithm = Some("cdp_hdme".into());
    c.trials = 3;
    c.n = vec![2000];
    let rows = run_experiment(&c).unwrap();
    assert!(rows
        .iter()
        .all(|r| r.metric_name == "packing_l2_error" && r.metric_value.is_finite()));
}

fn htdp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_htdp"))
}

#[test]
fn binary_exit_codes_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let status = htdp()
        .args([
            "mean-est", "--n", "300,600", "--trials", "2", "--seed", "5", "--out",
        ])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let rows: Vec<ResultRow> = htdp_cli::output::read_rows_file(&out).unwrap();
    assert_eq!(rows.len(), 4);

    let summary = htdp().arg("summarize").arg(&out).output().unwrap();
    assert_eq!(summary.status.code(), Some(0));
    let text = String::from_utf8(summary.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);

    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"task": "lower-bound", "d": [8], "trials": 1}"#).unwrap();
    let o = htdp()
        .args(["sweep", "--format", "json", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with('{'));

    // Validation errors exit with 2.
    for args in [
        vec!["mean-est", "--k", "1.5"],
        vec!["sco", "--algorithm", "cdp_hdme"],
        vec!["sweep"],
        vec!["mean-est", "--unknown-flag"],
    ] {
        assert_eq!(
            htdp().args(&args).output().unwrap().status.code(),
            Some(2),
            "{args:?}"
        );
    }
    std::fs::write(&cfg, r#"{"task": "sco", "n": []}"#).unwrap();
    assert_eq!(
        htdp()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .status()
            .unwrap()
            .code(),
        Some(2)
    );

    // Runtime failures exit with 3.
    let o = htdp()
        .args(["summarize"])
        .arg(dir.path().join("missing.csv"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    let o = htdp()
        .args(["mean-est", "--out"])
        .arg(dir.path().join("no/such/dir.csv"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}
