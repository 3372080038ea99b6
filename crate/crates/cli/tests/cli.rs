use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use owlscreen_cli::output::{read_solution_bin, RunSummary, TRACE_HEADER};

fn owlscreen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_owlscreen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn summary(dir: &Path) -> RunSummary {
    let text = std::fs::read_to_string(dir.join("summary.json")).unwrap();
    let s: RunSummary = serde_json::from_str(&text).unwrap();
    s.validate().unwrap();
    s
}

fn train(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["train", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    owlscreen(&args)
}

const SYNTH: &str = "n=60,d=300,q=3,support=8,groups=4,rho=0.5,noise=0.1";

#[test]
fn train_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), &["--synth", SYNTH, "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert!(s.converged && s.final_gap <= 1e-6);
    assert_eq!((s.dataset.n, s.dataset.d, s.dataset.q), (60, 300, 3));

    let b = read_solution_bin(&dir.path().join("solution.bin")).unwrap();
    assert_eq!(b.shape(), &[300, 3]);
    let csv = std::fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 301);
    let nonzero: Vec<usize> = b
        .outer_iter()
        .enumerate()
        .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
        .map(|(i, _)| i)
        .collect();
    assert_eq!(nonzero, s.nonzero_rows);
}

#[test]
fn trace_columns_and_monotonicity() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&train(dir.path(), &["--synth", SYNTH])), 0);
    let text = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), TRACE_HEADER);
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert!(rows.len() > 1);
    let col = |r: &Vec<String>, i: usize| r[i].parse::<f64>().unwrap();
    for pair in rows.windows(2) {
        assert!(col(&pair[0], 0) < col(&pair[1], 0), "iteration strictly increasing");
        assert!(col(&pair[0], 5) >= col(&pair[1], 5), "active count non-increasing");
        assert!(col(&pair[0], 7) <= col(&pair[1], 7), "screening rate non-decreasing");
    }
    for r in &rows {
        assert!((0.0..=1.0).contains(&col(r, 7)));
    }
}

#[test]
fn screening_does_not_change_the_support() {
    let on = tempfile::tempdir().unwrap();
    let off = tempfile::tempdir().unwrap();
    assert_eq!(code(&train(on.path(), &["--synth", SYNTH, "--screen", "on"])), 0);
    assert_eq!(code(&train(off.path(), &["--synth", SYNTH, "--screen", "off"])), 0);
    let (a, b) = (summary(on.path()), summary(off.path()));
    assert_eq!(a.nonzero_rows, b.nonzero_rows);
    assert!(a.screened_count > 0);
    assert_eq!(b.screened_count, 0);
}

#[test]
fn repeated_runs_match_except_wall_time() {
    let strip = |dir: &Path| {
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_seconds");
        v["config"].as_object_mut().unwrap().remove("out");
        v
    };
    for solver in ["apgd", "spgd"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let args = ["--synth", SYNTH, "--seed", "11", "--solver", solver];
        assert_eq!(code(&train(a.path(), &args)), 0);
        assert_eq!(code(&train(b.path(), &args)), 0);
        assert_eq!(strip(a.path()), strip(b.path()));
        assert_eq!(
            std::fs::read(a.path().join("solution.bin")).unwrap(),
            std::fs::read(b.path().join("solution.bin")).unwrap()
        );
    }
}

#[test]
fn multinomial_libsvm_input_records_classes() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.svm");
    let mut text = String::new();
    for i in 0..40 {
        let label = [3, 7, 9][i % 3];
        let a = (i % 3) as f64 + 0.1 * (i % 5) as f64;
        text += &format!("{label} 1:{a} 2:{} 4:{}\n", 1.0 - 0.2 * (i % 4) as f64, 0.05 * i as f64);
    }
    std::fs::write(&data, text).unwrap();
    let out = train(
        dir.path(),
        &["--data", data.to_str().unwrap(), "--model", "multinomial", "--weights", "alpha1=0.5,alpha2=0.1"],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!(s.class_labels, Some(vec![3.0, 7.0, 9.0]));
    assert_eq!((s.dataset.n, s.dataset.d, s.dataset.q), (40, 4, 3));
}

#[test]
fn csv_input_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.csv");
    let mut text = String::from("y1,y2,a,b,c\n");
    for i in 0..30 {
        let (a, b, c) = ((i as f64).sin(), (i as f64 * 0.7).cos(), (i % 7) as f64);
        text += &format!("{},{},{a},{b},{c}\n", 2.0 * a - b, a + 0.5 * c);
    }
    std::fs::write(&data, text).unwrap();
    let conf = dir.path().join("run.conf");
    std::fs::write(&conf, format!("data={}\ntargets=2\nheader=true\nweights=p=0.05\n", data.display())).unwrap();
    let out = train(dir.path(), &["--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path());
    assert_eq!((s.dataset.n, s.dataset.d, s.dataset.q), (30, 3, 2));
    assert_eq!(s.config["targets"], 2);
}

#[test]
fn iteration_cap_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = train(dir.path(), &["--synth", SYNTH, "--max-iter", "3"]);
    assert_eq!(code(&out), 2);
    let s = summary(dir.path());
    assert!(!s.converged);
    assert_eq!(s.iterations, 3);
}

#[test]
fn usage_errors_exit_with_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&train(dir.path(), &["--synth", SYNTH, "--solver", "newton"])), 64);
    assert_eq!(code(&train(dir.path(), &[])), 64);
    assert_eq!(code(&train(dir.path(), &["--synth", "n=10,bogus=1"])), 64);
    assert_eq!(code(&owlscreen(&["frobnicate"])), 64);
    assert_eq!(code(&owlscreen(&["--help"])), 0);
    assert_eq!(code(&owlscreen(&["--version"])), 0);
}

#[test]
fn unreadable_data_exits_with_66() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.svm");
    assert_eq!(code(&train(dir.path(), &["--data", missing.to_str().unwrap()])), 66);
    let bad = dir.path().join("bad.svm");
    std::fs::write(&bad, "1 1:0.5\n2 3:x\n").unwrap();
    let out = train(dir.path(), &["--data", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 66);
    assert!(String::from_utf8_lossy(&out.stderr).contains('2'), "line number reported");
    let empty = dir.path().join("empty.svm");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&train(dir.path(), &["--data", empty.to_str().unwrap()])), 66);
}

#[test]
fn single_trial_bench_has_no_variance_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = owlscreen(&["bench", "--synth", SYNTH, "--repeats", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("speedup ratio"));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert!(v["screen_on"].get("std_s").is_none());
    assert_eq!(v["screen_on"]["wall_times_s"].as_array().unwrap().len(), 1);
    assert_eq!(v["same_nonzero_rows"], true);
}

#[test]
fn bench_reports_variance_and_agreement() {
    let dir = tempfile::tempdir().unwrap();
    let out = owlscreen(&[
        "bench",
        "--synth",
        SYNTH,
        "--repeats",
        "3",
        "--tol",
        "1e-10",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("bench.json")).unwrap()).unwrap();
    assert!(v["screen_off"]["std_s"].is_number());
    assert!(v["objective_difference"].as_f64().unwrap() <= 1e-8);
    let rate = v["final_screening_rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn quick_verify_passes_in_time() {
    let start = Instant::now();
    let out = owlscreen(&["verify", "--quick"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(start.elapsed().as_secs_f64() < 30.0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn fault_injection_fails_safety_with_a_seed() {
    let out = owlscreen(&["verify", "--quick", "--fault", "skip-scaling", "--seed", "40"]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout.lines().find(|l| l.contains("screening_safety")).unwrap();
    assert!(line.starts_with("FAIL") && line.contains("(seed 4"), "{line}");
}
