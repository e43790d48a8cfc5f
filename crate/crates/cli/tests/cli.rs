use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use lockstep_hmc::Precision;
use lockstep_hmc_cli::commands::{
    bench_chains, grad_check, precision_demo, sample, write_sample_artifacts, BenchConfig,
    PrecisionDemoConfig,
};
use lockstep_hmc_cli::output::{read_bench, read_json, write_bench, SampleReport, TraceTable};
use lockstep_hmc_cli::{ModelSpec, Retention, RunConfig};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lockstep-hmc");

fn config(model: &str, chains: usize, draws: usize) -> RunConfig {
    RunConfig {
        model: model.parse().unwrap(),
        chains,
        draws,
        warmup: 200,
        step_size: 0.1,
        leapfrog_steps: 8,
        jitter: true,
        precision: Precision::Double,
        stable_ratio: true,
        adapt: true,
        seed: 7,
        data_seed: 0,
        output: None,
        retention: Retention::Full,
        threads: None,
        init_radius: 0.1,
    }
}

fn type_name(v: &Value) -> String {
    match v {
        Value::Null => "null".into(),
        Value::Bool(_) => "boolean".into(),
        Value::Number(n) if n.is_f64() => "number".into(),
        Value::Number(_) => "integer".into(),
        Value::String(_) => "string".into(),
        Value::Array(items) => {
            let mut kinds: Vec<String> = items.iter().map(type_name).collect();
            kinds.sort();
            kinds.dedup();
            format!("array<{}>", kinds.join("|"))
        }
        Value::Object(_) => "object".into(),
    }
}

fn schema(report: &Value) -> BTreeMap<String, String> {
    report
        .as_object()
        .expect("report is an object")
        .iter()
        .map(|(k, v)| (k.clone(), type_name(v)))
        .collect()
}

fn golden_schema() -> BTreeMap<String, String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report_schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn report_schema_is_frozen() {
    let out = sample(&config("synthetic:200,2,0.5", 4, 100)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sample_artifacts(&out, dir.path()).unwrap();
    let raw: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(schema(&raw), golden_schema());
}

#[test]
fn moments_only_report_keeps_the_schema_with_null_ess() {
    let mut cfg = config("gaussian:3", 4, 100);
    cfg.retention = Retention::MomentsOnly;
    let out = sample(&cfg).unwrap();
    assert!(out.trace.is_none());
    let raw = serde_json::to_value(&out.report).unwrap();
    let got = schema(&raw);
    let golden = golden_schema();
    assert_eq!(got.keys().collect::<Vec<_>>(), golden.keys().collect::<Vec<_>>());
    assert_eq!(got["ess"], "null");
    assert_eq!(got["ess_tau"], "null");
    assert_eq!(got["retention"], "string");
    assert_eq!(out.report.retention, "moments-only");
    assert!(out.report.diagnostics.max_rhat().is_some());
}

#[test]
fn artifacts_round_trip_through_readers() {
    let out = sample(&config("synthetic:100,3,0.5", 3, 40)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sample_artifacts(&out, dir.path()).unwrap();
    let trace = TraceTable::read_file(&dir.path().join("trace.csv")).unwrap();
    assert_eq!(&trace, out.trace.as_ref().unwrap());
    assert_eq!(trace.chains, 3);
    assert_eq!(trace.draws, 40);
    assert_eq!(trace.param_names[0], "log_tau");
    let report: SampleReport = read_json(&dir.path().join("report.json")).unwrap();
    assert_eq!(report, out.report);
}

#[test]
fn trace_rows_match_recorded_states() {
    let out = sample(&config("gaussian:2", 2, 30)).unwrap();
    let trace = out.trace.unwrap();
    let d = &out.report.diagnostics;
    assert_eq!(d.num_draws, 30);
    // A rejected draw repeats the previous state of that chain.
    for t in 1..trace.draws {
        for c in 0..trace.chains {
            if !trace.is_accepted[t * trace.chains + c] {
                for p in 0..trace.dim() {
                    assert_eq!(trace.value(t, c, p), trace.value(t - 1, c, p));
                }
            }
        }
    }
}

#[test]
fn gaussian_example_converges() {
    let mut cfg = config("gaussian:10", 4, 1000);
    cfg.warmup = 1000;
    cfg.leapfrog_steps = 32;
    let out = sample(&cfg).unwrap();
    let rhat = out.report.diagnostics.max_rhat().unwrap();
    assert!(rhat < 1.05, "max R-hat {rhat}");
}

fn run_bin(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(BIN).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        &["sample", "--draws", "0"][..],
        &["sample", "--chains", "0"],
        &["sample", "--model", "nonsense:1"],
        &["sample", "--jitter", "maybe"],
        &["grad-check", "--precision", "single"],
        &["bench-chains", "--chains", "4,2"],
        &["precision-demo", "--model", "gaussian:3"],
    ] {
        let (code, _, err) = run_bin(args);
        assert_eq!(code, 2, "{args:?}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn grad_check_exits_zero_and_reports() {
    let (code, out, _) = run_bin(&["grad-check", "--model", "synthetic:200,4,0.5"]);
    assert_eq!(code, 0);
    assert!(out.contains("max relative error"));
}

#[test]
fn sample_writes_files_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("run");
    let (code, out, err) = run_bin(&[
        "sample",
        "--model",
        "gaussian:2",
        "--chains",
        "2",
        "--draws",
        "20",
        "--warmup",
        "20",
        "--output",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("split R-hat"));
    assert!(dest.join("trace.csv").exists());
    let report: SampleReport = read_json(&dest.join("report.json")).unwrap();
    assert_eq!(report.diagnostics.num_chains, 2);

    let moments = dir.path().join("moments");
    let (code, _, _) = run_bin(&[
        "sample",
        "--model",
        "gaussian:2",
        "--draws",
        "20",
        "--retention",
        "moments-only",
        "--output",
        moments.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(!moments.join("trace.csv").exists());
    assert!(moments.join("report.json").exists());
}

fn trace_bytes(args: &[&str]) -> Vec<u8> {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("out");
    let mut full = vec!["sample"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--output", dest.to_str().unwrap()]);
    let (code, _, err) = run_bin(&full);
    assert_eq!(code, 0, "{err}");
    std::fs::read(dest.join("trace.csv")).unwrap()
}

#[test]
fn traces_are_byte_identical_across_runs_and_thread_counts() {
    let base = [
        "--model",
        "synthetic:150,3,0.5",
        "--chains",
        "11",
        "--draws",
        "60",
        "--warmup",
        "60",
        "--leapfrog-steps",
        "8",
    ];
    let a = trace_bytes(&base);
    let b = trace_bytes(&base);
    assert_eq!(a, b);
    let mut one = base.to_vec();
    one.extend_from_slice(&["--threads", "1"]);
    let mut four = base.to_vec();
    four.extend_from_slice(&["--threads", "4"]);
    assert_eq!(trace_bytes(&one), a);
    assert_eq!(trace_bytes(&four), a);
    let mut other = base.to_vec();
    other.extend_from_slice(&["--seed", "1"]);
    assert_ne!(trace_bytes(&other), a);
}

#[test]
fn single_precision_runs_are_reproducible() {
    let base = [
        "--model",
        "gaussian:4",
        "--precision",
        "single",
        "--chains",
        "5",
        "--draws",
        "30",
        "--warmup",
        "30",
    ];
    assert_eq!(trace_bytes(&base), trace_bytes(&base));
}

#[test]
fn bench_single_chain_count_gives_one_row() {
    let mut run = config("synthetic:100,4,0.5", 1, 5);
    run.leapfrog_steps = 4;
    let rows = bench_chains(&BenchConfig {
        run,
        chain_list: vec![1],
        repeats: 1,
    })
    .unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].chains, 1);
    assert!(rows[0].draws_per_second.unwrap() > 0.0);
    let mut buf = Vec::new();
    write_bench(&rows, &mut buf).unwrap();
    assert_eq!(read_bench(&buf[..]).unwrap(), rows);
}

#[test]
fn bench_rejects_bad_chain_lists() {
    let run = config("gaussian:2", 1, 5);
    for list in [vec![], vec![0], vec![4, 2]] {
        let err = bench_chains(&BenchConfig {
            run: run.clone(),
            chain_list: list,
            repeats: 1,
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

#[test]
fn grad_check_meets_tolerances() {
    let sparse = grad_check(&config("synthetic:1000,24,0.25", 1, 1)).unwrap();
    assert!(sparse.passed);
    assert!(sparse.max_error < 1e-5, "{}", sparse.max_error);
    assert_eq!(sparse.errors.len(), 20);
    let gauss = grad_check(&config("gaussian:6", 1, 1)).unwrap();
    assert!(gauss.max_error < 1e-8, "{}", gauss.max_error);
    let mut single = config("gaussian:6", 1, 1);
    single.precision = Precision::Single;
    assert_eq!(grad_check(&single).unwrap_err().exit_code(), 2);
}

#[test]
fn small_dataset_without_replication_agrees_across_paths() {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/small.csv");
    let report = precision_demo(&PrecisionDemoConfig {
        model: ModelSpec::GermanCredit(data),
        replication: Some(1),
        chains: 8,
        warmup: 100,
        draws: 100,
        ..PrecisionDemoConfig::default()
    })
    .unwrap();
    assert_eq!(report.replication, 1);
    assert!(report.warning.is_some());
    for path in [&report.naive, &report.stable] {
        assert!(path.max_abs_error < 1e-4, "{path:?}");
        assert_eq!(path.roundoff_flag_fraction, 0.0, "{path:?}");
        assert!(path.proposals > 0);
    }
}
