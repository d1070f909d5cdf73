use std::fs;
use std::path::Path;
use std::process::Command;

use probdfo_harness::report::{parse_summary, summary_pairs, RunStats};
use probdfo_harness::trace::parse_trace;
use probdfo_harness::{run_experiment, ExperimentConfig, ExperimentId, HarnessError, Method};

fn small(experiment: ExperimentId, seeds: &[u64]) -> ExperimentConfig {
    let mut config = ExperimentConfig::defaults(experiment);
    config.seeds = seeds.to_vec();
    config
}

/// Recomputes the `[summary]` section from the trace files in `dir`.
fn summary_from_traces(experiment: ExperimentId, dir: &Path) -> Vec<(String, String)> {
    let mut stats = Vec::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "trace") {
            let parsed = parse_trace(&fs::read_to_string(&path).unwrap()).unwrap();
            stats.push(RunStats::from_trace(&parsed).unwrap());
        }
    }
    stats.sort_by_key(|s| (s.method, s.seed));
    summary_pairs(experiment, &stats, None)
}

#[test]
fn empty_seed_list_is_a_config_error() {
    let config = small(ExperimentId::Rosenbrock2d, &[]);
    assert!(matches!(run_experiment(&config), Err(HarnessError::Config(_))));
}

#[test]
fn rosenbrock2d_writes_four_traces_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(ExperimentId::Rosenbrock2d, &[0]);
    config.out = Some(dir.path().to_path_buf());
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.runs.len(), 4);
    for stem in ["cs_seed0", "dsr_seed0", "rs_seed0", "trq_seed0"] {
        assert!(dir.path().join(format!("{stem}.trace")).exists(), "{stem}");
        assert!(dir.path().join(format!("{stem}.path")).exists(), "{stem}");
    }
    let text = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let summary = parse_summary(&text);
    for method in ["CS", "DSR", "RS", "TRQ"] {
        assert!(summary.iter().any(|(k, _)| k == &format!("{method}.median_evaluations")));
    }
}

#[test]
fn report_numbers_recompute_from_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small(ExperimentId::MfnVsRandom, &[0, 1, 2]);
    config.trust_region.budget = 600;
    config.out = Some(dir.path().to_path_buf());
    let report = run_experiment(&config).unwrap();
    let written = parse_summary(&fs::read_to_string(dir.path().join("report.txt")).unwrap());
    assert_eq!(written, report.summary_pairs());
    assert_eq!(summary_from_traces(config.experiment, dir.path()), written);
}

#[test]
fn sparse10d_reports_medians_per_method() {
    let config = small(ExperimentId::Sparse10d, &[0, 1, 2, 3, 4]);
    let report = run_experiment(&config).unwrap();
    let summaries = report.summaries();
    let methods: Vec<_> = summaries.iter().map(|s| s.method).collect();
    assert_eq!(methods, vec![Method::Rstr, Method::Gstr, Method::Mfn]);
    for s in &summaries {
        assert_eq!(s.runs, 5);
        assert!(s.median_iterations > 0.0 && s.median_evaluations > 0.0);
    }
    let rstr = &summaries[0];
    let mfn = &summaries[2];
    assert!(rstr.median_iterations < mfn.median_iterations);
    assert!(rstr.median_final_f <= 1e-8, "{rstr:?}");
}

#[test]
fn runs_are_deterministic_per_seed() {
    let mut config = small(ExperimentId::MfnVsRandom, &[5]);
    config.trust_region.budget = 400;
    let a = run_experiment(&config).unwrap();
    let b = run_experiment(&config).unwrap();
    assert_eq!(a, b);
    config.seeds = vec![6];
    let c = run_experiment(&config).unwrap();
    assert_ne!(a.runs[1].trace, c.runs[1].trace);
}

#[test]
fn diagnostics_experiment_fills_tables() {
    let mut config = small(ExperimentId::Diagnostics, &[0]);
    config.diagnostics.dims = vec![2];
    config.diagnostics.tail_trials = 2000;
    config.diagnostics.rate_dims = vec![2];
    config.diagnostics.rate_trials = 200;
    let report = run_experiment(&config).unwrap();
    let diag = report.diagnostics.unwrap();
    assert_eq!(diag.tails.len(), 1);
    assert_eq!(diag.tails[0].entries.len(), 3);
    assert_eq!(diag.rates.len(), 1);
    assert!(diag.rates[0].estimate.rate > 0.5);
}

#[test]
fn cli_runs_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("trq.conf");
    fs::write(&conf, "experiment = rosenbrock2d\nmethods = [TRQ]\nseeds = [0]\n").unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_probdfo"))
        .arg("--out")
        .arg(&out)
        .arg("run")
        .arg(&conf)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trq_seed0.trace").exists());
    assert!(out.join("report.txt").exists());
}

#[test]
fn cli_reports_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "experiment = rosenbrock2d\ngamma = 0.5\n").unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_probdfo")).arg("run").arg(&conf).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("line 2"));
}

#[test]
fn cli_cond_tail() {
    let output = Command::new(env!("CARGO_BIN_EXE_probdfo"))
        .args(["diagnose", "cond-tail", "--n", "2", "--p", "2", "--trials", "2000"])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("[summary]"));
}
