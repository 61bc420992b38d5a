//! End-to-end tests of the compiled binary: exit codes, stderr diagnostics,
//! and byte-level reproducibility against the committed fixture outputs
//! under `tests/golden/`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_momsl"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn assert_matches_golden(produced: &Path, name: &str) {
    let got = fs::read(produced).unwrap();
    let want = fs::read(golden_dir().join(name)).unwrap();
    assert!(got == want, "{name} differs from the committed fixture");
}

/// Extract the value of a `key: value` line from fit output.
fn field(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("missing field {key} in:\n{out}"))
        .to_string()
}

#[test]
fn help_exits_zero_and_missing_flags_exit_two() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("bench"));

    // fit without --estimator
    let out = bin().args(["fit", "whatever.csv"]).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).to_lowercase().contains("usage"), "{}", stderr(&out));

    // bare binary: no subcommand
    let out = bin().output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_plot_kind_and_unknown_estimator_exit_two() {
    let out = bin()
        .args(["plot", "--kind", "pie-chart", "--out", "x.svg", "in.csv"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("pie-chart"));

    let out = bin().args(["fit", "--estimator", "ridge", "in.csv"]).output().unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_dataset_reports_the_line_number_on_stderr() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "y,x1,x2\n1,2,3\n4,oops,6\n").unwrap();
    let out = run_in(
        dir.path(),
        &["fit", "--estimator", "lasso", "--mu", "0.1", "bad.csv"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn config_errors_report_their_line_and_exit_two() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.conf"),
        "n = 50\nd = 8\ns = 2\nsigma_star = 0.5\ntrials = 1\nseed = 1\nestimators = mom-fixed\nn = 60\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["bench", "--config", "bad.conf", "--out", "o.csv"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("config line 8"), "{}", stderr(&out));
    assert!(stderr(&out).contains("duplicate key `n`"));
}

#[test]
fn infeasible_fit_schedule_exits_three() {
    let dir = TempDir::new().unwrap();
    let sim = run_in(
        dir.path(),
        &["simulate", "--n", "20", "--d", "64", "--sparsity", "4", "--sigma", "0.5", "--out", "tiny.csv"],
    );
    assert_eq!(code(&sim), 0);
    let out = run_in(
        dir.path(),
        &["fit", "--estimator", "mom-fixed", "--sparsity", "4", "--sigma-plus", "1", "tiny.csv"],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("blocks"));
}

#[test]
fn rates_with_too_few_distinct_x_exits_three() {
    let dir = TempDir::new().unwrap();
    let csv = "cell_id,estimator,trial,n,d,s,sigma_star,n_outliers,err_l1,err_l2,sigma_err,s_selected,runtime_ms,status,seed\n\
               a,mom-fixed,0,100,10,2,0.5,0,0.2,0.1,0.1,,0,ok,1\n\
               b,mom-fixed,0,200,10,2,0.5,0,0.1,0.05,0.05,,0,ok,2\n";
    fs::write(dir.path().join("two.csv"), csv).unwrap();
    let out = run_in(dir.path(), &["rates", "--x", "n", "--metric", "err-l2", "two.csv"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("at least 3"), "{}", stderr(&out));
}

#[test]
fn sqrt_lasso_on_a_noiseless_fixture_drives_sigma_to_zero() {
    let dir = TempDir::new().unwrap();
    let sim = run_in(
        dir.path(),
        &["simulate", "--n", "100", "--d", "10", "--sparsity", "3", "--sigma", "0", "--seed", "4", "--out", "clean.csv"],
    );
    assert_eq!(code(&sim), 0);
    let out = run_in(
        dir.path(),
        &["fit", "--estimator", "sqrt-lasso", "--mu", "0.1", "clean.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let sigma: f64 = field(&stdout(&out), "sigma_hat").parse().unwrap();
    assert!(sigma <= 1e-3, "sigma_hat = {sigma}");
}

#[test]
fn bench_row_count_is_cells_times_estimators_times_trials() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("one.conf"),
        "n = 50\nd = 8\ns = 2\nsigma_star = 0.5\ntrials = 1\nseed = 3\n\
         estimators = mom-fixed, sqrt-lasso, lasso\nmax_iters = 200\n",
    )
    .unwrap();
    let out = run_in(dir.path(), &["bench", "--config", "one.conf", "--out", "r.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(text.lines().count(), 4, "header + one row per estimator");
}

#[test]
fn bench_is_byte_identical_across_reruns_and_job_counts() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("g.conf"),
        "n = 40, 60\nd = 8\ns = 2\nsigma_star = 0.5\ntrials = 2\nseed = 9\n\
         estimators = mom-fixed, lasso\nmax_iters = 150\n",
    )
    .unwrap();
    for (out_name, jobs) in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "4")] {
        let out = run_in(
            dir.path(),
            &["bench", "--config", "g.conf", "--out", out_name, "--jobs", jobs],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.csv")).unwrap(), "rerun changed bytes");
    assert_eq!(a, fs::read(dir.path().join("c.csv")).unwrap(), "job count changed bytes");
}

#[test]
fn rates_recovers_a_linear_sparsity_law() {
    // err = 0.1·s exactly → slope 1 against s
    let dir = TempDir::new().unwrap();
    let mut csv = String::from(
        "cell_id,estimator,trial,n,d,s,sigma_star,n_outliers,err_l1,err_l2,sigma_err,s_selected,runtime_ms,status,seed\n",
    );
    for s in [2usize, 4, 8] {
        csv.push_str(&format!("c{s},mom-fixed,0,100,64,{s},0.5,0,1,{},0.1,,0,ok,1\n", 0.1 * s as f64));
    }
    fs::write(dir.path().join("s.csv"), csv).unwrap();
    let out = run_in(dir.path(), &["rates", "--x", "s", "--metric", "err-l2", "s.csv"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let line = stdout(&out).lines().nth(1).unwrap().to_string();
    let slope: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() < 1e-12, "slope = {slope}");
}

#[test]
fn breakdown_plot_has_one_series_per_estimator() {
    let dir = TempDir::new().unwrap();
    let mut csv = String::from(
        "cell_id,estimator,trial,n,d,s,sigma_star,n_outliers,err_l1,err_l2,sigma_err,s_selected,runtime_ms,status,seed\n",
    );
    for (est, base) in [("mom-fixed", 0.1), ("sqrt-lasso", 0.2)] {
        for m in [0usize, 10, 20] {
            csv.push_str(&format!(
                "o{m},{est},0,100,10,2,0.5,{m},1,{},0.1,,0,ok,1\n",
                base + m as f64 / 50.0
            ));
        }
    }
    fs::write(dir.path().join("b.csv"), csv).unwrap();
    let out = run_in(
        dir.path(),
        &["plot", "--kind", "error-vs-outliers", "--out", "b.svg", "b.csv"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let svg = fs::read_to_string(dir.path().join("b.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    assert_eq!(svg.matches("<circle").count(), 6);
}

#[test]
fn simulate_and_fit_match_the_committed_fixtures() {
    let dir = TempDir::new().unwrap();
    let sim = run_in(
        dir.path(),
        &["simulate", "--n", "120", "--d", "30", "--sparsity", "4", "--sigma", "0.5",
          "--contamination", "response:6:1000", "--seed", "7", "--out", "data.csv"],
    );
    assert_eq!(code(&sim), 0, "{}", stderr(&sim));
    assert_matches_golden(&dir.path().join("data.csv"), "data.csv");

    let fit = run_in(
        dir.path(),
        &["fit", "--estimator", "mom-fixed", "--sparsity", "4", "--sigma-plus", "2",
          "--blocks", "auto", "--seed", "7", "data.csv"],
    );
    assert_eq!(code(&fit), 0, "{}", stderr(&fit));
    let want = fs::read_to_string(golden_dir().join("fit.txt")).unwrap();
    assert_eq!(stdout(&fit), want, "fit output differs from the committed fixture");
}

#[test]
fn trace_export_and_trace_plot_match_the_committed_fixtures() {
    let dir = TempDir::new().unwrap();
    fs::copy(golden_dir().join("data.csv"), dir.path().join("data.csv")).unwrap();
    let fit = run_in(
        dir.path(),
        &["fit", "--estimator", "mom-fixed", "--sparsity", "4", "--sigma-plus", "2",
          "--blocks", "auto", "--seed", "7", "--max-iters", "300", "--trace", "trace.csv", "data.csv"],
    );
    assert_eq!(code(&fit), 0, "{}", stderr(&fit));
    assert_matches_golden(&dir.path().join("trace.csv"), "trace.csv");

    let plot = run_in(dir.path(), &["plot", "--kind", "trace", "--out", "trace.svg", "trace.csv"]);
    assert_eq!(code(&plot), 0, "{}", stderr(&plot));
    assert_matches_golden(&dir.path().join("trace.svg"), "trace.svg");
}

#[test]
fn bench_rates_and_plot_match_the_committed_fixtures() {
    let dir = TempDir::new().unwrap();
    let conf = golden_dir().join("bench_tiny.conf");
    let out = run_in(
        dir.path(),
        &["bench", "--config", conf.to_str().unwrap(), "--out", "bench_tiny.csv", "--jobs", "2"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_matches_golden(&dir.path().join("bench_tiny.csv"), "bench_tiny.csv");

    let plot = run_in(
        dir.path(),
        &["plot", "--kind", "error-vs-n", "--metric", "err-l2", "--out", "e.svg", "bench_tiny.csv"],
    );
    assert_eq!(code(&plot), 0, "{}", stderr(&plot));
    assert_matches_golden(&dir.path().join("e.svg"), "error_vs_n.svg");

    let rates_in = golden_dir().join("rates_input.csv");
    let rates = run_in(dir.path(), &["rates", "--x", "n", "--metric", "err-l2", rates_in.to_str().unwrap()]);
    assert_eq!(code(&rates), 0, "{}", stderr(&rates));
    let want = fs::read_to_string(golden_dir().join("rates.txt")).unwrap();
    assert_eq!(stdout(&rates), want);
}

#[test]
fn mom_est_sigma_and_adaptive_run_from_the_cli() {
    let dir = TempDir::new().unwrap();
    let sim = run_in(
        dir.path(),
        &["simulate", "--n", "200", "--d", "16", "--sparsity", "2", "--sigma", "0.5",
          "--seed", "12", "--out", "d.csv"],
    );
    assert_eq!(code(&sim), 0);
    let est = run_in(
        dir.path(),
        &["fit", "--estimator", "mom-est-sigma", "--sparsity", "2", "--max-iters", "400", "d.csv"],
    );
    assert_eq!(code(&est), 0, "{}", stderr(&est));
    let sp: f64 = field(&stdout(&est), "sigma_plus").parse().unwrap();
    assert!(sp > 0.0, "estimated noise bound should be positive");

    let ada = run_in(
        dir.path(),
        &["fit", "--estimator", "mom-adaptive", "--sigma-plus", "1", "--s-plus", "4",
          "--max-iters", "400", "d.csv"],
    );
    assert_eq!(code(&ada), 0, "{}", stderr(&ada));
    let s_sel: usize = field(&stdout(&ada), "s_selected").parse().unwrap();
    assert!(s_sel.is_power_of_two() && s_sel <= 8, "s_selected = {s_sel}");
}
