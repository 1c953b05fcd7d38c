//! End-to-end tests of the `l1qr` binary: artifact shapes, exit codes,
//! config-file precedence, determinism across reruns and thread counts,
//! and the CSV error surface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_l1qr"));
    // Keep the environment from leaking thread settings into tests.
    cmd.env_remove("L1QR_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        stderr_of(out)
    );
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// A deterministic Gaussian-ish CSV: y regressed on p AR(1)-correlated
/// columns with two active coefficients.
fn write_gaussian_csv(path: &Path, seed: u64, n: usize, p: usize) {
    use rand::Rng;
    let mut rng = l1qr::rng::stream_rng(seed, 0);
    let mut out = String::new();
    out.push_str("y,");
    out.push_str(
        &(0..p)
            .map(|j| format!("x{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    out.push('\n');
    let normal = |rng: &mut l1qr::rng::StreamRng| {
        // Box–Muller from two uniforms.
        let u1: f64 = rng.random::<f64>().max(1e-12);
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    for _ in 0..n {
        let mut x = Vec::with_capacity(p);
        let mut prev = 0.0;
        for j in 0..p {
            let w = normal(&mut rng);
            let v = if j == 0 { w } else { 0.5 * prev + 0.75f64.sqrt() * w };
            prev = v;
            x.push(v);
        }
        let y = 1.0 + x[0] - 0.8 * x[1.min(p - 1)] + 0.3 * normal(&mut rng);
        out.push_str(&y.to_string());
        for v in &x {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    fs::write(path, out).unwrap();
}

struct Workdir {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workdir {
    fn new() -> Workdir {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Workdir { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn path_str(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }
}

#[test]
fn fit_artifact_shape_and_quantile_range() {
    let w = Workdir::new();
    let csv = w.path("d.csv");
    write_gaussian_csv(&csv, 1, 40, 6);
    let out = run(&[
        "fit",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "y",
        "--add-intercept",
        "--lambda",
        "2.0",
        "--quantiles",
        "0.2:0.8:0.3",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    assert_eq!(v["config"]["command"], "fit");
    assert_eq!(v["config"]["add_intercept"], true);
    assert_eq!(v["response"], "y");
    assert_eq!(v["columns"][0], "(intercept)");
    assert_eq!(v["p"], 7);
    assert_eq!(v["lambda"]["source"], "fixed");
    let fits = v["fits"].as_array().unwrap();
    let us: Vec<f64> = fits.iter().map(|f| f["u"].as_f64().unwrap()).collect();
    assert_eq!(us, vec![0.2, 0.5, 0.8]);
    for f in fits {
        // λ_u = λ√(u(1−u)) and a post block is present by default.
        let u = f["u"].as_f64().unwrap();
        let lam = f["lambda_scaled"].as_f64().unwrap();
        assert!((lam - 2.0 * (u * (1.0 - u)).sqrt()).abs() < 1e-12);
        assert!(f["post"].is_object());
        assert!(f["dense"].is_null());
        // Sparse keys are stringified column indices within range.
        for key in f["coefficients"].as_object().unwrap().keys() {
            assert!(key.parse::<usize>().unwrap() < 7);
        }
    }
}

#[test]
fn fit_dense_and_threshold_options() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 2, 30, 4);
    let out = run(&[
        "fit",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "0",
        "--lambda",
        "1.0",
        "--dense",
        "--threshold",
        "0.05",
        "--post",
        "false",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    let f = &v["fits"][0];
    assert_eq!(f["dense"].as_array().unwrap().len(), 4);
    assert!(f["post"].is_null());
    assert!(f["thresholded"].is_object());
    // Thresholding at 0.05 keeps a subset of the support.
    let kept = f["thresholded"].as_object().unwrap().len();
    assert!(kept <= f["coefficients"].as_object().unwrap().len());
}

#[test]
fn fit_csv_format_is_a_long_table() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 3, 30, 4);
    let out = run(&[
        "fit",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "y",
        "--lambda",
        "1.0",
        "--format",
        "csv",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "u,lambda_scaled,column,name,coefficient,post_coefficient,thresholded_coefficient"
    );
    assert!(lines.next().is_some(), "at least one coefficient row");
}

#[test]
fn calibrate_reruns_are_byte_identical_and_record_all_draws() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 4, 100, 50);
    let args = [
        "calibrate",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "y",
        "--alpha",
        "0.1",
        "--c",
        "2",
        "--r",
        "300",
        "--seed",
        "7",
        "--quantiles",
        "0.1:0.9:0.1",
    ];
    let out_a = bin().args(args).output().unwrap();
    assert_exit(&out_a, 0);
    let out_b = bin().args(args).output().unwrap();
    assert_exit(&out_b, 0);
    assert_eq!(
        out_a.stdout, out_b.stdout,
        "same config and seed must reproduce bytes"
    );

    let v = json_of(&out_a);
    assert!(v["calibration"]["lambda0"].as_f64().unwrap() > 0.0);
    assert_eq!(v["calibration"]["lambda_samples"].as_array().unwrap().len(), 300);
    assert!(v["theoretical_scale"].as_f64().unwrap() > 0.0);

    // The artifact is also identical across worker-thread counts,
    // whether set by flag or by the environment variable.
    let out_c = bin().args(args).args(["--threads", "3"]).output().unwrap();
    assert_exit(&out_c, 0);
    assert_eq!(out_a.stdout, out_c.stdout);

    let out_d = bin().args(args).env("L1QR_THREADS", "2").output().unwrap();
    assert_exit(&out_d, 0);
    assert_eq!(out_a.stdout, out_d.stdout);

    // Writing to a file produces the same artifact body except for the
    // echoed output path.
    let out_e = bin().args(args).args(["--output", &w.path_str("e.json")]).output().unwrap();
    assert_exit(&out_e, 0);
    let from_file: Value = serde_json::from_slice(&fs::read(w.path("e.json")).unwrap()).unwrap();
    assert_eq!(from_file["calibration"], v["calibration"]);
}

#[test]
fn calibrate_without_response_uses_every_column() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 5, 30, 4);
    let out = run(&[
        "calibrate",
        "--input",
        &w.path_str("d.csv"),
        "--r",
        "50",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    assert_eq!(v["p"], 5, "y plus four design columns");
}

#[test]
fn config_file_merges_under_flags() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 6, 40, 5);
    fs::write(
        w.path("cfg.json"),
        format!(
            r#"{{"input": {:?}, "response": "y", "alpha": 0.5, "r": 150, "seed": 9}}"#,
            w.path_str("d.csv")
        ),
    )
    .unwrap();
    let out = run(&[
        "calibrate",
        "--config",
        &w.path_str("cfg.json"),
        "--alpha",
        "0.2",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    // Flag beats file; file beats default; defaults fill the rest.
    assert_eq!(v["config"]["alpha"], 0.2);
    assert_eq!(v["config"]["r"], 150);
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["c"], 2.0);
    assert_eq!(v["calibration"]["n_sims"], 150);
}

#[test]
fn config_file_with_unknown_key_is_rejected() {
    let w = Workdir::new();
    fs::write(w.path("cfg.json"), r#"{"respnse": "y"}"#).unwrap();
    let out = run(&["calibrate", "--config", &w.path_str("cfg.json")]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("respnse"), "{}", stderr_of(&out));
}

#[test]
fn path_with_large_lambda0_starts_empty_and_grows() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 7, 50, 6);
    // No intercept column: with every column penalized, a large enough
    // λ0 selects nothing at the first step.
    let out = run(&[
        "path",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "y",
        "--lambda0",
        "400",
        "--k",
        "5",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    assert_eq!(v["lambda0_source"], "fixed");
    let steps = v["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 5);
    // λ0/1, λ0/2, …, λ0/5.
    for (i, s) in steps.iter().enumerate() {
        let lam = s["lambda"].as_f64().unwrap();
        assert!((lam - 400.0 / (i + 1) as f64).abs() < 1e-9);
        assert_eq!(s["step"], (i + 1) as u64);
    }
    assert!(steps[0]["support"].as_array().unwrap().is_empty());
    assert!(
        steps.last().unwrap()["support"].as_array().unwrap().len()
            >= steps[0]["support"].as_array().unwrap().len()
    );
}

#[test]
fn simulate_table_rows_follow_the_fixed_estimator_order() {
    let w = Workdir::new();
    let out = run(&[
        "simulate",
        "--n",
        "40",
        "--p",
        "10",
        "--s",
        "2",
        "--n-reps",
        "3",
        "--r",
        "100",
        "--format",
        "csv",
        "--output",
        &w.path_str("table.csv"),
        "--histograms",
        &w.path_str("hist.csv"),
    ]);
    assert_exit(&out, 0);
    let table = fs::read_to_string(w.path("table.csv")).unwrap();
    let estimators: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(estimators, vec!["canonical", "penalized", "post", "oracle"]);
    let hist = fs::read_to_string(w.path("hist.csv")).unwrap();
    assert!(hist.starts_with("estimator,histogram,bin,count"), "{hist}");
}

#[test]
fn simulate_json_reruns_match_across_thread_counts() {
    let args = [
        "simulate",
        "--n",
        "30",
        "--p",
        "8",
        "--s",
        "2",
        "--n-reps",
        "4",
        "--r",
        "80",
        "--estimators",
        "penalized,post",
        "--master-seed",
        "11",
    ];
    let a = bin().args(args).args(["--threads", "1"]).output().unwrap();
    assert_exit(&a, 0);
    let b = bin().args(args).args(["--threads", "4"]).output().unwrap();
    assert_exit(&b, 0);
    assert_eq!(a.stdout, b.stdout);
    let v = json_of(&a);
    assert_eq!(v["report"]["n_reps_used"], 4);
    assert_eq!(v["report"]["estimates"][0]["estimator"], "penalized");
    assert_eq!(v["report"]["estimates"][1]["estimator"], "post");
    assert!(v["report"]["lambda"]["min"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_fixed_rule_requires_lambda() {
    let out = run(&[
        "simulate", "--n", "30", "--p", "8", "--s", "2", "--n-reps", "2",
        "--penalty-rule", "fixed",
    ]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("--lambda"), "{}", stderr_of(&out));
}

#[test]
fn diagnose_empirical_and_population_matrices() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 8, 60, 6);
    let out = run(&[
        "diagnose",
        "--input",
        &w.path_str("d.csv"),
        "--response",
        "y",
        "--k",
        "2",
        "--mode",
        "exact",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    assert_eq!(v["p"], 6);
    let max = v["max"]["value"].as_f64().unwrap();
    let min = v["min"]["value"].as_f64().unwrap();
    assert!(max >= min && min >= 0.0, "max {max}, min {min}");
    assert_eq!(v["max"]["mode"], "exact");
    assert_eq!(v["max"]["subset"].as_array().unwrap().len(), 2);

    let out = run(&[
        "diagnose", "--ar1-rho", "0.5", "--dim", "12", "--k", "12", "--mode", "exact",
        "--format", "csv",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("extreme,k,value,mode"));
    // Full-spectrum bounds of the AR(1) population matrix at ρ=0.5.
    let max: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    let min: f64 = rows[2].split(',').nth(2).unwrap().parse().unwrap();
    assert!(max <= 3.0 + 1e-9 && min >= 1.0 / 6.0 - 1e-9, "[{min}, {max}]");
}

#[test]
fn diagnose_requires_exactly_one_matrix_source() {
    let out = run(&["diagnose", "--k", "2"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("matrix source"), "{}", stderr_of(&out));

    let out = run(&["diagnose", "--ar1-rho", "0.5", "--k", "2"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("--dim"), "{}", stderr_of(&out));
}

#[test]
fn usage_errors_exit_one_with_named_causes() {
    let w = Workdir::new();

    let out = run(&["fit", "--input", "/nonexistent/x.csv", "--response", "y"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("x.csv"), "{}", stderr_of(&out));

    write_gaussian_csv(&w.path("d.csv"), 9, 10, 3);
    let out = run(&["fit", "--input", &w.path_str("d.csv"), "--response", "zzz"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("\"zzz\""), "{}", stderr_of(&out));

    let out = run(&["fit", "--input", &w.path_str("d.csv"), "--response", "9"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("index 9"), "{}", stderr_of(&out));

    fs::write(w.path("na.csv"), "y,a\n1,2\n3,NA\n4,5\n").unwrap();
    let out = run(&["fit", "--input", &w.path_str("na.csv"), "--response", "y"]);
    assert_exit(&out, 1);
    let msg = stderr_of(&out);
    assert!(msg.contains("line 3") && msg.contains("\"NA\""), "{msg}");

    fs::write(w.path("tiny.csv"), "y,a\n1,2\n").unwrap();
    let out = run(&["fit", "--input", &w.path_str("tiny.csv"), "--response", "y"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("at least 2"), "{}", stderr_of(&out));

    let out = run(&["fit", "--input", &w.path_str("d.csv"), "--response", "y", "--quantiles", "0:1:0.1"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("quantile spec"), "{}", stderr_of(&out));

    // Missing subcommand and unknown flags are usage errors too.
    assert_exit(&run(&[]), 1);
    assert_exit(&run(&["fit", "--bogus"]), 1);
}

#[test]
fn help_and_version_exit_zero() {
    assert_exit(&run(&["--help"]), 0);
    assert_exit(&run(&["--version"]), 0);
    assert_exit(&run(&["fit", "--help"]), 0);
    assert_exit(&run(&["simulate", "--help"]), 0);
}

#[test]
fn calibrate_csv_format_lists_draws() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 10, 20, 3);
    let out = run(&[
        "calibrate", "--input", &w.path_str("d.csv"), "--response", "y",
        "--r", "25", "--format", "csv",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "draw,lambda_sample");
    assert_eq!(rows.len(), 26);
}

#[test]
fn output_files_are_written_atomically_with_no_leftovers() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 11, 20, 3);
    let out = run(&[
        "fit", "--input", &w.path_str("d.csv"), "--response", "y",
        "--lambda", "1", "--output", &w.path_str("out/fit.json"),
    ]);
    // Parent directory does not exist: a clean usage error, nothing
    // half-written anywhere.
    assert_exit(&out, 1);
    assert!(!w.path("out").exists());

    fs::create_dir(w.path("out")).unwrap();
    let out = run(&[
        "fit", "--input", &w.path_str("d.csv"), "--response", "y",
        "--lambda", "1", "--output", &w.path_str("out/fit.json"),
    ]);
    assert_exit(&out, 0);
    let entries: Vec<String> = fs::read_dir(w.path("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(entries, vec!["fit.json"], "no temp files left behind");
    let v: Value = serde_json::from_slice(&fs::read(w.path("out/fit.json")).unwrap()).unwrap();
    assert_eq!(v["config"]["command"], "fit");
}

#[test]
fn fit_with_calibrated_lambda_echoes_the_calibration() {
    let w = Workdir::new();
    write_gaussian_csv(&w.path("d.csv"), 12, 60, 8);
    let out = run(&[
        "fit", "--input", &w.path_str("d.csv"), "--response", "y",
        "--add-intercept", "--r", "120", "--seed", "5",
    ]);
    assert_exit(&out, 0);
    let v = json_of(&out);
    assert_eq!(v["lambda"]["source"], "calibrated");
    assert!(v["lambda"]["value"].as_f64().unwrap() > 0.0);
    assert_eq!(v["lambda"]["calibration"]["n_sims"], 120);
    assert_eq!(v["lambda"]["calibration"]["seed"], 5);
}
