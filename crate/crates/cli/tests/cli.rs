//! End-to-end tests against the built binary: artifact formats, exit codes,
//! and byte determinism.

use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn dpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpa"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = dpa(args);
    assert!(
        out.status.success(),
        "expected success for {args:?}, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("artifacts are UTF-8")
}

fn json_ok(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout_ok(args)).expect("artifact parses as JSON")
}

/// Exit code plus parsed stderr diagnostics for a failing invocation.
fn failure(args: &[&str]) -> (i32, serde_json::Value) {
    let out = dpa(args);
    let code = out.status.code().expect("process exits");
    assert_ne!(code, 0, "expected failure for {args:?}");
    let stderr = String::from_utf8(out.stderr).expect("diagnostics are UTF-8");
    let diag = serde_json::from_str(stderr.trim()).unwrap_or_else(|e| {
        panic!("stderr is not machine-readable JSON ({e}): {stderr}")
    });
    (code, diag)
}

const TEN_PURE: &str = r#"{"type":"composed","parts":[
    {"type":"pure_dp","eps":0.1},{"type":"pure_dp","eps":0.1},
    {"type":"pure_dp","eps":0.1},{"type":"pure_dp","eps":0.1},
    {"type":"pure_dp","eps":0.1},{"type":"pure_dp","eps":0.1},
    {"type":"pure_dp","eps":0.1},{"type":"pure_dp","eps":0.1},
    {"type":"pure_dp","eps":0.1},{"type":"pure_dp","eps":0.1}]}"#;

#[test]
fn compose_basic_sums_ten_tenths_to_one() {
    let v = json_ok(&["compose", "--inline", TEN_PURE, "--method", "basic"]);
    assert_eq!(v["method"], "basic");
    assert_eq!(v["parts"], 10);
    assert_eq!(v["eps"].as_f64().unwrap(), 1.0);
    assert_eq!(v["delta"].as_f64().unwrap(), 0.0);
}

#[test]
fn compose_optimal_beats_basic() {
    let v = json_ok(&["compose", "--inline", TEN_PURE, "--method", "optimal", "--delta", "1e-6"]);
    let eps = v["eps"].as_f64().unwrap();
    assert!(eps > 0.0 && eps < 1.0, "got {eps}");
}

#[test]
fn amplify_adp_matches_closed_form() {
    let v = json_ok(&["amplify", "--inline", r#"{"type":"pure_dp","eps":1.0}"#, "--p", "0.5"]);
    let expected = f64::ln_1p(0.5 * f64::exp_m1(1.0));
    assert!((v["eps"].as_f64().unwrap() - expected).abs() < 1e-15);
    assert_eq!(v["delta"].as_f64().unwrap(), 0.0);
}

#[test]
fn fig1_csv_shape_and_row_invariants() {
    let text = stdout_ok(&["curve", "fig1", "--k-max", "40"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,basic,advanced,optimal,cdp,gaussian"));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 6);
        let (k, basic, advanced, optimal, cdp) =
            (cells[0], cells[1], cells[2], cells[3], cells[4]);
        assert_eq!(k, (i + 1) as f64);
        assert!((basic - 0.1 * k).abs() < 1e-12);
        assert!(optimal <= basic + 1e-12);
        assert!(cdp <= advanced + 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 40);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn fig2_csv_order_two_matches_closed_form() {
    let text = stdout_ok(&["curve", "fig2", "--alpha-max", "8"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,unamplified,exact,analytic,limit"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "2");
    let exact: f64 = first[2].parse().unwrap();
    let closed = f64::ln_1p(0.05 * 0.05 * f64::exp_m1(2.0 * 0.5));
    assert!((exact - closed).abs() < 1e-12);
    let unamplified: f64 = first[1].parse().unwrap();
    assert_eq!(unamplified, 1.0);
}

#[test]
fn amplify_csv_compares_the_closed_forms() {
    let text = stdout_ok(&[
        "amplify",
        "--inline",
        r#"{"type":"gaussian","sensitivity":1.0,"sigma":2.0}"#,
        "--method",
        "rdp",
        "--p",
        "0.05",
        "--alpha-max",
        "6",
        "--format",
        "csv",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha,eps_exact,eps_analytic,eps_large_alpha"));
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        let exact: f64 = cells[1].parse().unwrap();
        let analytic: f64 = cells[2].parse().unwrap();
        assert!(exact <= analytic + 1e-12);
    }

    // Without a zero-concentrated route the comparison is undefined.
    let (code, _) = failure(&[
        "amplify",
        "--inline",
        r#"{"type":"rdp","orders":[2.0,4.0],"eps_at":[0.1,0.3]}"#,
        "--method",
        "rdp",
        "--p",
        "0.05",
        "--format",
        "csv",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn runs_are_byte_identical() {
    let curve = stdout_ok(&["curve", "fig2", "--alpha-max", "16"]);
    assert_eq!(curve, stdout_ok(&["curve", "fig2", "--alpha-max", "16"]));
    let oracle_args = [
        "oracle",
        "--kind",
        "hockey",
        "--p-spec",
        r#"{"type":"unit_gaussian_shift","shift":1.0,"sigma":1.0}"#,
        "--q-spec",
        r#"{"type":"unit_gaussian_shift","shift":0.0,"sigma":1.0}"#,
        "--eps",
        "1",
        "--samples",
        "20000",
        "--seed",
        "9",
    ];
    assert_eq!(stdout_ok(&oracle_args), stdout_ok(&oracle_args));
}

#[test]
fn out_dir_env_var_resolves_relative_paths() {
    let dir = std::env::temp_dir().join(format!("dpa-cli-out-{}", std::process::id()));
    let out = Command::new(env!("CARGO_BIN_EXE_dpa"))
        .args(["curve", "fig2", "--alpha-max", "8", "--out", "nested/amp.csv"])
        .env("DPA_OUT_DIR", &dir)
        .output()
        .expect("binary spawns");
    assert!(out.status.success());
    assert!(out.stdout.is_empty(), "file delivery must not also print");
    let written = std::fs::read_to_string(dir.join("nested/amp.csv")).unwrap();
    assert_eq!(written, stdout_ok(&["curve", "fig2", "--alpha-max", "8"]));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_verb_exits_64() {
    let (code, diag) = failure(&["frobnicate"]);
    assert_eq!(code, 64);
    assert_eq!(diag["error"], "unknown-verb");
}

#[test]
fn domain_violations_exit_2_with_diagnostics() {
    let (code, diag) = failure(&["calibrate", "--sensitivity", "1", "--eps=-3", "--delta", "1e-6"]);
    assert_eq!(code, 2);
    assert_eq!(diag["error"], "invalid-parameter");
    assert!(diag["message"].as_str().unwrap().contains("eps"));

    // Mechanism-level violations arrive as a detail list.
    let (code, diag) = failure(&[
        "compose",
        "--inline",
        r#"{"type":"gaussian","sensitivity":1.0,"sigma":0.0}"#,
        "--method",
        "zcdp",
        "--delta",
        "1e-6",
    ]);
    assert_eq!(code, 2);
    assert_eq!(diag["details"][0], "sigma must be > 0");

    // Misapplied flags are caught before any computation.
    let (code, _) = failure(&[
        "oracle",
        "--kind",
        "renyi",
        "--p-spec",
        r#"{"type":"unit_gaussian_shift","shift":1.0,"sigma":1.0}"#,
        "--q-spec",
        r#"{"type":"unit_gaussian_shift","shift":0.0,"sigma":1.0}"#,
        "--alpha",
        "2",
        "--complement",
        "--samples",
        "2000",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn both_input_sources_rejected() {
    let (code, diag) = failure(&[
        "compose",
        "--input",
        "m.json",
        "--inline",
        r#"{"type":"pure_dp","eps":0.1}"#,
        "--method",
        "basic",
    ]);
    assert_eq!(code, 2);
    assert_eq!(diag["error"], "usage");
}

#[test]
fn missing_input_file_exits_66() {
    let (code, diag) =
        failure(&["compose", "--input", "/no/such/file.json", "--method", "basic"]);
    assert_eq!(code, 66);
    assert_eq!(diag["error"], "io");
}

#[test]
fn unwritable_output_exits_66() {
    // Delivery targets a path whose parent is a regular file, so directory
    // creation fails regardless of privileges.
    let blocker = std::env::temp_dir().join(format!("dpa-cli-blocker-{}", std::process::id()));
    std::fs::write(&blocker, "occupied").unwrap();
    let target: PathBuf = blocker.join("out.csv");
    let (code, diag) =
        failure(&["curve", "fig2", "--alpha-max", "8", "--out", target.to_str().unwrap()]);
    assert_eq!(code, 66);
    assert_eq!(diag["error"], "io");
    let _ = std::fs::remove_file(&blocker);
}

#[test]
fn mechanism_reads_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_dpa"))
        .args(["compose", "--input", "-", "--method", "basic"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .expect("binary spawns");
    std::io::Write::write_all(
        child.stdin.as_mut().unwrap(),
        br#"{"type":"pure_dp","eps":0.25}"#,
    )
    .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["eps"].as_f64().unwrap(), 0.25);
}

#[test]
fn selftest_reports_and_exits_clean() {
    let v = json_ok(&["selftest", "--pairs", "3", "--seed", "2"]);
    assert_eq!(v["failed"], 0);
    assert!(v["checks"].as_u64().unwrap() > 1000);
}

#[test]
fn dpsgd_renyi_route_beats_naive_baseline() {
    let v = json_ok(&["dpsgd", "--p", "0.01", "--sigma", "1", "--steps", "50", "--delta", "1e-5"]);
    let eps = v["eps"].as_f64().unwrap();
    let naive = v["naive_eps"].as_f64().unwrap();
    assert!(eps < naive, "renyi {eps} vs naive {naive}");
}

#[test]
fn pld_curve_delta_decreases_in_eps() {
    let text = stdout_ok(&[
        "curve",
        "pld",
        "--inline",
        r#"{"type":"gaussian","sensitivity":1.0,"sigma":2.0}"#,
        "--points",
        "5",
        "--eps-max",
        "2",
    ]);
    let deltas: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|line| line.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(deltas.len(), 5);
    for pair in deltas.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-15);
        assert!((0.0..=1.0).contains(&pair[1]));
    }
}

#[test]
fn seventeen_digit_floats_round_trip() {
    let v = json_ok(&["convert", "--inline", r#"{"type":"pure_dp","eps":0.1}"#, "--to", "zcdp"]);
    // eps^2/2 for eps = 0.1; the printed value must round-trip exactly.
    assert_eq!(v["rho"].as_f64().unwrap(), 0.1f64 * 0.1 / 2.0);
    let raw = stdout_ok(&["convert", "--inline", r#"{"type":"pure_dp","eps":0.1}"#, "--to", "zcdp"]);
    assert!(raw.contains("5.0000000000000010e-3"), "got {raw}");
}

#[test]
fn help_exits_zero() {
    let out = dpa(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("dpa"));
}
