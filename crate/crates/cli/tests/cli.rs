use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nonloc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NONLOC_THREADS")
        .output()
        .expect("binary runs")
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_u(path: &Path, xs: impl Iterator<Item = f64>, f: impl Fn(f64) -> f64) {
    let mut s = String::from("x,u1\n");
    for x in xs {
        s.push_str(&format!("{:.16e},{:.16e}\n", x, f(x)));
    }
    std::fs::write(path, s).unwrap();
}

fn nodes(a: f64, b: f64, delta: f64, m: usize) -> impl Iterator<Item = f64> {
    let (lo, hi) = (a - delta, b + delta);
    (0..m).map(move |i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
}

#[test]
fn preset_run_writes_solution_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(&["preset", "run", "arctan_semilinear", "--out", "run"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("run");
    for f in ["solution.csv", "residual.csv", "trace.json", "report.json", "summary.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let s = summary(&dir);
    assert_eq!(s["command"], "preset run arctan_semilinear");
    assert_eq!(s["converged"], true);
    assert!(s["key_metrics"]["residual_inf"].as_f64().unwrap() <= 1e-8);
    assert_eq!(s["config"]["domain"]["node_count"], 401);
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verification"]["passed"], true);
}

#[test]
fn convexity_check_passes_for_arctan() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(&["check", "convexity", "--preset", "arctan_semilinear", "--out", "c"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("c"));
    assert_eq!(s["passed"], true);
    assert_eq!(s["key_metrics"]["violations"], 0.0);
}

#[test]
fn malformed_config_exits_2_without_files() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.json"), r#"{"problem": {"preset_name": "arctan_semilinear"}, "solvr": {}}"#).unwrap();
    let out = nonloc(&["minimize", "--config", "bad.json", "--out", "m"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown field"));
    assert!(!tmp.path().join("m").exists());

    std::fs::write(tmp.path().join("trunc.json"), "{\"solver\": ").unwrap();
    let out = nonloc(&["minimize", "--config", "trunc.json", "--out", "m"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("m").exists());
}

#[test]
fn minimize_reports_non_convergence_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"problem": {"preset_name": "quasilinear_potential"}, "solver": {"max_iters": 2}}"#,
    )
    .unwrap();
    let out = nonloc(&["minimize", "--config", "cfg.json", "--out", "m"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let s = summary(&tmp.path().join("m"));
    assert_eq!(s["converged"], false);
    assert_eq!(s["config"]["solver"]["max_iters"], 2);
    assert_eq!(s["config"]["solver"]["tol"], 1e-10);
}

#[test]
fn minimize_from_config_converges() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{"problem": {"preset_name": "double_power"}, "output": {"dir": "dp", "emit": ["solution_csv"]}}"#,
    )
    .unwrap();
    let out = nonloc(&["minimize", "--config", "cfg.json"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("dp");
    assert!(dir.join("solution.csv").exists());
    assert!(!dir.join("trace.json").exists());
    assert_eq!(summary(&dir)["converged"], true);
}

#[test]
fn apply_laplacian_of_constant_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    write_u(&tmp.path().join("u.csv"), nodes(-1.0, 1.0, 1.0, 41), |_| 3.5);
    let out = nonloc(
        &["apply", "laplacian", "--u", "u.csv", "--kernel", "gaussian:0.5", "--domain", "-1,1,1,41", "--out", "a"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(tmp.path().join("a/laplacian.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,u1"));
    for line in lines {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn apply_gradient_then_divergence() {
    let tmp = tempfile::tempdir().unwrap();
    write_u(&tmp.path().join("u.csv"), nodes(-1.0, 1.0, 1.0, 21), |x| x * x);
    let common = ["--kernel", "gaussian:0.5", "--domain", "-1,1,1,21"];
    let mut args = vec!["apply", "gradient", "--u", "u.csv", "--out", "g"];
    args.extend(common);
    assert_eq!(nonloc(&args, tmp.path()).status.code(), Some(0));
    let mut args = vec!["apply", "divergence", "--field", "g/gradient.csv", "--out", "d"];
    args.extend(common);
    let out = nonloc(&args, tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("d/divergence.csv").exists());
}

#[test]
fn p_laplacian_with_p_one_is_a_parameter_error() {
    let tmp = tempfile::tempdir().unwrap();
    write_u(&tmp.path().join("u.csv"), nodes(-1.0, 1.0, 1.0, 21), |x| x);
    let out = nonloc(
        &["apply", "p_laplacian", "--p", "1", "--u", "u.csv", "--kernel", "gaussian", "--domain", "-1,1,1,21", "--out", "p"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parameter"));
    assert!(!tmp.path().join("p").exists());
}

#[test]
fn parse_errors_name_file_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("u.csv"), "x,u1\n-0.5,1.0\n0.0,oops\n0.5,1\n1,1\n1.5,1\n").unwrap();
    let out = nonloc(
        &["apply", "laplacian", "--u", "u.csv", "--kernel", "gaussian", "--domain", "0,1,0.5,5"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("u.csv:3"), "{err}");
}

#[test]
fn residual_of_a_preset_solution() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(nonloc(&["preset", "run", "illposed", "--out", "s"], tmp.path()).status.code(), Some(0));
    std::fs::write(tmp.path().join("cfg.json"), r#"{"problem": {"preset_name": "illposed"}}"#).unwrap();
    let out = nonloc(&["residual", "--config", "cfg.json", "--u", "s/solution.csv", "--out", "r"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(summary(&tmp.path().join("r"))["passed"], true);
}

#[test]
fn semilinear_custom_source() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("cfg.json"),
        r#"{
            "domain": {"a": -1, "b": 1, "collar_width": 3, "node_count": 201},
            "kernel": {"type": "gaussian", "sigma": 1.0},
            "problem": {"semilinear": {"source": {"type": "linear", "h": 0.5, "slope": 1.0}, "collar_value": 0.0}}
        }"#,
    )
    .unwrap();
    let out = nonloc(&["semilinear", "--config", "cfg.json", "--out", "s"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&tmp.path().join("s"));
    assert!(s["key_metrics"]["residual_inf"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn preset_list_and_describe() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(&["preset", "list", "--out", "l"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let listing: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(listing.as_array().unwrap().len(), 5);
    let out = nonloc(&["preset", "describe", "double_power", "--out", "d"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let d: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(d["info"]["name"], "double_power");
    let out = nonloc(&["preset", "describe", "nope", "--out", "x"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!tmp.path().join("x").exists());
}

#[test]
fn illposed_demo_reports_growth() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(&["demo-illposed", "--out", "i"], tmp.path());
    let s = summary(&tmp.path().join("i"));
    assert_eq!(s["key_metrics"]["young_violations"], 0.0);
    assert!(s["key_metrics"]["min_growth_factor"].as_f64().unwrap() >= 1.3);
    assert_eq!(out.status.code(), Some(if s["passed"] == true { 0 } else { 1 }));
}

#[test]
fn seed_flag_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(
        &["check", "growth", "--preset", "quasilinear_potential", "--seed", "17", "--trials", "300", "--out", "g"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&tmp.path().join("g"));
    assert_eq!(s["config"]["solver"]["seed"], 17);
    assert_eq!(s["config"]["solver"]["trials"], 300);
}

#[test]
fn bad_thread_count_is_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = nonloc(&["preset", "list", "--threads", "0"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
}
