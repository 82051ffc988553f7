use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_besselop");

const TASKS: [&str; 13] = [
    "bessel",
    "transform-params",
    "green-table",
    "resolve",
    "evolve",
    "verify-kernel",
    "verify-domination",
    "verify-conjugation",
    "verify-commutation",
    "verify-pointwise",
    "verify-splitting",
    "estimate-rbound",
    "verify-multiplier-derivative",
];

fn run_config(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    Command::new(BIN).arg("--config").arg(&cfg).arg("--out").arg(&out).args(extra).output().unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out/report.json")).unwrap()).unwrap()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let out = Command::new(BIN).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("--config") && err.contains("verify-commutation"), "{err}");
}

#[test]
fn list_shows_all_tasks() {
    let out = Command::new(BIN).arg("--list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    let listed: Vec<&str> = text.lines().skip(1).map(str::trim).collect();
    assert_eq!(listed, TASKS);
}

#[test]
fn every_task_dispatches() {
    let base =
        r#""operator": {"alpha": 0, "c": 1}, "space": {"p": 2, "m": 1}, "mesh": {"y_max": 10, "n": 64, "grading": 2}"#;
    for name in TASKS {
        let dir = tempfile::tempdir().unwrap();
        let extra = match name {
            "verify-kernel" | "verify-domination" => r#", "n_steps": 20"#,
            "estimate-rbound" => r#", "draws": 2"#,
            _ => "",
        };
        let out = run_config(dir.path(), &format!(r#"{{{base}, "task": {{"name": "{name}"{extra}}}}}"#), &[]);
        let code = out.status.code().unwrap();
        assert!(code == 0 || code == 2, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(report(dir.path())["task"], name);
    }
}

#[test]
fn commutation_passes_with_small_defect() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        r#"{"operator": {"alpha": 1, "c": 1.5}, "mesh": {"y_max": 10, "n": 400, "grading": 2},
            "task": {"name": "verify-commutation", "lambda": [1, 2], "mu": 3}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert!(r["reports"][0]["constants"]["defect"].as_f64().unwrap() <= 1e-10);
    assert_eq!(r["config"]["operator"]["alpha"], 1.0);
}

#[test]
fn green_table_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config(
        dir.path(),
        r#"{"operator": {"alpha": 0, "c": 0}, "task": {"name": "green-table", "lambda": 1}}"#,
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(dir.path().join("out/green.csv")).unwrap();
    let mut found = false;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let v: Vec<f64> = rec.iter().map(|s| s.parse().unwrap()).collect();
        if v[0] == 0.5 && v[1] == 1.0 {
            // cosh(1/2) e^{-1}
            assert!((v[2] - 0.414830).abs() < 5e-7, "{}", v[2]);
            assert_eq!(v[3], 0.0);
            found = true;
        }
    }
    assert!(found);
}

#[test]
fn range_boundary_rejected_for_solve_tasks() {
    let dir = tempfile::tempdir().unwrap();
    // (m+1)/p = 1.5 = c + 1 - alpha
    let cfg = r#"{"operator": {"alpha": 0, "c": 0.5}, "space": {"p": 2, "m": 2}, "task": {"name": "resolve"}}"#;
    let out = run_config(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("strict inequalities"));
    // The same space only warns for a verify task.
    let cfg = r#"{"operator": {"alpha": 0, "c": 0.5}, "space": {"p": 2, "m": 2}, "mesh": {"y_max": 10, "n": 200, "grading": 2},
                  "task": {"name": "verify-commutation"}}"#;
    let out = run_config(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(dir.path());
    assert_eq!(r["predicates"]["generation_range"], false);
    assert!(r["warnings"][0].as_str().unwrap().contains("strict inequalities"));
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    for cfg in [
        "{",
        r#"{"task": {"name": "unknown"}}"#,
        r#"{"operator": {"alpha": 2.5, "c": 1}, "task": {"name": "resolve"}}"#,
    ] {
        assert_eq!(run_config(dir.path(), cfg, &[]).status.code(), Some(1), "{cfg}");
    }
}

#[test]
fn failing_check_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    // At h = 1.4 the higher-order terms spoil the order-two ratio.
    let cfg = r#"{"operator": {"alpha": 0, "c": 1}, "mesh": {"y_max": 10, "n": 200, "grading": 2},
                  "task": {"name": "verify-multiplier-derivative", "coarse": 1.4}}"#;
    let out = run_config(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(report(dir.path())["pass"], false);
}

#[test]
fn same_seed_same_bytes() {
    let cfg = r#"{"operator": {"alpha": 1, "c": 2}, "space": {"p": 2, "m": 1}, "mesh": {"y_max": 20, "n": 100, "grading": 2},
                  "task": {"name": "estimate-rbound", "draws": 3}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_config(a.path(), cfg, &["--seed", "42"]);
    run_config(b.path(), cfg, &["--seed", "42"]);
    let ra = std::fs::read(a.path().join("out/report.json")).unwrap();
    let rb = std::fs::read(b.path().join("out/report.json")).unwrap();
    assert_eq!(ra, rb);
    assert_eq!(report(a.path())["seed"], 42);
}

#[test]
fn resolve_writes_solution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"operator": {"alpha": 0, "c": 1}, "space": {"p": 2, "m": 1}, "mesh": {"y_max": 20, "n": 800, "grading": 2},
                  "task": {"name": "resolve", "lambda": 1, "rhs": {"kind": "gaussian", "center": 1, "width": 1}}}"#;
    let out = run_config(dir.path(), cfg, &["--verbose"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert!(r["results"]["kernel_quadrature_rel_diff"].as_f64().unwrap() < 5e-3);
    let text = std::fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "node,value_re,value_im");
    assert_eq!(text.lines().count(), 801);
    assert!(!dir.path().join("out/.report.json.tmp").exists());
}
