use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_finsler");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Rows of a CSV table keyed by header name.
fn csv_rows(text: &str) -> Vec<std::collections::BTreeMap<String, String>> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    lines
        .map(|l| header.iter().cloned().zip(l.split(',').map(String::from)).collect())
        .collect()
}

fn num(row: &std::collections::BTreeMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("column {key} = {:?}", row[key]))
}

#[test]
fn report_lie_group_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = run(&[
        "report",
        "--metric",
        "lie_group",
        "--per-axis",
        "3",
        "--directions",
        "8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json_file(&out);
    let c = &r["classification"];
    assert_eq!(c["gb"]["verdict"], true);
    assert_eq!(c["s_zero"]["verdict"], false);
    assert_eq!(c["verdict"], "SNonzero");
    let samples = r["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 9 * 8);
    assert!(samples.iter().all(|s| s["error"].is_null()));
    assert!(samples[0]["g"].as_array().unwrap().len() == 4);
}

#[test]
fn report_fish_tank_is_flat_with_zero_s() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fish.json");
    std::fs::write(
        &cfg,
        r#"{"schema": 1, "metric": {"catalog": {"name": "fish_tank"}},
            "grid": {"per_axis": 3, "lo": [-0.6, -0.6], "hi": [0.6, 0.6]}, "directions": 8}"#,
    )
    .unwrap();
    let o = run(&["report", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let c = &r["classification"];
    assert_eq!(c["gb"]["verdict"], false);
    assert_eq!(c["s_zero"]["verdict"], true);
    for s in r["samples"].as_array().unwrap() {
        assert!(s["flag"].as_f64().unwrap().abs() < 1e-5, "K = {}", s["flag"]);
    }
}

#[test]
fn report_is_byte_stable() {
    let args = ["report", "--metric", "euclid_randers", "--param", "eps=0.3", "--per-axis", "2", "--directions", "4"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn custom_euclidean_randers_config_is_berwald() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("custom.json");
    std::fs::write(
        &cfg,
        r#"{
  "schema": 1,
  "metric": {"custom": {
    "a": [["1", "0"], ["0", "1"]],
    "b": ["p1", "p2"],
    "params": [0.3, -0.2],
    "phi": {"variant": "randers"},
    "domain": {"box": {"lo": [-1, -1], "hi": [1, 1]}}
  }},
  "grid": {"per_axis": 2},
  "directions": 4
}"#,
    )
    .unwrap();
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["classification"]["berwald"]["verdict"], true);
    assert_eq!(r["classification"]["verdict"], "LocallyMinkowskiLike");
}

#[test]
fn table_s_on_lie_group_names_indices() {
    let o = run(&["table", "--metric", "lie_group", "--quantity", "s", "--per-axis", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    for row in &rows {
        let y = num(row, "x2");
        // b = (1/y)(dx + dy) over a = (dx² + dy²)/y² gives s_12 = -1/(2y²).
        assert!((num(row, "s_12") + 0.5 / (y * y)).abs() < 1e-8, "{row:?}");
        assert!((num(row, "s_12") + num(row, "s_21")).abs() < 1e-12);
    }
}

#[test]
fn table_bnorm_on_fish_tank_is_radius() {
    let o = run(&["table", "--metric", "fish_tank", "--quantity", "bnorm", "--per-axis", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for row in csv_rows(&stdout(&o)) {
        let (x, y) = (num(&row, "x1"), num(&row, "x2"));
        assert!((num(&row, "b") - (x * x + y * y).sqrt()).abs() < 1e-8, "{row:?}");
    }
}

#[test]
fn table_sigma_on_euclid_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sigma.csv");
    let o = run(&["table", "--metric", "euclid", "--quantity", "sigma", "--per-axis", "2", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 4);
    for row in rows {
        assert!((num(&row, "sigma") - 1.0).abs() < 1e-10);
    }
}

#[test]
fn table_directional_quantities_have_direction_columns() {
    let o = run(&["table", "--metric", "mw", "--quantity", "B", "--per-axis", "2", "--directions", "4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("point,x1,x2,y1,y2,B_1_111"), "{header}");
    assert!(header.ends_with(",error"));
    assert_eq!(text.lines().count(), 1 + 4 * 4);
}

#[test]
fn config_errors_exit_with_two() {
    let o = run(&["report", "--metric", "no_such_metric"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let o = run(&["table", "--metric", "euclid", "--quantity", "Z"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown quantity"));

    let o = run(&["report", "--metric", "euclid_randers", "--param", "eps=1.5"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"schema": 1, "metric": {"catalog": {"name": "mw"}}, "directoins": 8}"#).unwrap();
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("directoins"), "{}", stderr(&o));

    std::fs::write(&cfg, r#"{"schema": 1, "metric": {"catalog": {"name": "mw"}}, "directions": 2}"#).unwrap();
    let o = run(&["classify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("directions"), "{}", stderr(&o));

    let o = run(&["report"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_pass_and_fail_with_exit_codes() {
    let o = run(&["check", "--criterion", "5", "--verbose"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("criterion  5 PASS"));
    assert!(stdout(&o).contains("[ok]"));

    let o = run(&["check", "--criterion", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("criterion  1 FAIL"));

    let o = run(&["check", "--criterion", "14"]);
    assert_eq!(o.status.code(), Some(2));
}
