//! End-to-end runs of the `vela` binary.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::*;
use serde_json::Value;

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn panel(dir: &Path, agencies: &[(&str, u64)], t_len: usize) -> PathBuf {
    let csv = dir.join("panel.csv");
    write_panel(&csv, agencies, t_len);
    csv
}

#[test]
fn pipeline_recovers_planted_signs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = panel(dir.path(), &[("NASA", 5), ("ESA", 6)], 60);
    let out = dir.path().join("out");
    let o = vela(&["pipeline", "--input", s(&csv), "--out-dir", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["pipeline.json", "pipeline.txt", "correlation.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(!out.join("FAILED").exists());
    let doc = json(&out.join("pipeline.json"));
    assert_eq!(doc["status"], "ok");
    assert_eq!(doc["manifest"]["timestamp"], "2023-11-14T22:13:20Z");
    let rows = doc["result"]["correlation_table"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let entries = row["entries"].as_array().unwrap();
        let gpc = entries.iter().find(|e| e["variable"] == "gpc").unwrap();
        assert_eq!(gpc["sign"], "+", "{row}");
        assert_eq!(gpc["significant_at_5pct"], true);
        let md = entries.iter().find(|e| e["variable"] == "md").unwrap();
        assert_eq!(md["sign"], "-", "{row}");
    }
    let table = fs::read_to_string(out.join("correlation.txt")).unwrap();
    assert!(table.lines().nth(1).unwrap().starts_with("NASA"));
}

#[test]
fn negative_budget_fails_at_log_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = format!("{HEADER}\n{}", planted_rows("NASA", 30, 7));
    let line = text.lines().nth(11).unwrap().to_string();
    let mut fields: Vec<String> = line.split(',').map(String::from).collect();
    let year = fields[1].clone();
    fields[2] = "-0.5".into();
    text = text.replacen(&line, &fields.join(","), 1);
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, text).unwrap();
    let out = dir.path().join("out");
    let o = vela(&["pipeline", "--input", s(&csv), "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("stage log"), "{err}");
    assert!(err.contains(&format!("(sb, {year})")), "{err}");
    assert!(out.join("FAILED").exists());
    let doc = json(&out.join("pipeline.json"));
    assert_eq!(doc["status"], "failed");
    assert_eq!(doc["failure"]["stage"], "log");
}

#[test]
fn no_cointegration_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("noise.csv");
    fs::write(&csv, format!("{HEADER}\n{}", noise_rows("JAXA", 200, 8))).unwrap();
    let out = dir.path().join("out");
    let o = vela(&["specsearch", "--input", s(&csv), "--agency", "JAXA", "--min-size", "5", "--out-dir", s(&out)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("no admissible specification"));
    let doc = json(&out.join("specsearch.json"));
    assert_eq!(doc["status"], "failed");
    assert_eq!(doc["result"].as_array().unwrap().len(), 12);
}

#[test]
fn pipeline_is_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let csv = panel(dir.path(), &[("CNSA", 9)], 40);
    let read = |d: &Path| {
        ["pipeline.json", "pipeline.txt", "correlation.txt"].map(|f| fs::read(d.join(f)).unwrap())
    };
    let a = dir.path().join("a");
    assert!(vela(&["pipeline", "--input", s(&csv), "--out-dir", s(&a)]).status.success());
    let first = read(&a);
    fs::remove_dir_all(&a).unwrap();
    assert!(vela(&["pipeline", "--input", s(&csv), "--out-dir", s(&a)]).status.success());
    assert_eq!(first, read(&a));
}

#[test]
fn pipeline_config_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let csv = panel(dir.path(), &[("NASA", 5)], 60);
    let cfg = dir.path().join("pipeline.json");
    fs::write(&cfg, r#"{"case": "unrestricted_constant", "min_size": 5, "k_candidates": [1]}"#).unwrap();
    let out = dir.path().join("out");
    let o = vela(&["pipeline", "--input", s(&csv), "--config", s(&cfg), "--kmax", "2", "--out-dir", s(&out), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["result"]["config"]["case"], "unrestricted_constant");
    assert_eq!(doc["result"]["config"]["kmax"], 2);
    assert!(doc["manifest"]["config_digest"].as_str().unwrap().len() == 64);
    let specs = doc["result"]["agencies"][0]["specsearch"]["specs"].as_array().unwrap();
    assert!(specs.iter().all(|s| s["k"] == 1 && s["vars"].as_array().unwrap().len() >= 5));

    fs::write(&cfg, r#"{"cases": "x"}"#).unwrap();
    let o = vela(&["pipeline", "--input", s(&csv), "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mission_sample_headline() {
    let o = vela(&["mission"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.trim_end().ends_with("pool 34.3 B$, cost 25.0 B$, margin 27.1%"), "{text}");
    assert!(text.lines().next().unwrap().contains("launches"));

    let o = vela(&["mission", "--format", "json", "--horizon-years", "1"]);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["result"]["infeasible"], true);
    assert!((doc["result"]["totals"]["pool_busd"].as_f64().unwrap() - 6.86).abs() < 0.005);
    let o = vela(&["mission", "--horizon-years", "1"]);
    assert!(stdout(&o).contains("INFEASIBLE"));
}

#[test]
fn mission_without_provider_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("m.json");
    let text = vela_core::mission::MissionConfig::sample_json().replace("\"provides_super_heavy\": true", "\"provides_super_heavy\": false");
    fs::write(&cfg, text).unwrap();
    let o = vela(&["mission", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no launch provider"), "{}", stderr(&o));
}

#[test]
fn mission_writes_plan_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m");
    assert!(vela(&["mission", "--out-dir", s(&out)]).status.success());
    let doc = json(&out.join("mission_plan.json"));
    assert_eq!(doc["result"]["totals"]["launches"], 8);
    let rows = vela_core::report::parse_mission_table(&fs::read_to_string(out.join("mission_plan.txt")).unwrap()).unwrap();
    assert_eq!(rows.iter().find(|r| r.agency == "NASA").unwrap().launches, 5);
}

#[test]
fn ingest_reports_filled_cells_and_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let rows = planted_rows("ESA", 20, 3);
    let mut lines: Vec<String> = rows.lines().map(String::from).collect();
    let mut f: Vec<String> = lines[5].split(',').map(String::from).collect();
    f[4] = String::new();
    lines[5] = f.join(",");
    let csv = dir.path().join("p.csv");
    fs::write(&csv, format!("{HEADER}\n{}\n", lines.join("\n"))).unwrap();
    let o = vela(&["ingest", "--input", s(&csv), "--agency", "ESA"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("filled (rd, 1955)"), "{}", stdout(&o));

    lines.remove(8);
    fs::write(&csv, format!("{HEADER}\n{}\n", lines.join("\n"))).unwrap();
    let o = vela(&["ingest", "--input", s(&csv), "--agency", "ESA"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("year index gap at 1958"), "{}", stderr(&o));
}

#[test]
fn single_step_commands() {
    let dir = tempfile::tempdir().unwrap();
    let csv = panel(dir.path(), &[("NASA", 5)], 80);
    let base = ["--input", s(&csv), "--agency", "NASA"];
    let run = |cmd: &[&str]| {
        let mut args = cmd.to_vec();
        args.extend(base);
        let o = vela(&args);
        assert!(o.status.success(), "{cmd:?}: {}", stderr(&o));
        stdout(&o)
    };
    let adf = run(&["adf", "--vars", "sb,gpc", "--lags", "1"]);
    assert_eq!(adf.lines().count(), 5, "{adf}");
    let lag = run(&["lagselect", "--kmax", "3"]);
    assert!(lag.contains("chosen: AIC"), "{lag}");
    let rank = run(&["vecrank", "--vars", "sb,gpc,md", "--k", "1"]);
    assert!(rank.contains("selected rank: 1"), "{rank}");
    let vecm = run(&["vecm", "--vars", "sb,gpc,md", "--case", "uconst"]);
    assert!(vecm.starts_with("NASA Model Specification 1, χ² = "), "{vecm}");
    assert!(vecm.contains("stability: 2 unit roots (expected 2)"), "{vecm}");
    let two = run(&["vecm", "--vars", "sb,gpc,md", "--rank", "2"]);
    assert!(two.contains("beta"), "{two}");
    let search = run(&["specsearch", "--vars", "sb,gpc,md,rd", "--min-size", "3", "--k-candidates", "1"]);
    assert!(search.contains("agency          GPC"), "{search}");
}

#[test]
fn bad_arguments_are_validation_errors() {
    let o = vela(&["vecm", "--input", "/nonexistent.csv", "--agency", "NASA"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let csv = panel(dir.path(), &[("NASA", 5)], 40);
    let o = vela(&["vecm", "--input", s(&csv), "--agency", "NASA", "--vars", "sb,gpc", "--rank", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
