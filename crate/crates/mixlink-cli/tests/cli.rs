use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn mxl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mxl"))
        .args(args)
        .env("MXL_GRID", "64")
        .env("MXL_SAMPLES", "512")
        .env_remove("MXL_TOL")
        .output()
        .expect("run mxl")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn analyze_exit_codes() {
    let o = mxl(&["analyze", "u^2 - v^3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["newton"]["faces"].as_array().unwrap().len(), 1);
    assert_eq!(v["nondegeneracy"]["strong_inner_nd"], "Verified");
    assert_eq!(v["nondegeneracy"]["isolated"], true);
    assert!(v.get("timings").is_none());

    let o = mxl(&["analyze", "u^8 + v^3*u^2 + conj(v)^5*u - 2*(v^7+conj(v)^7)"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["nondegeneracy"]["inner_nd"], "Verified");
    assert_eq!(v["nondegeneracy"]["oka_nd"], "Refuted");

    assert_eq!(mxl(&["analyze", "u^4 - u^2*v^3"]).status.code(), Some(2));
    assert_eq!(mxl(&["analyze", "u^2 +* v"]).status.code(), Some(1));
    assert_eq!(mxl(&["analyze", "0"]).status.code(), Some(1));
    assert_eq!(mxl(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn json_files_and_timings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = mxl(&["--timings", "analyze", "u^2 - v^2", "--json", path.to_str().unwrap(), "--link"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v["timings"]["newton_ms"].is_number());
    assert_eq!(v["link"]["components"], 2);
}

#[test]
fn deterministic_output() {
    let a = mxl(&["analyze", "u^3 + u*conj(v)^4 + v^5"]);
    let b = mxl(&["analyze", "u^3 + u*conj(v)^4 + v^5"]);
    assert_eq!(a.stdout, b.stdout);
    let a = mxl(&["render", "--word", "1 -2 1"]);
    let b = mxl(&["render", "--word", "1 -2 1"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn link_and_braid() {
    let o = mxl(&["link", "u^2 - v^3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["word"]["letters"], serde_json::json!([1, 1, 1]));
    assert_eq!(v["components"], 1);
    let o = mxl(&["braid", "u^2 - v^3", "--face", "1"]);
    assert_eq!(json(&o)["word"]["letters"], serde_json::json!([1, 1, 1]));
    assert_eq!(mxl(&["braid", "u^2 - v^3", "--face", "2"]).status.code(), Some(1));
    // inner degenerate input is gated
    assert_eq!(mxl(&["link", "u^4 - u^2*v^3"]).status.code(), Some(2));
}

#[test]
fn pfibered_and_render() {
    let o = mxl(&["pfibered", "--word", "1", "--m", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let d = json(&o)["certificate"]["min_arg_derivative"].as_f64().unwrap();
    assert!((d - 2.0).abs() < 1e-6);
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("t.svg");
    let o = mxl(&["render", "--word", "1 1 1", "-o", svg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<?xml"));
    assert_eq!(text.matches("<line").count(), 9);
}

#[test]
fn realize_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tower.json");
    fs::write(&path, r#"{"levels": [{"loop": {"chart": "CxS1", "terms": [{"z": 2, "zbar": 0, "trig": {"0": "1"}}, {"z": 0, "zbar": 0, "trig": {"1": "-1"}}]}}]}"#).unwrap();
    let o = mxl(&["realize", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["polynomial"], "u^2 - v^3*conj(v)");
    assert_eq!(v["validation"]["link"]["components"], 2);
    fs::write(&path, r#"{"levels": [{"word": "1"}]}"#).unwrap();
    let o = mxl(&["realize", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}
