use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_egyptian"));
    c.env_remove("EGYPTIAN_OUT_DIR");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas")
}

fn load_schema(rel: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(rel)).expect("schema file");
    serde_json::from_str(&text).expect("schema json")
}

fn assert_valid(schema: &Value, doc: &Value) {
    let validator = jsonschema::validator_for(schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{e} at {}", e.instance_path))
        .collect();
    assert!(errors.is_empty(), "{errors:?}\n{doc:#}");
}

/// Parse stdout as a record and validate envelope and result.
fn record(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: Value = serde_json::from_slice(&out.stdout).expect("json output");
    assert_valid(&load_schema("run_record.schema.json"), &doc);
    let cmd = doc["command"].as_str().unwrap().to_string();
    assert_valid(
        &load_schema(&format!("result/{cmd}.schema.json")),
        &doc["result"],
    );
    assert!(doc["started"].as_str().unwrap() <= doc["finished"].as_str().unwrap());
    doc
}

#[test]
fn count_example() {
    let doc = record(&["count", "--n", "6", "--x", "1/1", "--mode", "exact"]);
    assert_eq!(doc["result"]["count"], "2");
    let brute = record(&["count", "--n", "6", "--x", "1/1", "--method", "brute"]);
    assert_eq!(brute["result"]["count"], "2");
    assert_eq!(brute["result"]["method"], "brute_force");
    let at_most = record(&["count", "--n", "12", "--x", "1/2", "--mode", "at-most"]);
    assert_eq!(at_most["result"]["mode"], "at_most");
}

#[test]
fn cx_example() {
    let doc = record(&["cx", "--x", "1/1"]);
    let c = doc["result"]["c_x"].as_f64().unwrap();
    assert!((c - 0.91117).abs() < 1e-4, "{c}");
    let lam = record(&["lambda", "--x", "1/1"]);
    assert!((lam["result"]["lambda"].as_f64().unwrap() - 0.127_190_9).abs() < 1e-6);
}

#[test]
fn verify_example() {
    assert_eq!(
        record(&["verify", "--x", "1/1", "--set", "2,3,6", "--n", "6"])["result"]["verified"],
        true
    );
    let bad = record(&["verify", "--x", "1/1", "--set", "2", "--n", "10"]);
    assert_eq!(bad["result"]["verified"], false);
    assert_eq!(bad["result"]["sum"], "1/2");
}

#[test]
fn entropy_json_and_csv() {
    let doc = record(&["entropy", "--n", "100", "--x", "1/1"]);
    assert_eq!(doc["result"]["saturated"], false);
    let out = run(&["entropy", "--n", "5", "--x", "1/2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,p_m");
    assert_eq!(lines.len(), 6);
}

#[test]
fn simulate_is_byte_identical_apart_from_timestamps() {
    let args = [
        "simulate", "--n", "500", "--x", "1/1", "--trials", "2000", "--seed", "4",
    ];
    let a = record(&args);
    let b = record(&args);
    assert_eq!(
        serde_json::to_string(&a["result"]).unwrap(),
        serde_json::to_string(&b["result"]).unwrap()
    );
    assert_eq!(a["parameters"], b["parameters"]);
}

#[test]
fn modcover_reports_histogram() {
    let doc = record(&[
        "modcover",
        "--q",
        "7",
        "--interval",
        "2:5",
        "--smax",
        "2",
        "--target",
        "6",
    ]);
    assert_eq!(doc["result"]["complete"], true);
    assert_eq!(doc["result"]["max_min_size"], 2);
    assert_eq!(
        doc["result"]["solution"]["subset"],
        serde_json::json!([2, 4])
    );
    let hist: u64 = doc["result"]["histogram"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .sum();
    assert_eq!(hist, 7);
    let out = run(&[
        "modcover",
        "--q",
        "5",
        "--interval",
        "2:3",
        "--format",
        "csv",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "residue,min_size\n0,0\n1,\n2,1\n3,1\n4,\n");
}

#[test]
fn sieve_counts_powersmooth_numbers() {
    let doc = record(&["sieve", "--limit", "10", "--t", "4"]);
    assert_eq!(doc["result"]["count"], 5);
}

#[test]
fn construct_writes_replayable_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.json");
    let doc = record(&[
        "construct",
        "--n",
        "3000",
        "--x",
        "1/1",
        "--seed",
        "5",
        "--trace",
        path.to_str().unwrap(),
    ]);
    assert_eq!(doc["result"]["succeeded"], 1);
    let trace: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid(&load_schema("trace.schema.json"), &trace);
    let parsed: egyptian::absorption::AbsorptionTrace = serde_json::from_value(trace).unwrap();
    parsed.replay(12).unwrap();
    let a: Vec<u64> = doc["result"]["witnesses"][0]["A"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(a, parsed.a);

    let many = record(&[
        "construct",
        "--n",
        "3000",
        "--x",
        "1/2",
        "--seed",
        "1",
        "--count",
        "3",
    ]);
    assert_eq!(many["result"]["succeeded"], 3);
}

#[test]
fn out_flag_and_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/cx.json");
    let out = run(&["cx", "--x", "1/2", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["command"], "cx");

    let out = bin()
        .env("EGYPTIAN_OUT_DIR", dir.path())
        .args(["sieve", "--limit", "100", "--t", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("sieve.json").exists());
}

#[test]
fn exit_codes() {
    assert_eq!(
        run(&["count", "--n", "6", "--x", "3/0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(
        run(&["count", "--n", "6", "--x", "1/1", "--frobnicate"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["count", "--n", "60", "--x", "1/1"]).status.code(),
        Some(1)
    );
    assert_eq!(
        run(&["count", "--n", "30", "--x", "1/1", "--method", "brute"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["cx", "--x=-1/2"]).status.code(), Some(1));
    assert_eq!(run(&["cx", "--x", "0/1"]).status.code(), Some(1));
    assert_eq!(
        run(&["construct", "--n", "100", "--x", "1/97"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        run(&["verify", "--x", "1/1", "--n", "6", "--set", "2,3,6", "--format", "csv"])
            .status
            .code(),
        Some(2)
    );
    let help = run(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&help.stdout).contains("construct"));
}

#[test]
fn budget_overrun_is_flagged() {
    let out = run(&["count", "--n", "48", "--x", "1/1", "--budget", "0.01"]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["truncated"], true);
    assert_valid(&load_schema("result/count.schema.json"), &doc["result"]);

    let out = run(&[
        "construct",
        "--n",
        "5000",
        "--x",
        "1/1",
        "--count",
        "1000",
        "--budget",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["result"]["truncated"], true);
    assert_valid(&load_schema("result/construct.schema.json"), &doc["result"]);
}
