use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn brw(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(args)
        .env_remove("BRW_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&s).expect("schema compiles")
}

fn assert_valid(name: &str, doc: &Value) {
    let v = schema(name);
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}\n{doc:#}");
}

fn json_ok(args: &[&str]) -> Value {
    let o = brw(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    serde_json::from_str(&stdout(&o)).unwrap()
}

#[test]
fn quotient_of_pendant_family_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.json");
    let o = brw(&["quotient", "--family", "pendant_tree3", "--out", q.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&q).unwrap()).unwrap();
    assert_eq!(doc["matrix"], serde_json::json!([[3, 1], [1, 0]]));
    assert_eq!(doc["verified_radius"], 6);
    assert_valid("quotient", &doc);
    let side: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("q.json.manifest.json")).unwrap()).unwrap();
    assert!(side["timestamp"].is_u64());
    assert_valid("manifest", &side);
    // the embedded manifest has no timestamp
    assert!(doc["manifest"].get("timestamp").is_none());
}

#[test]
fn bridge_quotient() {
    let doc = json_ok(&["quotient", "--family", "bridge", "--k", "3", "--out", "json"]);
    assert_eq!(doc["matrix"], serde_json::json!([[3, 1], [2, 0]]));
}

#[test]
fn gw_prints_one_third() {
    let o = brw(&["gw", "--pgf", "0.25,0,0.75"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("law,delta,"));
    let delta: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((delta - 1.0 / 3.0).abs() < 1e-12);
    let doc = json_ok(&["gw", "--pgf", "0.25,0,0.75", "--pgf", "0.75,0,0.25", "--out", "json"]);
    assert_valid("gw", &doc);
    assert_eq!(doc["bound"]["kind"], "no_bound");
}

#[test]
fn loop_totals() {
    let o = brw(&["paths", "--family", "loops", "--k", "3", "--nmax", "4"]);
    assert!(o.status.success());
    let totals: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split(',').nth(3).unwrap().to_string()).collect();
    assert_eq!(totals, ["1", "3", "9", "27", "81"]);
    let doc = json_ok(&["paths", "--family", "lattice", "--d", "1", "--nmax", "6", "--target", "1", "--out", "json"]);
    assert_valid("paths", &doc);
    assert_eq!(doc["rows"][4]["gamma_xx"], 6);
    assert_eq!(doc["rows"][1]["phi_xy"], 1);
}

#[test]
fn big_counts_are_exact_in_json() {
    let doc = json_ok(&["paths", "--family", "loops", "--k", "7", "--nmax", "40", "--out", "json"]);
    // 7^40 exceeds 2^64 and must not be rounded
    assert_eq!(doc["rows"][40]["total"].to_string(), "6366805760909027985741435139224001");
}

#[test]
fn critical_and_classify_validate() {
    let doc = json_ok(&["critical", "--family", "lattice", "--d", "1", "--nmax", "12", "--srw", "--out", "json"]);
    assert_valid("critical", &doc);
    let o = brw(&["critical", "--family", "loops", "--k", "3", "--nmax", "5"]);
    assert!(stdout(&o).starts_with("horizon,phi_root_lo,phi_root_hi,ms_growth,mw_growth\n"));
    let doc = json_ok(&["classify", "--family", "regular_tree", "--k", "3", "--radius-max", "8", "--out", "json"]);
    assert_valid("classify", &doc);
}

#[test]
fn simulate_is_deterministic_and_valid() {
    let args = [
        "simulate", "--family", "lattice", "--d", "1", "--lambda", "0.7", "--trials", "200", "--tmax", "20",
        "--radius", "10", "--seed", "11", "--out", "json",
    ];
    let a = brw(&args);
    let b = brw(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_valid("simulate", &doc);
    let csv = brw(&args[..args.len() - 2]);
    assert!(stdout(&csv).starts_with(
        "lambda,trials,global_freq,global_lo,global_hi,local_freq,local_lo,local_hi,radius,cap,seed\n"
    ));
}

#[test]
fn sweep_rows_and_threads() {
    let o = Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(["sweep", "--family", "loops", "--k", "3", "--lambda-grid", "0.1:0.5:0.2", "--trials", "50",
               "--tmax", "10", "--cap", "1000", "--seed", "5", "--out", "json"])
        .env("BRW_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid("sweep", &doc);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
    let bad = Command::new(env!("CARGO_BIN_EXE_brw"))
        .args(["sweep", "--family", "loops", "--k", "3", "--lambda-grid", "0.1,0.2", "--trials", "5"])
        .env("BRW_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn missing_seed_is_drawn_and_printed() {
    let o = brw(&["simulate", "--family", "loops", "--k", "2", "--lambda", "0.2", "--trials", "10", "--tmax", "5"]);
    assert!(o.status.success());
    assert!(stderr(&o).lines().any(|l| l.starts_with("seed=")));
}

#[test]
fn gen_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("ball.json");
    let o = brw(&["gen", "--family", "regular_tree", "--k", "3", "--radius", "2", "--out", g.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&g).unwrap()).unwrap();
    assert_valid("graph", &doc);
    assert_eq!(doc["vertices"].as_array().unwrap().len(), 10);
    let q = json_ok(&["quotient", "--graph", g.to_str().unwrap(), "--out", "json"]);
    assert_valid("quotient", &q);
    assert_eq!(q["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    // root, inner level and leaves
    assert_eq!(q["blocks"].as_array().unwrap().len(), 3);
    let r = dir.path().join("r.json");
    let o = brw(&["gen", "--random", "--vertices", "6", "--seed", "9", "--out", r.to_str().unwrap()]);
    assert!(o.status.success());
    let p = brw(&["paths", "--graph", r.to_str().unwrap(), "--nmax", "5"]);
    assert!(p.status.success(), "{}", stderr(&p));
}

#[test]
fn errors_are_single_line_with_codes() {
    let o = brw(&["paths", "--family", "no_such_family"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error kind=config message=\""));

    let o = brw(&["paths", "--family", "regular_tree", "--k", "5", "--nmax", "40"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error kind=resource"));

    let o = brw(&["simulate", "--family", "loops", "--k", "3", "--lambda", "-1", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = brw(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);

    let o = brw(&["gw", "--pgf", "0.5,0.6"]);
    assert_eq!(o.status.code(), Some(2));
}
