use std::process::{Command, Output};

fn bellforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bellforge"))
        .args(args)
        .env("BELLFORGE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

#[test]
fn catalog_lists_thirteen_families() {
    let o = bellforge(&["catalog"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 13);
    let json: serde_json::Value = serde_json::from_str(&stdout(&bellforge(&["catalog", "--json"]))).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 13);
}

#[test]
fn classical_c423_json() {
    let o = bellforge(&["classical", "--ineq", "c423", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["strategies"], 6561);
    let amax = v["amax"]["value"].as_f64().unwrap();
    assert!((amax - 3.0 * 3f64.sqrt()).abs() < 1e-9);
    assert_eq!(v["hmax"]["value"].as_f64().unwrap(), 9.0);
}

#[test]
fn quantum_at_named_settings() {
    let o = bellforge(&["quantum", "--ineq", "c333", "--settings", "X,Z", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let qm = v["quantum_value"].as_f64().unwrap();
    assert!((qm - 0.75 * (1.0 + 33f64.sqrt())).abs() < 1e-9);
}

#[test]
fn probability_expression_on_quasi_ghz() {
    let o = bellforge(&["prob", "--expr", "cglmp:3", "--state", "quasi:2,0.7923", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 2.9149).abs() < 1e-3);
}

#[test]
fn exit_codes() {
    assert_eq!(bellforge(&["classical", "--ineq", "nope"]).status.code(), Some(2));
    assert_eq!(bellforge(&["quantum", "--ineq", "c333", "--settings", "Q"]).status.code(), Some(2));
    assert_eq!(bellforge(&["bogus"]).status.code(), Some(2));
    assert_eq!(bellforge(&["classical", "--ineq", "mermin:14"]).status.code(), Some(3));
    assert_eq!(bellforge(&["quantum", "--ineq", "mermin:10", "--settings", "X,Z"]).status.code(), Some(3));
}

#[test]
fn export_round_trips_through_a_file() {
    let dir = std::env::temp_dir().join(format!("bellforge-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("c233.json");
    let p = path.to_str().unwrap();
    assert!(bellforge(&["export", "--ineq", "c233", "--out", p]).status.success());
    let o = bellforge(&["classical", "--ineq", p, "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["hmax"]["value"].as_f64().unwrap() - 4.5).abs() < 1e-12);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn table1_reproduces_and_is_deterministic() {
    let a = bellforge(&["reproduce", "table1", "--json"]);
    assert_eq!(a.status.code(), Some(0));
    let b = bellforge(&["reproduce", "table1", "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let doc: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(doc["pass"], true);
    let csv = stdout(&bellforge(&["reproduce", "table1", "--csv"]));
    assert!(csv.starts_with("table,row,quantity,computed,printed,deviation,check,status"));
    assert_eq!(csv.lines().filter(|l| l.ends_with(",flagged")).count(), 1);
}

#[test]
fn appendix_c_with_few_restarts() {
    let o = bellforge(&["reproduce", "appendixC", "--restarts", "2", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(doc["metadata"]["restarts"], 2);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
}
