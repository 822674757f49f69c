use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../core/corpus/{name}.oobc"))
}

fn oobc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oobc")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn analyze_writes_dot_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let (dot, json) = (dir.path().join("g.dot"), dir.path().join("g.json"));
    let o = oobc(&["analyze", s(&corpus("direct_http")), "--dot", s(&dot), "--json", s(&json)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("entries: 1  states: "));
    assert!(stdout(&o).contains("org/apache/http/client/HttpClient/execute\t1"));
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph states {"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["schema"], 1);
}

#[test]
fn report_directory_and_permissions() {
    let dir = tempfile::tempdir().unwrap();
    let map = dir.path().join("map.tsv");
    let manifest = dir.path().join("manifest.txt");
    std::fs::write(&map, "org/apache/http/client/HttpClient/execute\tandroid.permission.INTERNET\n").unwrap();
    std::fs::write(&manifest, "").unwrap();
    let out = dir.path().join("report");
    let o = oobc(&[
        "analyze",
        s(&corpus("direct_http")),
        "--permission-map",
        s(&map),
        "--manifest",
        s(&manifest),
        "--report",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("android.permission.INTERNET"));
    for f in ["states.dot", "analysis.json", "api-dump.txt", "heat-map.txt", "permissions.txt"] {
        assert!(out.join(f).is_file(), "{f}");
    }
}

#[test]
fn cutoff_exits_incomplete() {
    let o = oobc(&["analyze", s(&corpus("loop")), "--cutoff", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incomplete"));
}

#[test]
fn input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.oobc");
    std::fs::write(&bad, "(public class").unwrap();
    assert_eq!(oobc(&["analyze", s(&bad)]).status.code(), Some(1));
    assert_eq!(oobc(&["analyze", s(&dir.path().join("missing.oobc"))]).status.code(), Some(1));
    let prog = corpus("straight");
    assert_eq!(oobc(&["analyze", s(&prog), "--entry", "No/such"]).status.code(), Some(1));
    assert_eq!(oobc(&["analyze", s(&prog), "--manifest", s(&bad)]).status.code(), Some(1));
    let preds = dir.path().join("p.scm");
    std::fs::write(&preds, "(lambda (s) (frobnicate s))").unwrap();
    assert_eq!(oobc(&["analyze", s(&prog), "--predicates", s(&preds)]).status.code(), Some(1));
}

#[test]
fn run_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let o = oobc(&["run", s(&corpus("straight")), "--entry", "com/example/Straight/onCreate", "--trace", s(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("halted after "));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(trace).unwrap()).unwrap();
    assert_eq!(v["outcome"]["kind"], "halted");
    assert!(v["states"].as_array().unwrap().len() > 1);
}

#[test]
fn run_out_of_fuel_and_zero_fuel() {
    let o = oobc(&["run", s(&corpus("straight")), "--entry", "com/example/Straight/onCreate", "--fuel", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("out of fuel"));
    let o = oobc(&["run", s(&corpus("straight")), "--entry", "com/example/Straight/onCreate", "--fuel", "0"]);
    assert_eq!(o.status.code(), Some(1));
}
