use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_star-order-lab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn matrix(dir: &Path, name: &str, ring: &str, entries: &[&[&str]]) -> PathBuf {
    let rows = entries.len();
    let cols = entries[0].len();
    let json = serde_json::json!({
        "ring": serde_json::from_str::<Value>(ring).unwrap(),
        "rows": rows,
        "cols": cols,
        "entries": entries,
    });
    let path = dir.join(name);
    fs::write(&path, json.to_string()).unwrap();
    path
}

const QI: &str = r#"{"kind": "gaussian_rational"}"#;
const Z2: &str = r#"{"kind": "prime_field", "p": 2}"#;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn mp_round_trips_through_out_file() {
    let dir = TempDir::new().unwrap();
    let a = matrix(dir.path(), "a.json", QI, &[&["1", "1i"], &["0", "0"]]);
    let out = dir.path().join("mp.json");
    let o = run(&["mp", "--in", s(&a), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let written: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let printed: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(written, printed);
    // (a†)† = a
    let back = run(&["mp", "--in", s(&out)]);
    assert_eq!(code(&back), 0);
    let again: Value = serde_json::from_str(&stdout(&back)).unwrap();
    let original: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(again, original);
}

#[test]
fn mp_absent_over_z2_is_negative() {
    let dir = TempDir::new().unwrap();
    let a = matrix(dir.path(), "a.json", Z2, &[&["1", "1"], &["1", "1"]]);
    let o = run(&["mp", "--in", s(&a)]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout(&o).trim(), "none");
}

#[test]
fn order_exit_codes_and_witness() {
    let dir = TempDir::new().unwrap();
    let a = matrix(dir.path(), "a.json", QI, &[&["1", "0"], &["0", "0"]]);
    let b = matrix(dir.path(), "b.json", QI, &[&["1", "0"], &["1", "1"]]);
    let w = dir.path().join("w.json");
    let o = run(&[
        "order",
        "--rel",
        "left-star",
        "--a",
        s(&a),
        "--b",
        s(&b),
        "--out",
        s(&w),
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("left-star (characterization): holds"));
    let witness: Value = serde_json::from_str(&fs::read_to_string(&w).unwrap()).unwrap();
    assert_eq!(witness["relation"], "left-star");
    let checks = witness["checks"].as_array().unwrap();
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["holds"] == true));

    let o = run(&["order", "--rel", "right-star", "--a", s(&a), "--b", s(&b)]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("fails"));
}

#[test]
fn input_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"ring\": ").unwrap();
    assert_eq!(code(&run(&["mp", "--in", s(&bad)])), 2);
    assert_eq!(
        code(&run(&["mp", "--in", s(&dir.path().join("missing.json"))])),
        2
    );

    let a = matrix(dir.path(), "a.json", QI, &[&["1", "0"]]);
    let b = matrix(dir.path(), "b.json", Z2, &[&["1", "0"]]);
    let o = run(&["order", "--rel", "minus", "--a", s(&a), "--b", s(&b)]);
    assert_eq!(code(&o), 2, "ring mismatch");
    let c = matrix(dir.path(), "c.json", QI, &[&["1"], &["0"]]);
    let o = run(&["order", "--rel", "minus", "--a", s(&a), "--b", s(&c)]);
    assert_eq!(code(&o), 2, "shape mismatch");
    let o = run(&["class", "--spec", "15", "--in", s(&a)]);
    assert_eq!(code(&o), 2, "bad class spec");
}

#[test]
fn class_sampling_is_seeded() {
    let dir = TempDir::new().unwrap();
    let a = matrix(dir.path(), "a.json", QI, &[&["1", "2"], &["2", "4"]]);
    let args = [
        "class",
        "--spec",
        "13",
        "--in",
        s(&a),
        "--sample",
        "3",
        "--seed",
        "9",
    ];
    let first = run(&args);
    assert_eq!(code(&first), 0);
    assert_eq!(stdout(&first), stdout(&run(&args)));
    let members: Value = serde_json::from_str(&stdout(&first)).unwrap();
    assert_eq!(members.as_array().unwrap().len(), 3);
}

#[test]
fn hasse_writes_dot_and_csv() {
    let dir = TempDir::new().unwrap();
    let dot = dir.path().join("h.dot");
    let csv = dir.path().join("h.csv");
    let o = run(&[
        "hasse",
        "--p",
        "2",
        "--n",
        "2",
        "--rel",
        "left-star",
        "--out",
        s(&dot),
        "--csv",
        s(&csv),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dot = fs::read_to_string(&dot).unwrap();
    assert!(dot.starts_with("digraph \"left-star\" {"));
    assert_eq!(dot.matches(" -> ").count(), 18);
    let csv = fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("a_index,b_index,rel,holds"));
    assert_eq!(lines.count(), 256);
}

#[test]
fn verify_twice_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    let paths = [dir.path().join("one.txt"), dir.path().join("two.txt")];
    for p in &paths {
        let o = run(&[
            "verify",
            "--seed",
            "1",
            "--trials",
            "10",
            "--max-dim",
            "2",
            "--out",
            s(p),
        ]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
    }
    let one = fs::read(&paths[0]).unwrap();
    assert!(!one.is_empty());
    assert_eq!(one, fs::read(&paths[1]).unwrap());
}

#[test]
fn verify_rejects_bad_config() {
    assert_eq!(code(&run(&["verify", "--max-dim", "0"])), 2);
    assert_eq!(code(&run(&["verify", "--rings", "Z_4"])), 2);
}
