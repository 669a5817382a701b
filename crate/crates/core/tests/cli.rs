use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_proxinorm"));
    for var in ["DEPTH_BUDGET", "PRECISION_BITS", "ELIMINATION_BUDGET", "DEMO_N", "ROUNDING_DENOMINATOR_BITS"] {
        c.env_remove(format!("PROXINORM_{var}"));
    }
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

fn coset_fixture(dir: &Path) {
    write(dir, "e1.json", r#"{"1":"1"}"#);
    write(dir, "e2.json", r#"{"2":"1"}"#);
    write(dir, "x0.json", r#"{"1":"3/4","2":"-1/2","4":"1/5"}"#);
}

#[test]
fn norm_of_zero() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "zero.json", "{}");
    let o = run(d.path(), &["norm", "--vec", "zero.json"]);
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), r#"{"lo":"0","hi":"0","depth":0}"#);
}

#[test]
fn construct_dumps_json_lines() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["construct", "--k-max", "4"]);
    assert!(o.status.success());
    let lines: Vec<&str> = std::str::from_utf8(&o.stdout).unwrap().lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0], r#"{"k":1,"u":{},"a":1}"#);
    assert_eq!(lines[3], r#"{"k":4,"u":{"1":"1"},"a":4}"#);
}

#[test]
fn demo_reports_determinant() {
    let d = tempfile::tempdir().unwrap();
    let o = run(d.path(), &["demo", "--n", "2"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["determinant"], "-4");
    assert_eq!(v["matches_prediction"], true);
}

#[test]
fn config_file_and_env_are_honoured() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "proxinorm.toml", "demo_N = 3\n");
    let o = run(d.path(), &["demo"]);
    assert_eq!(stdout_json(&o)["n"], 3);
    let o = bin()
        .current_dir(d.path())
        .env("PROXINORM_DEPTH_BUDGET", "5")
        .args(["construct", "--k-max", "10"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    write(d.path(), "bad.toml", "depth_budget = \"many\"\n");
    let o = run(d.path(), &["--config", "bad.toml", "demo"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_input_names_the_field() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "bad.json", r#"{"1":"1/0"}"#);
    let o = run(d.path(), &["norm", "--vec", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vec.1"));
    write(d.path(), "x.json", r#"{"1":"1"}"#);
    write(d.path(), "u.json", "[1, 2]");
    let o = run(d.path(), &["deriv", "--x", "x.json", "--u", "u.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`u`"));
}

#[test]
fn hypothesis_violation_exits_one() {
    let d = tempfile::tempdir().unwrap();
    write(d.path(), "x.json", r#"{"1":"1"}"#);
    write(d.path(), "z.json", r#"{"2":"1"}"#);
    let o = run(d.path(), &["approxlin", "--x", "x.json", "--z", "z.json", "--prefix", "50"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn approxlin_then_feasible() {
    let d = tempfile::tempdir().unwrap();
    coset_fixture(d.path());
    write(d.path(), "z1.json", r#"{"2":"-1"}"#);
    write(d.path(), "z2.json", r#"{"1":"1"}"#);
    let args = [
        "approxlin", "--x", "x0.json", "--z", "z1.json", "z2.json", "--prefix", "400", "--trials", "10", "--seed", "9",
    ];
    let o = run(d.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = run(d.path(), &args);
    assert_eq!(o.stdout, again.stdout);
    let report = stdout_json(&o);
    assert_eq!(report["trials"].as_array().unwrap().len(), 10);
    std::fs::write(d.path().join("report.json"), &o.stdout).unwrap();

    let o = run(d.path(), &["feasible", "--report", "report.json", "--phi", "e1.json", "e2.json", "--prefix-size", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout_json(&o)["satisfiable"], false);
}

#[test]
fn descend_verify_and_tamper() {
    let d = tempfile::tempdir().unwrap();
    coset_fixture(d.path());
    let args = ["descend", "--phi", "e1.json", "e2.json", "--x0", "x0.json", "--steps", "5"];
    let o = run(d.path(), &args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(run(d.path(), &args).stdout, o.stdout);
    std::fs::write(d.path().join("chain.json"), &o.stdout).unwrap();
    let ok = run(d.path(), &["verify", "--cert", "chain.json"]);
    assert!(ok.status.success());
    assert_eq!(stdout_json(&ok)["certificates"], 5);

    // lower norm_after.lo of the first certificate
    let mut chain = stdout_json(&o);
    let lo = chain["certificates"][0]["norm_after"]["lo"].as_str().unwrap().to_string();
    let lowered = proxinorm::scalar::parse_rational(&lo, "lo").unwrap() - proxinorm::scalar::rat(1, 1 << 20);
    chain["certificates"][0]["norm_after"]["lo"] = Value::String(lowered.to_string());
    write(d.path(), "tampered.json", &chain.to_string());
    let bad = run(d.path(), &["verify", "--cert", "tampered.json"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("norm_after"));
}

#[test]
fn descend_from_h_is_a_precondition_error() {
    let d = tempfile::tempdir().unwrap();
    coset_fixture(d.path());
    write(d.path(), "inh.json", r#"{"5":"1"}"#);
    let o = run(d.path(), &["descend", "--phi", "e1.json", "e2.json", "--x0", "inh.json", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(1));
}
