use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_charge-diagram")
}

struct TempDir(PathBuf);

impl TempDir {
    fn new(tag: &str) -> Self {
        let p = std::env::temp_dir().join(format!("charge-diagram-cli-{tag}-{}", std::process::id()));
        std::fs::create_dir_all(&p).unwrap();
        Self(p)
    }

    fn file(&self, name: &str, body: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

const QUBIT: &str = r#"{
  "dims": [2, 2],
  "system_charges": [[[1, 0], [0, -1]]],
  "bath_charges": [[[1, 0], [0, -1]]],
  "beta": [1.0],
  "rho_S": [[1, 0], [0, 0]],
  "sigma_S": [[0.5, 0], [0, 0.5]],
  "work": [0.0]
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("CHARGE_DIAGRAM_DIM_CAP")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn validate_and_second_law() {
    let dir = TempDir::new("second");
    let f = dir.file("q.json", QUBIT);
    let out = run(&["validate", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["status"], "ok");

    let out = run(&["thermo", "second-law", "--scenario", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let delta = json(&out)["delta"].as_f64().unwrap();
    assert!((delta - (1.0 + 2f64.ln())).abs() < 1e-10);

    let bits = run(&["thermo", "second-law", "--scenario", s(&f), "--bits"]);
    let v = json(&bits);
    assert_eq!(v["entropy_unit"], "bits");
    assert!((v["delta_s_S"].as_f64().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn negative_gap_exits_one() {
    let dir = TempDir::new("negative");
    let f = dir.file("q.json", &QUBIT.replace("\"work\": [0.0]", "\"work\": [2.0]"));
    let out = run(&["thermo", "second-law", "--scenario", s(&f)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["feasible"], false);
    let out = run(&["bathrate", "optimal", "--scenario", s(&f)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn schema_errors_name_the_field() {
    let dir = TempDir::new("schema");
    let f = dir.file("bad.json", &QUBIT.replace("[[[1, 0], [0, -1]]],\n  \"bath", "[[[1, [0, 1]], [[0, 1], -1]]],\n  \"bath"));
    let out = run(&["validate", s(&f)]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("system_charges[0]"), "{err}");

    let f = dir.file("typo.json", &QUBIT.replace("\"beta\": [1.0]", "\"beta\": [1.0, \"x\"]"));
    let out = run(&["validate", s(&f)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("beta[1]"));

    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "/nonexistent/file.json"]).status.code(), Some(2));
}

#[test]
fn capacity_exits_three() {
    let dir = TempDir::new("cap");
    let f = dir.file("q.json", QUBIT);
    let out = run(&["finite", "typical", "--scenario", s(&f), "--n", "6", "--dim-cap", "32"]);
    assert_eq!(out.status.code(), Some(3));
    let out = Command::new(bin())
        .args(["finite", "typical", "--scenario", s(&f), "--n", "6"])
        .env("CHARGE_DIAGRAM_DIM_CAP", "16")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = run(&["finite", "typical", "--scenario", s(&f), "--n", "6"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["all_ok"], true);
}

#[test]
fn gibbs_and_diagram_commands() {
    let dir = TempDir::new("ggs");
    let f = dir.file("q.json", QUBIT);
    let out = run(&["ggs", "solve", "--scenario", s(&f), "--target", "-0.5"]);
    let v = json(&out);
    assert!((v["beta"][0].as_f64().unwrap() - 0.5f64.atanh()).abs() < 1e-9);

    let out = run(&["ggs", "from-beta", "--scenario", s(&f), "--beta", "1"]);
    assert!((json(&out)["charge_values"][0].as_f64().unwrap() + 1f64.tanh()).abs() < 1e-10);

    let out = run(&["diagram", "member", "--scenario", s(&f), "--point", "0.2,0.9"]);
    assert_eq!(json(&out)["inside"], false);

    let csv = dir.0.join("grid.csv");
    let out = run(&["diagram", "sample", "--scenario", s(&f), "--grid", "-1:1:5", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, std::fs::read_to_string(&csv).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a1,s_max");
    assert_eq!(lines.len(), 6);
    assert!(lines[3].ends_with("6.93147180560e-1"));
}

#[test]
fn bathrate_sweep_csv() {
    let dir = TempDir::new("rate");
    // sigma_S = diag(0.97, 0.03): Delta E_S = -0.06, entropy rises by about 0.1347
    let f = dir.file(
        "r.json",
        &QUBIT
            .replace("[[0.5, 0], [0, 0.5]]", "[[0.97, 0], [0, 0.03]]")
            .replace("\"work\": [0.0]", "\"work\": [0.16]"),
    );
    let csv = dir.0.join("sweep.csv");
    let out = run(&["bathrate", "optimal", "--scenario", s(&f), "--delta-sweep", "2:3", "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert!(v["r_star"].as_f64().unwrap() > 0.0);
    assert_eq!(v["sweep"].as_array().unwrap().len(), 2);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("delta,r_star_exact,r_quadratic\n"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn first_law_and_fixed_bath() {
    let dir = TempDir::new("first");
    let f = dir.file("q.json", QUBIT);
    let out = run(&["thermo", "first-law", "--scenario", s(&f)]);
    let v = json(&out);
    assert_eq!(out.status.code(), Some(0));
    assert!((v["work"][0].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let out = run(&["thermo", "first-law", "--scenario", s(&f), "--s-final", "0.1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&["thermo", "fixed-bath", "--scenario", s(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["feasible"], true);
    let out = run(&["thermo", "fixed-bath", "--scenario", s(&f), "--s-sigma", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn finite_commands_report_json() {
    let dir = TempDir::new("finite");
    let f = dir.file("q.json", &QUBIT.replace("[[1, 0], [0, 0]]", "[[0.8, 0], [0, 0.2]]"));
    let out = run(&["finite", "trim", "--scenario", s(&f), "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["flat"], true);

    let same = dir.file("same.json", &QUBIT.replace("[[1, 0], [0, 0]]", "[[0.5, 0], [0, 0.5]]"));
    let out = run(&["finite", "aet", "--scenario", s(&same), "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["permutation"], true);
    assert!(v["trace_distance"].as_f64().unwrap() <= 1e-12);

    let out = run(&["finite", "aet", "--scenario", s(&f), "--n", "3"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(&[
        "finite", "amc", "--scenario", s(&f), "--n", "3", "--values", "0", "--eta", "0.4", "--eta-prime", "0.1", "--s", "0.1",
        "--t", "0.45", "--samples", "50", "--trials", "20",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["projector_rank"].as_u64().unwrap() > 0);
}
