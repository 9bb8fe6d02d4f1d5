use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vck-lab")).current_dir(dir).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn gadget(dir: &Path) {
    let out = run(dir, &["gen", "--kind", "membership", "--params", "d=3,k=1", "--out", "m.json"]);
    assert!(out.status.success());
}

#[test]
fn verify_accepts_a_fresh_certificate_and_rejects_a_tampered_one() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gadget(d);
    let out = run(d, &["vcdim", "--input", "m.json", "--cert-out", "c.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["dimension"], 3);
    let out = run(d, &["verify", "c.json", "m.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"]["valid"], true);

    let mut cert: Value = serde_json::from_str(&std::fs::read_to_string(d.join("c.json")).unwrap()).unwrap();
    cert["witnesses"][1]["witness"] = cert["witnesses"][2]["witness"].clone();
    std::fs::write(d.join("bad.json"), cert.to_string()).unwrap();
    let out = run(d, &["verify", "bad.json", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report(&out)["results"]["valid"], false);
}

#[test]
fn malformed_json_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("x.json"), "{\"parts\": [1,}").unwrap();
    let out = run(dir.path(), &["gowers", "--input", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1 column"), "{err}");
}

#[test]
fn small_cap_exits_3_with_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    gadget(dir.path());
    let out = run(dir.path(), &["vcdim", "--input", "m.json", "--cap", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["results"]["complete"], false);
    assert_eq!(r["results"]["dimension"], 2);
}

#[test]
fn oversized_generator_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["gen", "--kind", "membership", "--params", "d=17,k=1", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!dir.path().join("m.json").exists());
}

#[test]
fn config_file_is_validated_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("cfg.json"), r#"{"k": 1, "d": [2, 4], "trials": 2, "seed": 4}"#).unwrap();
    let out = run(d, &["adversary", "--config", "cfg.json", "--trials", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["config"]["trials"], 3);
    assert_eq!(r["config"]["seed"], 4);
    assert_eq!(r["seed"], 4);
    assert_eq!(r["results"]["curve"].as_array().unwrap().len(), 2);

    std::fs::write(d.join("typo.json"), r#"{"k": 1, "trails": 2}"#).unwrap();
    let out = run(d, &["adversary", "--config", "typo.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}

#[test]
fn adversary_writes_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["adversary", "--d", "2,3", "--trials", "2", "--out", "curve.csv", "--report", "r.json"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("d,mean_norm,std,mean_score"));
    assert_eq!(lines.count(), 2);
    let r: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["command"], "adversary");
}

#[test]
fn threads_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    gadget(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_vck-lab"))
        .current_dir(dir.path())
        .env("VCK_LAB_THREADS", "3")
        .args(["vcdim", "--input", "m.json"])
        .output()
        .unwrap();
    assert_eq!(report(&out)["meta"]["threads"], 3);
    let out = run(dir.path(), &["--threads", "2", "vcdim", "--input", "m.json"]);
    assert_eq!(report(&out)["meta"]["threads"], 2);
    let out = run(dir.path(), &["--threads", "0", "vcdim", "--input", "m.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generated_instances_feed_the_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["gen", "--kind", "boolcomb", "--params", "k_prime=3,k=1,m=2,sizes=4x4x4", "--seed", "3", "--out", "b.json"]);
    assert!(out.status.success());
    let out = run(d, &["decompose", "--input", "b.json", "--function", "E", "--k", "1", "--mode", "boolean", "--out", "dec.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(r["results"]["fit"]["error"].as_f64().unwrap() <= r["results"]["fit"]["baseline"].as_f64().unwrap());
    assert!(d.join("dec.json").exists());

    let out = run(d, &["gen", "--kind", "quasirandom", "--params", "sizes=4x4x4", "--seed", "1", "--out", "q.json"]);
    assert!(out.status.success());
    let out = run(d, &["gowers", "--input", "q.json", "--signature", "1,1,1", "--center", "0.5"]);
    assert!(report(&out)["results"]["box_norm"]["norm"].as_f64().unwrap() > 0.0);
    let out = run(d, &["gowers", "--input", "q.json", "--signature", "2,1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(d, &["vcdim", "--input", "q.json", "--k", "1", "--format", "csv"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("dimension,complete\n"), "{text}");
    let out = run(d, &["fibers", "--input", "q.json", "--anchors", "0,1", "--params", "0,1;2"]);
    let r = report(&out);
    assert_eq!(r["results"]["anchors"].as_array().unwrap().len(), 2);
}
