// SPDX-License-Identifier: MIT
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use causal_spec::api::{self, to_json};
use causal_spec::{parse, CausalDag};

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/motor.cdag")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_causal-spec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn validate_motor() {
    let o = run(&["validate", fixture().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("16 nodes, 19 edges"));
}

#[test]
fn cycle_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "c.cdag",
        r#"model "c" { node A node B node C edge A -> B edge B -> C edge C -> A }"#,
    );
    let o = run(&["validate", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "cycle detected: A -> B -> C -> A\n");

    let o = run(&["validate", "--json", &p]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["valid"], false);
    assert_eq!(v["cycle"], serde_json::json!(["A", "B", "C", "A"]));

    // every other command refuses the model too
    let o = run(&["analyze", &p]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A -> B -> C -> A"));
}

#[test]
fn parse_errors_exit_two_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(&dir, "d.cdag", "model \"m\" {\n  node A\n  node A\n}");
    let o = run(&["validate", &p]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("d.cdag:3:8: duplicate node `A`"),
        "{}",
        stderr(&o)
    );

    let o = run(&["validate", "/nonexistent/model.cdag"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["dsep", fixture().to_str().unwrap(), "V_s", "Nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_gate_on_observability_gaps() {
    let mut doc = parse(causal_spec::MOTOR_FIXTURE).unwrap();
    doc.node_mut("T_E").unwrap().kind = causal_spec::dsl::NodeKind::Latent;
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        &dir,
        "gap.cdag",
        &causal_spec::serialize(&doc, causal_spec::Format::Dsl),
    );
    let o = run(&["validate", &p]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("observability gaps: {T_E}"));
    assert_eq!(run(&["validate", "--strict", &p]).status.code(), Some(1));
    assert_eq!(run(&["analyze", "--strict", &p]).status.code(), Some(1));
    assert_eq!(
        run(&["analyze", "--strict", fixture().to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
}

#[test]
fn dsep_and_paths() {
    let f = fixture();
    let f = f.to_str().unwrap();
    assert_eq!(
        stdout(&run(&["dsep", f, "V_s", "T_E"])),
        "d-separated: true\n"
    );
    assert_eq!(
        stdout(&run(&["dsep", f, "H_s", "T_E"])),
        "d-separated: false\n"
    );
    assert_eq!(
        stdout(&run(&["dsep", f, "H_s", "T_E", "--given", "CoolingFault"])),
        "d-separated: true\n"
    );
    let paths = stdout(&run(&["paths", f, "CoolingFault", "Classification"]));
    assert_eq!(paths.lines().count(), 7);
    assert!(paths.contains("open    CoolingFault -> T -> T_s -> Classification  [chain, chain]"));
}

#[test]
fn json_output_matches_library() {
    let f = fixture();
    let dag = CausalDag::build(&parse(causal_spec::MOTOR_FIXTURE).unwrap()).unwrap();
    let o = run(&["analyze", "--json", f.to_str().unwrap()]);
    let expected = to_json(&api::analyze(&dag, &api::RolesRequest::default()).unwrap());
    assert_eq!(stdout(&o), expected);
    let o = run(&["requirements", "--json", f.to_str().unwrap()]);
    let expected = to_json(&api::requirements(&dag, &api::RolesRequest::default()).unwrap());
    assert_eq!(stdout(&o), expected);
}

#[test]
fn adjust_and_implications() {
    let f = fixture();
    let f = f.to_str().unwrap();
    assert_eq!(stdout(&run(&["adjust", f])), "{T_E, V_s}\n");
    let imp = stdout(&run(&["implications", f]));
    for line in [
        "Classification ⊥ T_E | H_s, T_s, V_s",
        "H_s ⊥ T_E | CoolingFault",
        "H_s ⊥ V_s | CoolingFault",
        "T_s ⊥ V_s | CoolingFault, T_E",
        "T_E ⊥ V_s",
    ] {
        assert!(imp.lines().any(|l| l == line), "missing {line}");
    }
}

#[test]
fn simulate_citest_monitor_pipeline() {
    let f = fixture();
    let f = f.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let clean = dir.path().join("clean.csv");
    let shifted = dir.path().join("shifted.csv");
    let o = run(&[
        "simulate",
        f,
        "-n",
        "5000",
        "--seed",
        "7",
        "-o",
        clean.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&[
        "simulate",
        f,
        "-n",
        "5000",
        "--seed",
        "7",
        "--mutate",
        "T_E->MechFault=0.5",
        "-o",
        shifted.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let o = run(&[
        "citest",
        f,
        "--data",
        shifted.to_str().unwrap(),
        "--statement",
        "V_s ⊥ T_E",
        "--strict",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("REJECTED"));

    let o = run(&["monitor", f, "--input", shifted.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let first = stdout(&o)
        .lines()
        .next()
        .map(str::to_string)
        .expect("an alarm");
    let alarm: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(alarm["monitor"], "MON-1");
    assert_eq!(alarm["window"], 3);

    let o = run(&["monitor", f, "--input", clean.to_str().unwrap()]);
    assert_eq!(stdout(&o), "");

    assert_eq!(
        run(&["simulate", f, "--mutate", "T_E=>X"]).status.code(),
        Some(2)
    );
}

#[test]
fn export_formats() {
    let f = fixture();
    let f = f.to_str().unwrap();
    let dot = stdout(&run(&["export", f]));
    assert!(dot.starts_with("digraph"));
    let dsl = stdout(&run(&["export", f, "--format", "dsl"]));
    let json = stdout(&run(&["export", f, "--format", "json"]));
    assert_eq!(
        causal_spec::ModelDocument::parse_any(&dsl).unwrap(),
        causal_spec::ModelDocument::parse_any(&json).unwrap()
    );
}
