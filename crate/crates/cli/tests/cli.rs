//! End-to-end tests of the binary against the shipped system files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_noether")
}

fn systems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../systems")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should run")
}

fn system(name: &str) -> String {
    systems_dir().join(name).to_string_lossy().into_owned()
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn check_all_shipped_systems_pass() {
    for file in [
        "free_particle.json",
        "free_particle_2d.json",
        "oscillator.json",
        "oscillator_2d.json",
        "kepler.json",
        "kepler_perturbed.json",
        "driven_particle.json",
    ] {
        let out = run(&["check", &system(file)]);
        assert_exit(&out, 0);
    }
}

#[test]
fn check_reports_each_declared_object() {
    let out = run(&["check", &system("oscillator.json")]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "conserved/E/solution-space",
        "conserved/E/bracket",
        "generator/energy/eom-symmetry",
        "variational: true",
    ] {
        assert!(text.contains(needle), "missing `{needle}` in:\n{text}");
    }
}

#[test]
fn failing_conservation_names_the_culprit_and_exits_one() {
    let dir = tempdir();
    let file = dir.join("bad.json");
    std::fs::write(
        &file,
        r#"{ "name": "bad", "n": 1, "lagrangian": "qd1^2/2 - q1^2/2",
            "conserved": { "notconserved": "q1" } }"#,
    )
    .unwrap();
    let out = run(&["check", file.to_str().unwrap()]);
    assert_exit(&out, 1);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("notconserved"));
    assert!(text.contains("FAIL"));
}

#[test]
fn malformed_expression_exits_two_with_span() {
    let dir = tempdir();
    let file = dir.join("syntax.json");
    std::fs::write(
        &file,
        r#"{ "name": "bad", "n": 1, "lagrangian": "qd1^2/2 - q7^2/2" }"#,
    )
    .unwrap();
    let out = run(&["check", file.to_str().unwrap()]);
    assert_exit(&out, 2);
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("q7"), "stderr: {text}");
}

#[test]
fn degenerate_lagrangian_is_rejected() {
    let dir = tempdir();
    let file = dir.join("degenerate.json");
    std::fs::write(&file, r#"{ "name": "d", "n": 1, "lagrangian": "qd1" }"#).unwrap();
    let out = run(&["check", file.to_str().unwrap()]);
    assert_exit(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
}

#[test]
fn noether_both_directions_roundtrip() {
    let out = run(&[
        "noether",
        &system("oscillator.json"),
        "--direction",
        "to-symmetry",
        "--name",
        "E",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("P = [qd1]"));
    assert!(text.contains("tau = -1"));

    let out = run(&[
        "noether",
        &system("free_particle.json"),
        "--direction",
        "to-integral",
        "--name",
        "translation",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("C = qd1"), "{text}");
}

#[test]
fn non_variational_generator_fails_reconstruction() {
    let out = run(&[
        "noether",
        &system("free_particle.json"),
        "--direction",
        "to-integral",
        "--name",
        "scaling",
    ]);
    assert_exit(&out, 1);
}

#[test]
fn bracket_table_with_theorems() {
    let out = run(&["bracket", &system("free_particle.json"), "--theorems"]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("pair-action"));
    assert!(text.contains("commutator"));
}

#[test]
fn flow_exports_csv() {
    let dir = tempdir();
    let csv = dir.join("flow.csv");
    let out = run(&[
        "flow",
        &system("oscillator.json"),
        "--generator",
        "energy",
        "--series",
        "8",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let data = std::fs::read_to_string(&csv).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next().unwrap(), "epsilon,t,q1,qd1");
    assert!(lines.next().unwrap().starts_with("0,"));
}

#[test]
fn gauge_flow_shifts_time_only() {
    let out = run(&[
        "--json",
        "/dev/null",
        "flow",
        &system("oscillator.json"),
        "--generator",
        "energy",
        "--epsilon",
        "2",
        "--gauge=-1",
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("transported to epsilon = 2"), "{text}");
}

#[test]
fn monitor_classifies_and_exports() {
    let dir = tempdir();
    let csv = dir.join("orbit.csv");
    let out = run(&[
        "monitor",
        &system("kepler_perturbed.json"),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lrl_angle"));
    assert!(text.contains("NumericLocal"));
    assert!(text.contains("radius-minima"));
    let data = std::fs::read_to_string(&csv).unwrap();
    assert!(data.starts_with("t,q1,q2,qd1,qd2\n"));
}

#[test]
fn liouville_pipeline_on_oscillators() {
    for file in [
        "oscillator.json",
        "oscillator_2d.json",
        "driven_particle.json",
        "free_particle.json",
    ] {
        let out = run(&["liouville", &system(file)]);
        assert_exit(&out, 0);
    }
    let out = run(&["liouville", &system("oscillator_2d.json")]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("integral/T"));
    assert!(text.contains("integral/Theta2"));
    assert!(text.contains("canonical-pairs"));
}

#[test]
fn noncommuting_family_exits_one_naming_the_pair() {
    let dir = tempdir();
    let file = dir.join("noncommuting.json");
    std::fs::write(
        &file,
        r#"{ "name": "noncommuting", "n": 2, "lagrangian": "(qd1^2 + qd2^2)/2",
            "conserved": { "p1": "qd1", "b1": "q1 - t*qd1" },
            "liouville": { "family": ["p1", "b1"],
                           "branch_seed": { "t": 0, "q": [0,0], "qd": [1,1] } } }"#,
    )
    .unwrap();
    let out = run(&["liouville", file.to_str().unwrap()]);
    assert_exit(&out, 1);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("p1") && text.contains("b1"), "{text}");
}

#[test]
fn identical_seed_gives_byte_identical_reports() {
    let dir = tempdir();
    let a = dir.join("a.json");
    let b = dir.join("b.json");
    for path in [&a, &b] {
        let out = run(&[
            "--seed",
            "42",
            "--json",
            path.to_str().unwrap(),
            "check",
            &system("oscillator.json"),
        ]);
        assert_exit(&out, 0);
    }
    let ja = std::fs::read(&a).unwrap();
    let jb = std::fs::read(&b).unwrap();
    assert_eq!(ja, jb, "reports with the same seed must be byte-identical");
    let parsed: serde_json::Value = serde_json::from_slice(&ja).unwrap();
    assert_eq!(parsed["schema"], 1);
    assert_eq!(parsed["seed"], 42);
    assert!(parsed["input_digest"].as_str().unwrap().len() == 64);
}

#[test]
fn different_seed_changes_sampling_but_not_verdicts() {
    let out1 = run(&["--seed", "1", "check", &system("oscillator.json")]);
    let out2 = run(&["--seed", "2", "check", &system("oscillator.json")]);
    assert_exit(&out1, 0);
    assert_exit(&out2, 0);
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "noether-cli-test-{}-{:?}",
        std::process::id(),
        std::thread::current().id()
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
