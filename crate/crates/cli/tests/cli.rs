use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_genusflow"));
    c.env("GENUSFLOW_THREADS", "2");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn write_scenario(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("scenario.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], scenario: &Path, out: &Path) -> Output {
    bin().args(args).arg("--scenario").arg(scenario).arg("--out").arg(out).output().unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(out.join("report.json")).unwrap()).unwrap()
}

#[test]
fn preset_list_names_every_preset() {
    let out = bin().args(["preset", "list"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["martins-oscillator", "circle-limit-cycle", "genus2-two-knots", "genus2-one-knot"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing from:\n{text}");
    }
}

#[test]
fn preset_show_round_trips_as_toml() {
    let out = bin().args(["preset", "show", "circle-limit-cycle"]).output().unwrap();
    assert!(out.status.success());
    let table: toml::Table = toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(table.contains_key("domain") && table.contains_key("attractor"));
}

#[test]
fn unknown_preset_is_an_input_error() {
    let out = bin().args(["preset", "show", "klein-bottle"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_expression_exits_2_with_offset() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "[domain]\nkind = \"torus\"\n[field]\nfx = \"sin(x) + * y\"\nfy = \"0\"\n");
    let out = run(&["synth"], &sc, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("offset 9"), "{err}");
    assert!(err.contains('^'), "{err}");
    assert!(!tmp.path().join("out").join("report.json").exists());
}

#[test]
fn missing_section_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "[domain]\nkind = \"torus\"\n[field]\nfx = \"1\"\nfy = \"0\"\n");
    for cmd in ["attractor", "poincare", "orbit", "check"] {
        let out = run(&[cmd], &sc, &tmp.path().join("out"));
        assert_eq!(out.status.code(), Some(2), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn missing_scenario_file_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["synth"], &tmp.path().join("nope.toml"), &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_override_is_rejected_by_the_parser() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["attractor", "--grid", "64"])
        .arg("--scenario")
        .arg(scenario("martins-stable"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unmatched_torus_field_fails_analysis_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let sc = write_scenario(tmp.path(), "[domain]\nkind = \"torus\"\n[field]\nfx = \"x\"\nfy = \"0\"\n");
    let out_dir = tmp.path().join("out");
    let out = run(&["synth"], &sc, &out_dir);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out_dir);
    assert_eq!(r["status"], "fail");
    assert!(r["failure"].as_str().unwrap().contains("side pairings"));
}

#[test]
fn integrate_writes_trajectory_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["integrate"], &scenario("circle-limit-cycle"), tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,word\n"));
    assert!(tmp.path().join("portrait.svg").exists());
    let r = report(tmp.path());
    assert_eq!(r["status"], "pass");
    assert_eq!(r["command"]["name"], "integrate");
    assert_eq!(r["scenario_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn format_filter_keeps_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["integrate", "--format", "json"])
        .arg("--scenario")
        .arg(scenario("circle-limit-cycle"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let names: Vec<_> = std::fs::read_dir(tmp.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("report.json")]);
}

#[test]
fn orbit_report_classifies_the_forced_oscillator_orbit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["orbit"], &scenario("martins-inversely-unstable"), tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    let orbit = &r["results"]["orbits"][0];
    assert_eq!(orbit["monodromy"]["class"], "inversely-unstable");
    assert_eq!(orbit["monodromy"]["class_squared"], "directly-unstable");
}

#[test]
fn index_report_matches_euler_characteristic() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["index"], &scenario("genus2-two-knots"), tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(tmp.path());
    assert_eq!(r["results"]["index_sum"], -2);
    assert_eq!(r["results"]["euler"]["pass"], true);
}

#[test]
fn two_circles_example_runs() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["synth", "integrate", "index"] {
        let out = run(&[cmd], &scenario("two-circles"), tmp.path());
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["attractor", "--grid", "48,48", "--iters", "4"];
    assert!(run(&args, &scenario("martins-stable"), &a).status.success());
    assert!(run(&args, &scenario("martins-stable"), &b).status.success());
    for f in ["report.json", "attractor.csv", "portrait.svg"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}
