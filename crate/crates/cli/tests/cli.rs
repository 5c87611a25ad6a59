//! End-to-end behaviour of the `gms` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gms_core::{build, generate, lp_solve, FormulationId, GenerationProfile, Instance};
use tempfile::TempDir;

fn gms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gms")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_instance(dir: &TempDir, name: &str, inst: &Instance) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, inst.to_json_string()).unwrap();
    path
}

#[test]
fn gen_output_round_trips_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    for coupling in ["--coupling", "--no-coupling"] {
        let path = dir.path().join("gen.json");
        let out = gms(&["gen", "--seed", "9", "--horizon", "14", "--tasks", "4", coupling, "--out", path_str(&path)]);
        assert!(out.status.success(), "{}", stderr(&out));
        let text = std::fs::read_to_string(&path).unwrap();
        let inst = Instance::from_json_str(&text).unwrap();
        assert_eq!(inst.to_json_string(), text);
        assert_eq!(inst.coupling_enabled, coupling == "--coupling");
        let again = gms(&["gen", "--seed", "9", "--horizon", "14", "--tasks", "4", coupling]);
        assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    }
}

#[test]
fn malformed_instance_exits_2_naming_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"horizon\": 4,\n  \"tasks\": [ oops ]\n}\n").unwrap();
    let out = gms(&["solve", "--formulation", "F1", "--instance", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains(&format!("{}:3:", path.display())), "{msg}");
}

#[test]
fn invalid_instance_exits_2_naming_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let inst = Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0]);
    let text = inst.to_json_string().replace("\"duration\": 2", "\"duration\": 0");
    let path = dir.path().join("invalid.json");
    std::fs::write(&path, &text).unwrap();
    let line = text.lines().position(|l| l.contains("\"duration\"")).unwrap() + 1;
    let out = gms(&["export", "--formulation", "F2", "--instance", path_str(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let msg = stderr(&out);
    assert!(msg.contains(&format!("{}:{line}:", path.display())), "{msg}");
}

#[test]
fn unknown_formulation_and_bad_format_are_usage_errors() {
    let out = gms(&["solve", "--formulation", "F9", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = gms(&["export", "--formulation", "F1", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_f6_closes_at_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(&dir, "small.json", &Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0]));
    let trace = dir.path().join("trace.csv");
    let tableau = dir.path().join("tableau.txt");
    let out = gms(&[
        "solve",
        "--formulation",
        "F6",
        "--instance",
        path_str(&path),
        "--trace",
        path_str(&trace),
        "--dump-tableau",
        path_str(&tableau),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["formulation"], "F6");
    assert_eq!(report["mip"]["status"], "optimal");
    assert!((report["mip"]["objective"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert!((report["mip"]["root_bound"].as_f64().unwrap() - 3.0).abs() < 1e-9);
    assert_eq!(report["mip"]["nodes"], 1);
    assert_eq!(report["mip"]["incumbent"]["S_t2_m0"], 1.0);
    let trace = std::fs::read_to_string(trace).unwrap();
    assert_eq!(trace.lines().count(), 2, "{trace}");
    assert!(!std::fs::read_to_string(tableau).unwrap().is_empty());
}

#[test]
fn node_limit_exits_3() {
    let inst = (0..200u64)
        .map(|seed| generate(seed, 12, 3, &GenerationProfile::coupled()).unwrap())
        .find(|inst| {
            let sol = lp_solve(&build(FormulationId::F1, inst).unwrap());
            sol.status == gms_core::LpStatus::Optimal
                && sol.values.values.values().any(|v| (v - v.round()).abs() > 1e-6)
        })
        .expect("some instance has a fractional F1 root");
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(&dir, "frac.json", &inst);
    let out = gms(&["solve", "--formulation", "F1", "--instance", path_str(&path), "--node-limit", "1"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["mip"]["status"], "node-limit");
}

#[test]
fn compare_writes_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(&dir, "inst.json", &generate(4, 8, 2, &GenerationProfile::coupled()).unwrap());
    let path = path_str(&path);
    let out = gms(&["compare", "--instance", path, "--seed", "4", "--samples", "30"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "A,B,verdict,bound_gap,samples_used,witness_count");
    assert_eq!(lines.len(), 22);
    assert!(lines.iter().any(|l| l.starts_with("F4,F7,equivalent,")), "{text}");

    let out = gms(&["compare", "--instance", path, "--seed", "4", "--samples", "30", "--format", "json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 21);
}

#[test]
fn export_writes_an_lp_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_instance(&dir, "small.json", &Instance::single_task(2, &[3.0, 1.0, 2.0, 5.0]));
    let lp = dir.path().join("model.lp");
    let out = gms(&["export", "--formulation", "F4", "--instance", path_str(&path), "--out", path_str(&lp)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(lp).unwrap();
    let pos = |s: &str| text.find(s).unwrap_or_else(|| panic!("missing {s} in\n{text}"));
    assert!(pos("Minimize") < pos("Subject To"));
    assert!(pos("Subject To") < pos("Bounds"));
    assert!(pos("Bounds") < pos("End"));
    assert!(text.contains("X_t1_m0"));
}

#[test]
fn verify_paper_prints_passing_report() {
    let out = gms(&["verify-paper"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 13, "{text}");
    assert!(!text.lines().any(|l| l.starts_with("FAIL")), "{text}");
}
