//! Black-box runs of the installed binary: generation, the three solvers,
//! brute force, report determinism, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_manycover"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn gen_to(path: &Path, family: &str, seed: &str) {
    let out = run(&[
        "gen-instance",
        "--family",
        family,
        "--n",
        "5",
        "--m",
        "6",
        "--seed",
        seed,
        "--cost-max",
        "20",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "gen failed: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_instance_writes_each_family() {
    let dir = tempfile::tempdir().unwrap();
    for (family, kind) in [
        ("random-coverage", "msc"),
        ("vertex-cover-like", "ccf"),
        ("planted-optimum", "msc"),
        ("random-metric-flmo", "flmo"),
    ] {
        let path = dir.path().join(format!("{family}.json"));
        gen_to(&path, family, "9");
        let text = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["kind"], kind, "family {family}");
    }
}

#[test]
fn gen_instance_prints_to_stdout_without_out() {
    let out = run(&["gen-instance", "--family", "random-coverage", "--n", "4", "--m", "5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["kind"], "msc");
}

#[test]
fn solve_msc_emits_timed_report_and_deterministic_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    gen_to(&inst, "random-coverage", "21");

    let rep1 = dir.path().join("r1.json");
    let rep2 = dir.path().join("r2.json");
    let mut outs = Vec::new();
    for rep in [&rep1, &rep2] {
        let out = run(&[
            "solve-msc",
            "--instance",
            inst.to_str().unwrap(),
            "--seed",
            "3",
            "--report",
            rep.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outs.push(out);
    }
    for out in &outs {
        let v: serde_json::Value =
            serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
        assert!(v["wall_time_ms"].is_number());
        assert_eq!(v["report"]["problem"], "msc");
        assert_eq!(v["report"]["feasible"], true);
    }
    let b1 = std::fs::read(&rep1).unwrap();
    let b2 = std::fs::read(&rep2).unwrap();
    assert_eq!(b1, b2, "report files must be byte-identical across reruns");
    assert!(!serde_json::from_slice::<serde_json::Value>(&b1).unwrap()["instance_digest"]
        .as_str()
        .unwrap()
        .is_empty());
}

#[test]
fn solve_ccf_and_flmo_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let ccf = dir.path().join("ccf.json");
    gen_to(&ccf, "vertex-cover-like", "5");
    let out = run(&[
        "solve-ccf",
        "--instance",
        ccf.to_str().unwrap(),
        "--oracle",
        "generic",
        "--L-override",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let flmo = dir.path().join("flmo.json");
    gen_to(&flmo, "random-metric-flmo", "6");
    let out = run(&["solve-flmo", "--instance", flmo.to_str().unwrap(), "--eps", "0.3"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["report"]["problem"], "flmo");
}

#[test]
fn brute_force_reports_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    gen_to(&inst, "random-coverage", "33");
    let out = run(&["brute-force", "--instance", inst.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(v["feasible"], true);
    assert!(v["cost"].is_u64() || v["cost"].is_f64());
}

#[test]
fn bench_prints_trial_table() {
    let out = run(&[
        "bench",
        "--family",
        "random-coverage",
        "--n",
        "5",
        "--m",
        "5",
        "--trials",
        "2",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("trial"), "missing header: {text}");
    assert!(text.contains("mean_ratio"), "missing trailer: {text}");
}

#[test]
fn bad_inputs_exit_two() {
    let out = run(&["bench", "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["solve-msc", "--instance", "/nonexistent/x.json"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let ccf = dir.path().join("ccf.json");
    gen_to(&ccf, "vertex-cover-like", "5");
    let out = run(&["solve-msc", "--instance", ccf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "kind mismatch should be an error");
}
