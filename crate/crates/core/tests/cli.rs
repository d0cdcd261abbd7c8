use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn gsprep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsprep"))
        .args(args)
        .env_remove("GSPREP_CALIBRATION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn compile_linear_eight() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let cal = data("sample27.json");
    let o = gsprep(&[
        "compile",
        "--graph",
        "linear:8",
        "--cal",
        cal.to_str().unwrap(),
        "--objective",
        "smt-runtime",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let summary = json(&stdout(&o));
    assert_eq!(summary["cnots"], 7);
    assert_eq!(summary["hadamards"], 8);
    assert_eq!(summary["proven_optimal"], true);
    let circuit = json(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(circuit["gates"].as_array().unwrap().len(), 15);
}

#[test]
fn compile_fig1_runtime() {
    let cal = data("sample27.json");
    let o = gsprep(&[
        "compile",
        "--graph",
        "fig1-seven",
        "--cal",
        cal.to_str().unwrap(),
        "--objective",
        "runtime",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let circuit = json(&stdout(&o));
    let cx = circuit["gates"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|g| g["kind"] == "cx")
        .count();
    assert_eq!(cx, 6);
}

#[test]
fn exit_codes() {
    let tree = data("tree5.json");
    let o = gsprep(&[
        "compile",
        "--graph",
        "triangle",
        "--cal",
        tree.to_str().unwrap(),
        "--objective",
        "runtime",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());

    let cal = data("sample27.json");
    let o = gsprep(&[
        "compile",
        "--graph",
        "linear:21",
        "--cal",
        cal.to_str().unwrap(),
        "--objective",
        "runtime",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("emit-only"));

    let o = gsprep(&[
        "oracle",
        "--graph",
        "linear:8",
        "--cal",
        cal.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));

    let o = gsprep(&[
        "compile",
        "--graph",
        "linear:3",
        "--cal",
        "/nonexistent.json",
        "--objective",
        "runtime",
    ]);
    assert_eq!(o.status.code(), Some(1));

    let o = gsprep(&[
        "compile",
        "--graph",
        "linear:3",
        "--cal",
        cal.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn calibration_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_gsprep"))
        .args(["oracle", "--graph", "linear:3", "--objective", "runtime"])
        .env("GSPREP_CALIBRATION", data("sym3.json"))
        .output()
        .unwrap();
    assert_eq!(stdout(&o), "670\n");
}

#[test]
fn oracle_prints_value() {
    let sym = data("sym3.json");
    let o = gsprep(&[
        "oracle",
        "--graph",
        "linear:3",
        "--cal",
        sym.to_str().unwrap(),
        "--objective",
        "runtime",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "670\n");
}

#[test]
fn emit_smt_is_fast_and_stable() {
    let cal = data("sample27.json");
    let t = std::time::Instant::now();
    let a = gsprep(&[
        "emit-smt",
        "--graph",
        "linear:21",
        "--cal",
        cal.to_str().unwrap(),
    ]);
    assert!(t.elapsed().as_secs_f64() < 1.0);
    let b = gsprep(&[
        "--threads",
        "1",
        "emit-smt",
        "--graph",
        "linear:21",
        "--cal",
        cal.to_str().unwrap(),
    ]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("(check-sat)"));
}

#[test]
fn simulate_readout_only_mitigated() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = dir.path().join("c.json");
    let report = dir.path().join("r.json");
    let cal = data("readout_only8.json");
    let o = gsprep(&[
        "compile",
        "--graph",
        "linear:5",
        "--cal",
        cal.to_str().unwrap(),
        "--objective",
        "smt-runtime",
        "--out",
        circuit.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = gsprep(&[
        "simulate",
        "--circuit",
        circuit.to_str().unwrap(),
        "--analytic",
        "--mitigate",
        "--noise-from",
        cal.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&std::fs::read_to_string(&report).unwrap());
    assert!((r["fidelity_mitigated"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(r["fidelity_raw"].as_f64().unwrap() < 0.99);
    assert_eq!(r["shots"], 4096);
    assert_eq!(r["seed"], 0);
    assert_eq!(r["elements"].as_object().unwrap().len(), 32);
}

#[test]
fn place_reports_best_mapping() {
    let cal = data("sample27.json");
    let o = gsprep(&[
        "place",
        "--graph",
        "linear:3",
        "--cal",
        cal.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&stdout(&o));
    assert_eq!(r["mapping"].as_array().unwrap().len(), 3);
    assert!(r["candidates"].as_u64().unwrap() > 1);
}

#[test]
fn version_lists_schemas() {
    let o = gsprep(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout(&o);
    for s in [
        "graph schema",
        "calibration schema",
        "circuit schema",
        "report schema",
    ] {
        assert!(v.contains(s), "{v}");
    }
}
