use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const STAGES: [&str; 7] = ["embed", "merge", "score", "filter", "align", "spectral", "threshold"];

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/demo")
}

fn nsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = nsr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn laplacian_of_a_single_edge() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.jsonl");
    fs::write(
        &input,
        concat!(
            "{\"kind\":\"node\",\"id\":\"a\",\"text\":\"a\",\"belief\":0.5}\n",
            "{\"kind\":\"node\",\"id\":\"b\",\"text\":\"b\",\"belief\":0.5}\n",
            "{\"kind\":\"edge\",\"premise\":\"a\",\"hypothesis\":\"b\"}\n",
        ),
    )
    .unwrap();
    let out = dir.path().join("l.json");
    ok(&["stage", "laplacian", "--input", p(&input), "--out", p(&out)]);
    let m = &lines(&out)[0];
    assert_eq!(m["kind"], "matrix");
    assert_eq!(m["node_order"], serde_json::json!(["a", "b"]));
    assert_eq!(m["rows"], serde_json::json!([[1.0, -1.0], [-1.0, 1.0]]));
}

#[test]
fn merge_at_threshold_one_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let embedded = dir.path().join("embedded.jsonl");
    let merged = dir.path().join("merged.jsonl");
    let graph = demo().join("graph.jsonl");
    ok(&["stage", "embed", "--input", p(&graph), "--out", p(&embedded)]);
    ok(&["stage", "merge", "--merge-threshold", "1.0", "--input", p(&embedded), "--out", p(&merged)]);
    assert_eq!(fs::read(&embedded).unwrap(), fs::read(&merged).unwrap());
}

#[test]
fn unknown_stage_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsr(&["stage", "levitate", "--input", "missing.jsonl", "--out", p(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("levitate"));
}

#[test]
fn empty_graph_runs_to_empty_conclusions() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("empty.jsonl");
    fs::write(&input, "").unwrap();
    let out_dir = dir.path().join("out");
    ok(&["run", "--input", p(&input), "--out-dir", p(&out_dir)]);
    let conclusions = lines(&out_dir.join("conclusions.jsonl"));
    assert!(conclusions.iter().all(|c| c["kind"] != "conclusion"));
}

#[test]
fn demo_config_reproduces_the_golden_report_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo().join("config.toml");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["run", "--config", p(&config), "--out-dir", p(&a)]);
    ok(&["run", "--config", p(&config), "--out-dir", p(&b)]);
    for name in ["graph.jsonl", "filter.json", "signal.json", "conclusions.jsonl", "report.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_eq!(
        fs::read_to_string(a.join("report.json")).unwrap(),
        fs::read_to_string(demo().join("report.golden.json")).unwrap()
    );
}

#[test]
fn staged_runs_compose_to_the_full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo().join("config.toml");
    let full = dir.path().join("full");
    ok(&["run", "--config", p(&config), "--out-dir", p(&full)]);

    let mut input = demo().join("graph.jsonl");
    for name in STAGES {
        let out = dir.path().join(format!("{name}.out"));
        ok(&["stage", name, "--config", p(&config), "--input", p(&input), "--out", p(&out)]);
        input = out;
    }
    let staged = |name: &str| fs::read(dir.path().join(format!("{name}.out"))).unwrap();
    assert_eq!(staged("align"), fs::read(full.join("graph.jsonl")).unwrap());
    assert_eq!(staged("spectral"), fs::read(full.join("signal.json")).unwrap());
    assert_eq!(staged("threshold"), fs::read(full.join("conclusions.jsonl")).unwrap());
}

#[test]
fn exit_codes_name_the_failure() {
    let dir = tempfile::tempdir().unwrap();
    let graph = demo().join("graph.jsonl");
    let out = dir.path().join("x");

    let bad = nsr(&["stage", "embed", "--merge-threshold", "1.5", "--input", p(&graph), "--out", p(&out)]);
    assert_eq!(bad.status.code(), Some(3));

    let missing = dir.path().join("missing.jsonl");
    let load = nsr(&["stage", "embed", "--input", p(&missing), "--out", p(&out)]);
    assert_eq!(load.status.code(), Some(4));

    // merge needs embeddings
    let merge = nsr(&["stage", "merge", "--input", p(&graph), "--out", p(&out)]);
    assert_eq!(merge.status.code(), Some(11));

    let signal = dir.path().join("signal.json");
    let config = demo().join("config.toml");
    let run = dir.path().join("run");
    ok(&["run", "--config", p(&config), "--out-dir", p(&run)]);
    fs::copy(run.join("signal.json"), &signal).unwrap();
    let laplacian = nsr(&["stage", "laplacian", "--input", p(&signal), "--out", p(&out)]);
    assert_eq!(laplacian.status.code(), Some(15));

    let no_url = nsr(&["run", "--provider", "http", "--input", p(&graph), "--out-dir", p(&run)]);
    assert_eq!(no_url.status.code(), Some(3));
}

#[test]
fn failing_run_leaves_a_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let graph = demo().join("graph.jsonl");
    let out_dir = dir.path().join("out");
    // nothing listens on port 9 on the loopback interface
    let out = nsr(&[
        "run", "--provider", "http", "--provider-url", "http://127.0.0.1:9",
        "--input", p(&graph), "--out-dir", p(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(10));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["failure"]["stage"], "embed");
    assert_eq!(report["stages"], serde_json::json!([]));
}
