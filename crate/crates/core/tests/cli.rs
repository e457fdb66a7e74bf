//! The command-line front end, driven in process through `cli::run` and
//! once through the built binary.

use std::path::Path;
use std::process::Command;

use kglink::cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};

struct Outcome {
    code: i32,
    out: String,
    err: String,
}

fn kglink(args: &[&str], stdin: &str) -> Outcome {
    let mut argv = vec!["kglink".to_string()];
    argv.extend(args.iter().map(|a| a.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Outcome { code, out: String::from_utf8(out).unwrap(), err: String::from_utf8(err).unwrap() }
}

fn ok(args: &[&str]) -> String {
    let o = kglink(args, "");
    assert_eq!(o.code, EXIT_OK, "{args:?}: {}", o.err);
    o.out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Mini graph data and fully trained artifacts under `dir`.
fn mini_artifacts(dir: &Path) {
    let (data, art) = (dir.join("data"), dir.join("art"));
    ok(&["gen-synthetic", "--mini-kg", "--out", s(&data)]);
    ok(&[
        "build-index",
        "--triples",
        s(&data.join("triples.tsv")),
        "--labels",
        s(&data.join("labels.tsv")),
        "--expansions",
        s(&data.join("expansions.tsv")),
        "--out",
        s(&art),
    ]);
    ok(&["train-er", "--artifacts", s(&art), "--dataset", s(&data.join("train.json"))]);
    ok(&["train-reranker", "--artifacts", s(&art), "--dataset", s(&data.join("train.json"))]);
}

#[test]
fn help_and_usage_errors() {
    let help = kglink(&["--help"], "");
    assert_eq!(help.code, EXIT_OK);
    for sub in ["build-index", "train-er", "train-reranker", "link", "eval", "gen-synthetic"] {
        assert!(help.out.contains(sub), "{sub} missing from help");
    }
    assert_eq!(kglink(&["frobnicate"], "").code, EXIT_USAGE);
    assert_eq!(kglink(&["link"], "").code, EXIT_USAGE);
}

#[test]
fn missing_input_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = kglink(
        &["build-index", "--triples", "/nonexistent/t.tsv", "--labels", "/nonexistent/l.tsv", "--out", s(dir.path())],
        "",
    );
    assert_eq!(o.code, EXIT_DATA, "{}", o.err);
    assert!(!o.err.is_empty());
}

#[test]
fn bad_configuration_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"strategy": "density", "colour": "blue"}"#).unwrap();
    let o = kglink(&["--config", s(&cfg), "link", "--artifacts", s(dir.path()), "--question", "x"], "");
    assert_eq!(o.code, EXIT_USAGE, "{}", o.err);
    let o = kglink(&["link", "--artifacts", s(dir.path()), "--question", "x", "--k", "0"], "");
    assert_eq!(o.code, EXIT_USAGE, "{}", o.err);
}

#[test]
fn link_reads_stdin_and_prints_one_json_line_each() {
    let dir = tempfile::tempdir().unwrap();
    mini_artifacts(dir.path());
    let art = dir.path().join("art");
    let stdin = "Where was the founder of Tesla and SpaceX born?\n\n{\"id\": \"mine\", \"text\": \"Who founded SpaceX?\"}\n";
    let o = kglink(&["link", "--artifacts", s(&art)], stdin);
    assert_eq!(o.code, EXIT_OK, "{}", o.err);
    let lines: Vec<serde_json::Value> = o.out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["question_id"], "q-0001");
    assert_eq!(lines[1]["question_id"], "mine");
    let tops: Vec<&str> =
        lines[0]["keywords"].as_array().unwrap().iter().map(|k| k["candidates"][0]["uri"].as_str().unwrap()).collect();
    assert!(tops.contains(&"dbr:SpaceX") && tops.contains(&"dbo:foundedBy"), "{tops:?}");

    let exact = ok(&["link", "--artifacts", s(&art), "--strategy", "exact", "--question", "Who founded SpaceX?"]);
    assert_eq!(exact.lines().count(), 1);
    assert!(exact.contains("\"strategy\":\"exact\""));
}

#[test]
fn config_file_and_flags_share_a_namespace() {
    let dir = tempfile::tempdir().unwrap();
    mini_artifacts(dir.path());
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"strategy": "approx"}"#).unwrap();
    let art = dir.path().join("art");
    let from_file = ok(&["--config", s(&cfg), "link", "--artifacts", s(&art), "--question", "Who founded SpaceX?"]);
    assert!(from_file.contains("\"strategy\":\"approx\""));
    let overridden = ok(&[
        "--config",
        s(&cfg),
        "link",
        "--artifacts",
        s(&art),
        "--strategy",
        "density",
        "--question",
        "Who founded SpaceX?",
    ]);
    assert!(overridden.contains("\"strategy\":\"density\""));
}

#[test]
fn artifacts_built_under_another_config_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    mini_artifacts(dir.path());
    let o = kglink(&["link", "--artifacts", s(&dir.path().join("art")), "--k", "10", "--question", "x"], "");
    assert_eq!(o.code, EXIT_DATA);
    assert!(o.err.contains("config hash"), "{}", o.err);
}

#[test]
fn eval_prints_metrics() {
    let dir = tempfile::tempdir().unwrap();
    mini_artifacts(dir.path());
    let out = ok(&[
        "eval",
        "--artifacts",
        s(&dir.path().join("art")),
        "--dataset",
        s(&dir.path().join("data/dataset.json")),
        "--gold-spans",
    ]);
    let m: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(m["strategy"], "density");
    assert!(m["overall"]["accuracy"].as_f64().unwrap() >= 0.9, "{m}");
}

#[test]
fn gen_synthetic_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["gen-synthetic", "--out", s(d), "--entities", "150", "--questions", "20", "--seed", "5"]);
    }
    for f in ["triples.tsv", "labels.tsv", "expansions.tsv", "dataset.json", "train.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_kglink");
    assert_eq!(Command::new(bin).arg("--help").output().unwrap().status.code(), Some(EXIT_OK));
    assert_eq!(Command::new(bin).arg("nope").output().unwrap().status.code(), Some(EXIT_USAGE));
    let missing = Command::new(bin)
        .args(["eval", "--artifacts", "/nonexistent", "--dataset", "/nonexistent/d.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(EXIT_DATA));
}
