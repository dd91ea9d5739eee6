use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use serde_json::Value;
use tempfile::TempDir;

use teeda_core::persistence::load_corpus;
use teeda_service::Registry;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .display()
        .to_string()
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn teeda(args: &[&str]) -> Output {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("teeda").chain(args.iter().copied());
    let code = teeda_cli::run(argv, &mut out, &mut err);
    Output {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites the file.
fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from {}", path.display());
}

/// Copies fixtures into a temp dir so absolute paths do not leak into outputs.
fn workdir(names: &[&str]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for n in names {
        fs::copy(fixture(n), dir.path().join(n)).unwrap();
    }
    dir
}

#[test]
fn stats_on_example_items() {
    let out = teeda(&["stats", &fixture("examples.jsonl")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(
        out.stdout.lines().next().unwrap(),
        "items 2, requests 1, providable 1, variable types 11, avg 5.50"
    );
    assert_golden("stats_examples.txt", &out.stdout);
}

#[test]
fn match_with_no_candidates_prints_unmet_notice() {
    let out = teeda(&["match", &fixture("examples.jsonl"), "--request", "table1", "--top", "5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("unmet"));
    assert_golden("match_example_request.txt", &out.stdout);

    let json = teeda(&["--json", "match", &fixture("examples.jsonl"), "--request", "table1"]);
    let v: Value = serde_json::from_str(&json.stdout).unwrap();
    assert_eq!(v["unmet"], true);
    assert_eq!(v["matches"], Value::Array(vec![]));
}

#[test]
fn report_on_category_examples() {
    let out = teeda(&["report", &fixture("categories.jsonl")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    for n in 1..=3 {
        assert!(out.stdout.contains(&format!("Scenario {n} (")));
    }
    assert_eq!(out.stdout.matches(": 4 request(s)").count(), 3);
    assert_golden("report_categories.txt", &out.stdout);

    let json = teeda(&["--json", "report", &fixture("categories.jsonl")]);
    let v: Value = serde_json::from_str(&json.stdout).unwrap();
    let counts: Vec<u64> = v["categories"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, vec![4, 4, 4]);
}

#[test]
fn import_compare_export_and_network() {
    let dir = workdir(&["requests.csv", "jackets.csv", "examples.jsonl"]);
    let p = |n: &str| dir.path().join(n).display().to_string();

    let out = teeda(&["import", "--kind", "request", "--format", "csv", &p("requests.csv"), "--into", &p("c.jsonl")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = teeda(&["import", "--kind", "providable", "--format", "csv", &p("jackets.csv"), "--into", &p("c.jsonl")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_golden("imported.jsonl", &fs::read_to_string(p("c.jsonl")).unwrap());

    let out = teeda(&["match", &p("c.jsonl"), "--request", "r2"]);
    assert_golden("match_r2.txt", &out.stdout);

    let out = teeda(&["compare", &p("examples.jsonl"), &p("c.jsonl"), "--dimension", "sharing"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let dir_text = dir.path().display().to_string();
    assert_golden("compare_sharing.txt", &out.stdout.replace(&dir_text, "<dir>"));

    let out = teeda(&["export", &p("c.jsonl"), "--format", "csv", "--kind", "providable"]);
    assert_golden("export_providable.csv", &out.stdout);

    let out = teeda(&["network", &p("c.jsonl"), "--out", &p("n.json")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(out.stdout, format!("6 nodes, 11 edges written to {}\n", p("n.json")));
    assert_golden("network_imported.json", &fs::read_to_string(p("n.json")).unwrap());
    let stdout_doc = teeda(&["network", &p("c.jsonl")]).stdout;
    assert_eq!(stdout_doc, fs::read_to_string(p("n.json")).unwrap());
}

#[test]
fn records_export_reimports_to_the_same_corpus() {
    let dir = workdir(&["categories.jsonl", "examples.jsonl"]);
    let p = |n: &str| dir.path().join(n).display().to_string();
    for kind in ["request", "providable"] {
        let out = teeda(&["export", &p("examples.jsonl"), "--kind", kind, "--out", &p(&format!("{kind}.jsonl"))]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        let out = teeda(&["import", "--kind", kind, "--format", "records", &p(&format!("{kind}.jsonl")), "--into", &p("back.jsonl")]);
        assert_eq!(out.code, 0, "{}", out.stderr);
    }
    assert_eq!(
        fs::read_to_string(p("back.jsonl")).unwrap(),
        teeda(&["export", &p("examples.jsonl")]).stdout
    );
    assert_eq!(load_corpus(p("back.jsonl")).unwrap(), load_corpus(p("examples.jsonl")).unwrap());

    let out = teeda(&["export", &p("categories.jsonl"), "--format", "csv", "--kind", "request", "--out", &p("cat.csv")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let out = teeda(&["import", "--kind", "request", "--format", "csv", &p("cat.csv"), "--into", &p("cat.jsonl")]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(load_corpus(p("cat.jsonl")).unwrap(), load_corpus(p("categories.jsonl")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = workdir(&["bad_jackets.csv", "examples.jsonl"]);
    let p = |n: &str| dir.path().join(n).display().to_string();

    assert_eq!(teeda(&["--help"]).code, 0);
    assert_eq!(teeda(&[]).code, 1);
    assert_eq!(teeda(&["stats"]).code, 1);
    assert_eq!(teeda(&["frobnicate"]).code, 1);
    assert_eq!(teeda(&["compare", "a", "b", "--dimension", "colour"]).code, 1);
    assert_eq!(teeda(&["stats", &p("missing.jsonl")]).code, 1);
    assert_eq!(teeda(&["match", &p("examples.jsonl"), "--request", "table2"]).code, 1);
    assert_eq!(teeda(&["export", &p("examples.jsonl"), "--format", "csv"]).code, 1);

    let out = teeda(&["import", "--kind", "providable", "--format", "csv", &p("bad_jackets.csv"), "--into", &p("c.jsonl")]);
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("row 3"));
    assert!(out.stderr.contains("hologram"));
    assert!(!dir.path().join("c.jsonl").exists(), "a failed import writes nothing");

    fs::write(p("broken.jsonl"), "{\"kind\": \"request\"}\n").unwrap();
    assert_eq!(teeda(&["stats", &p("broken.jsonl")]).code, 2);
    fs::write(p("extra.jsonl"), "{\"kind\":\"request\",\"name\":\"a\",\"variables\":[\"x\"],\"x-note\":1}\n").unwrap();
    assert_eq!(teeda(&["stats", &p("extra.jsonl")]).code, 2);
    assert_eq!(teeda(&["--lenient", "stats", &p("extra.jsonl")]).code, 0);

    let dup = teeda(&["import", "--kind", "request", "--format", "records", &p("examples.jsonl"), "--into", &p("examples.jsonl")]);
    assert_eq!(dup.code, 2, "providable record in a request import");
}

#[test]
fn binary_output_is_byte_deterministic() {
    let bin = env!("CARGO_BIN_EXE_teeda");
    let args: &[&[&str]] = &[
        &["stats", &fixture("categories.jsonl")],
        &["--json", "stats", &fixture("categories.jsonl")],
        &["report", &fixture("categories.jsonl")],
        &["network", &fixture("categories.jsonl")],
        &["--json", "report", &fixture("categories.jsonl")],
    ];
    for a in args {
        let run = || Command::new(bin).args(*a).output().unwrap();
        let first = run();
        assert!(first.status.success());
        assert_eq!(first.stdout, run().stdout);
        assert_eq!(String::from_utf8(first.stdout).unwrap(), teeda(a).stdout);
    }
    let usage = Command::new(bin).arg("stats").output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
}

#[tokio::test]
async fn cli_stats_equal_service_stats() {
    let dir = workdir(&["categories.jsonl", "examples.jsonl"]);
    let corpus = dir.path().join("merged.jsonl");
    let merged = fs::read_to_string(dir.path().join("categories.jsonl")).unwrap()
        + &fs::read_to_string(dir.path().join("examples.jsonl")).unwrap();
    fs::write(&corpus, merged).unwrap();

    let cli: Value = serde_json::from_str(&teeda(&["--json", "stats", &corpus.display().to_string()]).stdout).unwrap();

    let registry = Arc::new(Registry::open(&corpus).unwrap());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let (stop, stopped) = tokio::sync::oneshot::channel::<()>();
    let server = tokio::spawn(teeda_service::http::serve_on(registry, listener, async {
        let _ = stopped.await;
    }));
    let mut service: Value = reqwest::get(format!("http://{addr}/stats"))
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let _ = stop.send(());
    server.await.unwrap().unwrap();

    assert_eq!(service["seq"], 14);
    service.as_object_mut().unwrap().remove("seq");
    assert_eq!(cli, service);
}
