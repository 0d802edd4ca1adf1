use std::path::Path;
use std::process::{Command, Output};

use active_pets::data::{load_pair_dataset, save_pair_dataset};
use active_pets::synthetic::SyntheticSpec;
use active_pets::Label;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_active-pets"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = cli(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn split_then_run_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let all = dir.path().join("all.jsonl");
    save_pair_dataset(
        &all,
        &SyntheticSpec::skewed(500, [0.2, 0.7, 0.1], 1).generate(),
    )
    .unwrap();
    let (test, pool) = (dir.path().join("test.jsonl"), dir.path().join("pool.jsonl"));
    let out = ok(&[
        "split",
        s(&all),
        "--per-class",
        "20",
        "--seed",
        "123",
        "--test-out",
        s(&test),
        "--pool-out",
        s(&pool),
    ]);
    assert!(out.contains("test:"));
    let test_set = load_pair_dataset(&test).unwrap();
    assert_eq!(test_set.len(), 60);
    assert_eq!(load_pair_dataset(&pool).unwrap().len(), 440);

    let results = dir.path().join("results");
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        format!(
            "strategy = \"active_pets_o\"\nbudget_max = 30\nseeds = [123]\n[data]\npool = \"{}\"\ntest = \"{}\"\n",
            s(&pool),
            s(&test)
        ),
    )
    .unwrap();
    let out = ok(&["run", s(&config), "--output", s(&results)]);
    assert!(out.contains("18 rows"), "{out}");
    assert!(results.join("results.csv").exists() && results.join("manifest.json").exists());

    let out = ok(&[
        "analyze",
        s(&results.join("results.csv")),
        "--labelled",
        s(&results.join("labelled_seed123.jsonl")),
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("strategy,budget,macro_f1"));
    assert!(lines[1].starts_with("active_pets_o,10,"));
    assert!(out.contains("maas_ttr="));
}

#[test]
fn retrieve_writes_a_pair_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    let claims = dir.path().join("claims.jsonl");
    std::fs::write(
        &corpus,
        "{\"doc_id\": 1, \"title\": \"Vitamin D\", \"sentences\": [\"Vitamin D raises bone density.\"]}\n\
         {\"doc_id\": 2, \"title\": \"Coffee\", \"sentences\": [\"Coffee is not linked to mortality.\"]}\n\
         {\"doc_id\": 3, \"title\": \"Sleep\", \"sentences\": [\"Sleep loss impairs memory.\"]}\n\
         {\"doc_id\": 4, \"title\": \"Exercise\", \"sentences\": [\"Exercise lifts mood.\"]}\n",
    )
    .unwrap();
    std::fs::write(
        &claims,
        "{\"id\": 7, \"claim\": \"Vitamin D improves bone density\", \"evidence_map\": {\"1\": \"Support\"}}\n\
         {\"id\": 8, \"claim\": \"Coffee raises mortality\", \"evidence_map\": {\"2\": \"Contradict\"}}\n",
    )
    .unwrap();
    let out_path = dir.path().join("pairs.jsonl");
    let out = ok(&[
        "retrieve",
        "--corpus",
        s(&corpus),
        "--claims",
        s(&claims),
        "--k",
        "2",
        "--out",
        s(&out_path),
    ]);
    assert!(out.contains("4 pairs"));
    let pairs = load_pair_dataset(&out_path).unwrap();
    let first = pairs
        .instance("7:1")
        .expect("gold abstract retrieved first");
    assert_eq!(first.claim, "Vitamin D improves bone density");
    assert_eq!(pairs.gold_stats().count(Label::Neutral), 2);
}

#[test]
fn errors_exit_non_zero() {
    let out = cli(&["run", "/nonexistent/config.toml"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "budget_max = 35\n").unwrap();
    let out = cli(&["run", s(&bad)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not divide"));

    assert!(!cli(&["frobnicate"]).status.success());
}
