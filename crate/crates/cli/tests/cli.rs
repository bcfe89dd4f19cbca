use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hyperkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperkg")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_kb(dir: &Path, train: &str, valid: &str, test: &str) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("train.txt"), train).unwrap();
    fs::write(dir.join("valid.txt"), valid).unwrap();
    fs::write(dir.join("test.txt"), test).unwrap();
}

fn small_train(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "train", "--preset", "wd", "--data-dir", s(data), "--out", s(out), "--max-epochs", "4", "--eval-every", "2",
        "--dim", "8",
    ];
    args.extend_from_slice(extra);
    hyperkg(&args)
}

#[test]
fn missing_data_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = small_train(&tmp.path().join("absent"), &tmp.path().join("run"), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("train.txt"));
}

#[test]
fn bad_configuration_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(&cfg, r#"{"not_a_key": 1}"#).unwrap();
    let out = hyperkg(&["train", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(hyperkg(&["train", "--preset", "nope"]).status.code(), Some(2));
    assert_eq!(hyperkg(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn vocabulary_mismatch_exits_5() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(hyperkg(&["gen-dataset", "--seed", "1", "--out", s(&a)]).status.success());
    assert!(hyperkg(&["gen-dataset", "--seed", "2", "--out", s(&b)]).status.success());
    let run = tmp.path().join("run");
    assert!(small_train(&a, &run, &[]).status.success());
    let ckpt = run.join("best.ckpt");
    assert_eq!(hyperkg(&["eval", "--checkpoint", s(&ckpt), "--data-dir", s(&a)]).status.code(), Some(0));
    assert_eq!(hyperkg(&["eval", "--checkpoint", s(&ckpt), "--data-dir", s(&b)]).status.code(), Some(5));
}

#[test]
fn numeric_blowup_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    assert!(hyperkg(&["gen-dataset", "--seed", "1", "--out", s(&data)]).status.success());
    let out = small_train(&data, &tmp.path().join("run"), &["--eta", "1e308"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn eval_on_a_tiny_kb_matches_hand_ranking() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    write_kb(&data, "a\tr\tb\nb\tr\tc\n", "a\tr\tc\n", "c\tr\ta\n");
    let run = tmp.path().join("run");
    let trained = hyperkg(&[
        "train", "--preset", "wn18rr", "--data-dir", s(&data), "--out", s(&run), "--max-epochs", "4", "--eval-every",
        "2", "--dim", "8", "--negs-e", "1",
    ]);
    assert!(trained.status.success(), "{}", String::from_utf8_lossy(&trained.stderr));
    let per_query = tmp.path().join("q.csv");
    let out = hyperkg(&["eval", "--checkpoint", s(&run.join("best.ckpt")), "--data-dir", s(&data), "--per-query", s(&per_query)]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["n_queries"], 2);

    // recompute the metrics from the per-query ranks
    let csv = fs::read_to_string(&per_query).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "rank").unwrap();
    let ranks: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(col).unwrap().parse().unwrap()).collect();
    assert_eq!(ranks.len(), 2);
    // 3 candidates per side, at most one of them filtered
    assert!(ranks.iter().all(|&r| (1.0..=3.0).contains(&r)));
    let mrr = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / 2.0;
    assert!((summary["mrr"].as_f64().unwrap() - mrr).abs() < 1e-12);
}

#[test]
fn analyze_degrees_writes_both_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    write_kb(&data, "a\tr\tb\nb\tr\tc\n", "a\tr\tc\n", "c\tr\ta\n");
    let csv = tmp.path().join("deg.csv");
    let out = hyperkg(&["analyze-degrees", "--data-dir", s(&data), "--out", s(&csv)]);
    assert!(out.status.success());
    assert!(csv.exists() && csv.with_extension("json").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("d");
    assert!(hyperkg(&["gen-dataset", "--rules", "ab", "--seed", "3", "--out", s(&data)]).status.success());
    let mut seen = Vec::new();
    for _ in 0..2 {
        let run = tmp.path().join("run");
        let out = small_train(&data, &run, &["--seed", "9"]);
        assert!(out.status.success());
        let files: Vec<Vec<u8>> =
            ["log.csv", "config.json", "report.json"].iter().map(|f| fs::read(run.join(f)).unwrap()).collect();
        seen.push((out.stdout, files));
        fs::remove_dir_all(&run).unwrap();
    }
    assert_eq!(seen[0], seen[1]);
}
