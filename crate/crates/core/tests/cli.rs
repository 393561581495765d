use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fuzzymeta::autodiff::read_checkpoint;
use fuzzymeta::cli::RunConfig;
use fuzzymeta::encoder::Encoder;
use fuzzymeta::fuzzy::RuleBank;

fn fuzzymeta(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuzzymeta"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = fuzzymeta(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn trained(dir: &Path, steps: &str, extra: &[&str]) {
    ok(dir, &["--seed", "3", "--out", "bench", "gen"]);
    let mut args = vec![
        "--seed",
        "3",
        "--out",
        "run",
        "train",
        "--bench",
        "bench",
        "--outer-steps",
        steps,
    ];
    args.extend_from_slice(extra);
    ok(dir, &args);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.txt"), "seed = 1\nbogus_key = 3\n").unwrap();
    let out = fuzzymeta(dir.path(), &["--config", "bad.txt", "gen"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_key"));

    fs::write(dir.path().join("bad.txt"), "alpha = -1\n").unwrap();
    assert_eq!(
        fuzzymeta(dir.path(), &["--config", "bad.txt", "gen"])
            .status
            .code(),
        Some(2)
    );

    let out = fuzzymeta(dir.path(), &["train"]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn missing_data_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = fuzzymeta(dir.path(), &["train", "--bench", "nowhere"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere"));

    let out = fuzzymeta(dir.path(), &["annotate", "--input", "missing.txt"]);
    assert_eq!(out.status.code(), Some(3));

    fs::write(dir.path().join("codings.txt"), "1 0 1\n").unwrap();
    let out = fuzzymeta(dir.path(), &["annotate", "--input", "codings.txt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn zero_steps_leaves_the_seeded_initialization() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path(), "0", &[]);
    let bytes = fs::read(dir.path().join("run/checkpoint.fzc")).unwrap();
    let saved = read_checkpoint::<f64, _>(bytes.as_slice()).unwrap();
    let cfg = RunConfig {
        seed: 3,
        ..Default::default()
    };
    let init = Encoder::new(cfg.encoder(), RuleBank::default_bank())
        .unwrap()
        .init_params::<f64>(3);
    assert_eq!(saved.flatten(), init.flatten());
    let log = fs::read_to_string(dir.path().join("run/train_log.tsv")).unwrap();
    assert_eq!(log.lines().count(), 1);
}

#[test]
fn train_eval_reports_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trained(d, "4", &[]);
    let log = fs::read_to_string(d.join("run/train_log.tsv")).unwrap();
    assert_eq!(log.lines().count(), 5);
    assert!(log.starts_with("step\tsupport_loss\tquery_loss\tquery_accuracy\n"));
    let echo = fs::read_to_string(d.join("run/train_config.txt")).unwrap();
    assert!(echo.contains("outer_steps = 4"));

    let printed = ok(
        d,
        &[
            "--out",
            "report",
            "eval",
            "--bench",
            "bench",
            "--checkpoint",
            "run/checkpoint.fzc",
        ],
    );
    let metrics: Vec<(String, f64)> = csv_rows(&d.join("report/metrics.csv"))
        .into_iter()
        .map(|r| (r[0].clone(), r[1].parse().unwrap()))
        .collect();
    assert_eq!(
        printed,
        fs::read_to_string(d.join("report/metrics.csv")).unwrap()
    );
    let metric = |name: &str| metrics.iter().find(|(n, _)| n == name).unwrap().1;

    // recompute accuracies from the raw predictions
    let preds = csv_rows(&d.join("report/predictions.csv"));
    assert_eq!(preds.len() as f64, metric("count"));
    let hits18 = preds.iter().filter(|r| r[1] == r[2]).count();
    let emotion = |s: &str| s.split('-').next().unwrap().to_string();
    let hits6 = preds
        .iter()
        .filter(|r| emotion(&r[1]) == emotion(&r[2]))
        .count();
    assert_eq!(hits18 as f64 / preds.len() as f64, metric("accuracy18"));
    assert_eq!(hits6 as f64 / preds.len() as f64, metric("accuracy6"));

    let confusion = csv_rows(&d.join("report/confusion18.csv"));
    assert_eq!(confusion.len(), 18);
    let total: u64 = confusion
        .iter()
        .flat_map(|r| r[1..].iter().map(|v| v.parse::<u64>().unwrap()))
        .sum();
    assert_eq!(total as usize, preds.len());
    let diag: u64 = confusion
        .iter()
        .enumerate()
        .map(|(i, r)| r[i + 1].parse::<u64>().unwrap())
        .sum();
    assert_eq!(diag as usize, hits18);

    // the noise sweep at level zero is the clean evaluation
    ok(
        d,
        &[
            "--out",
            "robust",
            "robustness",
            "--bench",
            "bench",
            "--checkpoint",
            "run/checkpoint.fzc",
        ],
    );
    let rows = csv_rows(&d.join("robust/robustness.csv"));
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r[1] == "0") {
        assert_eq!(r[2].parse::<f64>().unwrap(), metric("accuracy18"), "{r:?}");
    }
}

#[test]
fn evaluation_inherits_the_training_ablations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    trained(d, "1", &["--no-fuzzy", "--no-temporal"]);
    ok(
        d,
        &[
            "--out",
            "report",
            "eval",
            "--bench",
            "bench",
            "--checkpoint",
            "run/checkpoint.fzc",
        ],
    );
    let echo = fs::read_to_string(d.join("report/eval_config.txt")).unwrap();
    assert!(echo.contains("use_fuzzy = false"), "{echo}");
    assert!(echo.contains("use_temporal = false"));
}

#[test]
fn annotate_writes_one_row_per_coding() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.txt"), "# nothing here\n\n").unwrap();
    ok(d, &["--out", "a", "annotate", "--input", "empty.txt"]);
    assert_eq!(
        fs::read_to_string(d.join("a/annotations.csv")).unwrap(),
        "emotion,intensity,confidence\n"
    );

    fs::write(
        d.join("codings.txt"),
        "0,0,0,1,1,0,0,0,0,0,1,1\n1 1 0 0 0 0 0 0 0 -1 0 0\n",
    )
    .unwrap();
    ok(d, &["--out", "b", "annotate", "--input", "codings.txt"]);
    assert_eq!(
        fs::read_to_string(d.join("b/annotations.csv")).unwrap(),
        "emotion,intensity,confidence\nSurprise,Low,1\nDisgust,Medium,1\n"
    );
}

#[test]
fn custom_rule_bank_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("rules.txt"), "Fear High 0 0 0 0 0 0 0 0 0 0 0 0\n").unwrap();
    fs::write(d.join("codings.txt"), "1 1 1 1 1 1 1 1 1 1 1 1\n").unwrap();
    ok(
        d,
        &[
            "--out",
            "a",
            "annotate",
            "--input",
            "codings.txt",
            "--rules",
            "rules.txt",
        ],
    );
    let rows = csv_rows(&d.join("a/annotations.csv"));
    assert_eq!(rows[0][..2], ["Fear".to_string(), "High".to_string()]);
}
