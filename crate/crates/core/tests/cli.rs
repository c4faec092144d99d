mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dialect-id"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(fs::read(path).unwrap()).to_vec()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn synth(dir: &Path, extra: &[&str]) {
    let out = p(dir, "");
    let mut args = vec!["synth", "--out", out.as_str()];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn train_and_predict_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "100", "--test-per-label", "50"]);
    for run_id in ["a", "b"] {
        let model = p(d, &format!("model-{run_id}.txt"));
        let pred = p(d, &format!("pred-{run_id}.txt"));
        ok(&["train", "--train", &p(d, "train.tsv"), "--model", &model, "--seed", "5"]);
        ok(&["predict", "--model", &model, "--input", &p(d, "test.tsv"), "--output", &pred]);
    }
    assert_eq!(digest(&d.join("model-a.txt")), digest(&d.join("model-b.txt")));
    assert_eq!(digest(&d.join("pred-a.txt")), digest(&d.join("pred-b.txt")));
}

#[test]
fn synth_is_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    synth(a.path(), &["--seed", "9"]);
    synth(b.path(), &["--seed", "9"]);
    for f in ["train.tsv", "dev.tsv", "test.tsv", "markers.tsv"] {
        assert_eq!(digest(&a.path().join(f)), digest(&b.path().join(f)), "{f}");
    }
}

#[test]
fn train_summary_reports_members() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "50"]);
    let out = ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt")]);
    for spec in ["char:2", "char:3", "char:4", "char:5"] {
        let line = out.lines().find(|l| l.trim_start().starts_with(spec)).expect(spec);
        assert!(line.contains("vocabulary") && line.contains("epochs"), "{line}");
    }
}

#[test]
fn predictions_on_separable_train_data() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--separability", "0.95", "--train-per-label", "100"]);
    ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt")]);
    ok(&["predict", "--model", &p(d, "m.txt"), "--input", &p(d, "train.tsv"), "--output", &p(d, "pred.txt")]);
    let gold: Vec<String> = fs::read_to_string(d.join("train.tsv"))
        .unwrap()
        .lines()
        .map(|l| l.rsplit('\t').next().unwrap().to_string())
        .collect();
    let pred: Vec<String> = fs::read_to_string(d.join("pred.txt")).unwrap().lines().map(String::from).collect();
    assert_eq!(gold.len(), pred.len());
    let correct = gold.iter().zip(&pred).filter(|(g, p)| g == p).count();
    assert!(correct as f64 >= 0.99 * gold.len() as f64, "{correct}/{}", gold.len());
}

#[test]
fn empty_input_gives_empty_output() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "20"]);
    ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt"), "--features", "char:3"]);
    fs::write(d.join("empty.tsv"), "").unwrap();
    ok(&["predict", "--model", &p(d, "m.txt"), "--input", &p(d, "empty.tsv"), "--output", &p(d, "out.txt")]);
    assert_eq!(fs::read_to_string(d.join("out.txt")).unwrap(), "");
}

#[test]
fn f32_models_train_and_predict() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "50"]);
    ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt"), "--precision", "f32"]);
    assert!(fs::read_to_string(d.join("m.txt")).unwrap().contains("scalar f32"));
    ok(&["predict", "--model", &p(d, "m.txt"), "--input", &p(d, "test.tsv"), "--output", &p(d, "out.txt")]);
    let out = ok(&["evaluate", "--gold", &p(d, "test.tsv"), "--pred", &p(d, "out.txt")]);
    assert!(out.contains("macro F1"));
}

#[test]
fn evaluate_identical_files() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--test-per-label", "30"]);
    let labels: String = fs::read_to_string(d.join("test.tsv"))
        .unwrap()
        .lines()
        .map(|l| format!("{}\n", l.rsplit('\t').next().unwrap()))
        .collect();
    fs::write(d.join("labels.txt"), labels).unwrap();
    for gold in ["labels.txt", "test.tsv"] {
        let out = ok(&["evaluate", "--gold", &p(d, gold), "--pred", &p(d, "labels.txt")]);
        assert!(out.contains("macro F1     1.0000"), "{out}");
    }
    let tsv = ok(&["evaluate", "--gold", &p(d, "labels.txt"), "--pred", &p(d, "labels.txt"), "--format", "tsv"]);
    assert!(tsv.contains("summary\tmacro_f1\t1.0000"), "{tsv}");
}

#[test]
fn baseline_is_near_chance() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--test-per-label", "250"]);
    let mut total = 0.0;
    for seed in 0..5 {
        let out = ok(&["baseline", "--gold", &p(d, "test.tsv"), "--seed", &seed.to_string(), "--format", "tsv"]);
        let line = out.lines().find(|l| l.starts_with("summary\tmacro_f1\t")).unwrap();
        total += line.rsplit('\t').next().unwrap().parse::<f64>().unwrap();
    }
    let mean = total / 5.0;
    assert!((mean - 0.25).abs() < 0.03, "{mean}");
}

#[test]
fn top_features_table_shape() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &[]);
    ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt"), "--features", "char:3,char:4"]);
    let markers = fs::read_to_string(d.join("markers.tsv")).unwrap();
    let out = ok(&["top-features", "--model", &p(d, "m.txt"), "--label", "LU", "--k", "10", "--format", "tsv"]);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    for (i, row) in rows.iter().enumerate() {
        let cols: Vec<&str> = row.split('\t').collect();
        assert_eq!(cols.len(), 3);
        assert_eq!(cols[0], (i + 1).to_string());
        assert!(cols[2].parse::<f64>().unwrap() > 0.0);
    }
    let names: Vec<&str> = rows.iter().map(|r| r.split('\t').nth(1).unwrap()).collect();
    for m in common::markers_for(&markers, "LU") {
        assert!(names.contains(&m), "{m} not in {names:?}");
    }
    let text = ok(&["top-features", "--model", &p(d, "m.txt"), "--label", "BE", "--member", "char:4"]);
    assert_eq!(text.lines().count(), 12);
    assert!(text.contains("Character 4-grams"));
}

#[test]
fn experiment_commands_print_tables() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "40", "--dev-per-label", "20"]);
    let (train, dev) = (p(d, "train.tsv"), p(d, "dev.tsv"));
    let grid = ok(&["gridsearch", "--train", &train, "--dev", &dev, "--grid", "0.1,1,10"]);
    assert!(grid.contains("best C ="), "{grid}");
    let grid_tsv = ok(&["gridsearch", "--train", &train, "--dev", &dev, "--grid", "0.1,1,10", "--format", "tsv"]);
    assert_eq!(grid_tsv.lines().count(), 4, "{grid_tsv}");
    let ablation = ok(&["ablation", "--train", &train, "--dev", &dev, "--features", "char:2,word:1,skip:1", "--format", "tsv"]);
    assert_eq!(ablation.lines().count(), 4, "{ablation}");
    let subsets = ok(&["subsets", "--train", &train, "--dev", &dev, "--subsets", "char:2;char:2,char:3"]);
    assert!(subsets.contains("char:2,char:3"), "{subsets}");
}

#[test]
fn merge_dev_changes_training_data() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "20", "--dev-per-label", "20"]);
    let out = ok(&[
        "train", "--train", &p(d, "train.tsv"), "--merge-dev", &p(d, "dev.tsv"), "--model", &p(d, "m.txt"), "--features", "char:2",
    ]);
    assert!(out.contains("on 160 instances"), "{out}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    synth(d, &["--train-per-label", "10"]);
    let usage = run(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt"), "--features", "char:9"]);
    assert_eq!(usage.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&usage.stderr);
    assert!(msg.contains("char:9") && msg.contains("char:1-8"), "{msg}");
    ok(&["train", "--train", &p(d, "train.tsv"), "--model", &p(d, "m.txt"), "--features", "char:9", "--allow-any-n"]);

    assert_eq!(run(&["train", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--train", "x.tsv", "--model", "m", "--features", "char:x"]).status.code(), Some(1));
    assert_eq!(run(&["train", "--train", "/nonexistent/x.tsv", "--model", "m"]).status.code(), Some(2));

    fs::write(d.join("bad.tsv"), "no tab here\n").unwrap();
    assert_eq!(run(&["train", "--train", &p(d, "bad.tsv"), "--model", &p(d, "m2.txt")]).status.code(), Some(2));

    let model = fs::read_to_string(d.join("m.txt")).unwrap().replacen("version 1", "version 99", 1);
    fs::write(d.join("future.txt"), model).unwrap();
    let out = run(&["predict", "--model", &p(d, "future.txt"), "--input", &p(d, "test.tsv"), "--output", &p(d, "o.txt")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));

    let out = run(&["top-features", "--model", &p(d, "m.txt"), "--label", "XX"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn help_lists_every_flag_with_default() {
    let expected: &[(&str, &[&str])] = &[
        ("train", &["--train", "--features", "--model", "--merge-dev", "--c", "--loss", "--tol", "--max-epochs", "--seed", "--no-bias", "--min-df", "--no-lowercase", "--allow-any-n", "--precision"]),
        ("predict", &["--model", "--input", "--output"]),
        ("evaluate", &["--gold", "--pred", "--format"]),
        ("baseline", &["--gold", "--seed", "--output", "--format"]),
        ("gridsearch", &["--train", "--dev", "--features", "--grid", "--format", "--c", "--seed"]),
        ("ablation", &["--train", "--dev", "--features", "--format"]),
        ("subsets", &["--train", "--dev", "--subsets", "--format"]),
        ("top-features", &["--model", "--label", "--k", "--member", "--format"]),
        ("synth", &["--seed", "--out", "--labels", "--train-per-label", "--dev-per-label", "--test-per-label", "--separability"]),
    ];
    for (cmd, flags) in expected {
        let help = ok(&[cmd, "--help"]);
        for flag in *flags {
            assert!(help.contains(&format!("{flag} ")) || help.contains(&format!("{flag}\n")), "{cmd} help lacks {flag}");
        }
        if *cmd != "predict" {
            assert!(help.contains("[default:"), "{cmd} help lists no defaults");
        }
    }
    let help = ok(&["train", "--help"]);
    assert!(help.contains("[default: char:2,char:3,char:4,char:5]"));
    assert!(help.contains("[default: squared_hinge]"));
}
