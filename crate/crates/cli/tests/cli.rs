use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dephasing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Small but complete config: 4 Ohmic classes, 60 samples each.
fn tiny_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("tiny.json");
    let text = format!(
        r#"{{
  "name": "tiny",
  "description": "cli smoke test",
  "kind": "quantum",
  "values": [0.3, 0.9, 1.8, 2.7],
  "n_states": 60,
  "n_times": 15,
  "n_pairs": 40,
  "samples_per_class": 60,
  "max_epochs": 4,
  "seed": 5{extra}
}}"#
    );
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn gen_train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let data = dir.path().join("data");
    let o = run(&["gen", "--config", &cfg, "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{o:?}");
    assert!(stdout(&o).contains("s=0.300: 48"));
    for split in ["train", "val", "test"] {
        assert!(data.join(format!("{split}.dphc")).exists());
        assert!(data.join(format!("{split}.meta.json")).exists());
    }

    let model_dir = dir.path().join("model");
    let o = run(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--arch",
        "nn1",
        "--max-epochs",
        "3",
        "--out",
        model_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let model = model_dir.join("model.dphm");
    assert!(model.exists());
    assert!(model_dir.join("train_report.json").exists());

    let eval_dir = dir.path().join("eval");
    let o = run(&[
        "eval",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.join("test.dphc").to_str().unwrap(),
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let scores: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(eval_dir.join("scores.json")).unwrap()).unwrap();
    assert_eq!(scores["samples"], 24);
    let csv = fs::read_to_string(eval_dir.join("confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(fs::read_to_string(eval_dir.join("confusion.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn gen_is_deterministic_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    for out in [&a, &b] {
        assert!(
            run(&["gen", "--config", &cfg, "--out", out.to_str().unwrap()])
                .status
                .success()
        );
    }
    assert!(run(&[
        "gen",
        "--config",
        &cfg,
        "--seed",
        "6",
        "--out",
        c.to_str().unwrap()
    ])
    .status
    .success());
    let read = |d: &Path| fs::read(d.join("train.dphc")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
}

#[test]
fn eval_rejects_mismatched_classes() {
    let dir = tempfile::tempdir().unwrap();
    let four = tiny_config(dir.path(), "");
    let d4 = dir.path().join("d4");
    assert!(
        run(&["gen", "--config", &four, "--out", d4.to_str().unwrap()])
            .status
            .success()
    );
    let m = dir.path().join("m");
    assert!(run(&[
        "train",
        "--data",
        d4.to_str().unwrap(),
        "--max-epochs",
        "1",
        "--out",
        m.to_str().unwrap()
    ])
    .status
    .success());
    let two = tiny_config(dir.path(), r#", "two_class": true"#);
    let d2 = dir.path().join("d2");
    assert!(
        run(&["gen", "--config", &two, "--out", d2.to_str().unwrap()])
            .status
            .success()
    );
    let o = run(&[
        "eval",
        "--model",
        m.join("model.dphm").to_str().unwrap(),
        "--data",
        d2.join("test.dphc").to_str().unwrap(),
        "--out",
        dir.path().join("e").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn curves_for_the_color_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "curves",
        "--kind",
        "classical",
        "--points",
        "30",
        "--svg",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{o:?}");
    let csv = fs::read_to_string(dir.path().join("curves.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 17);
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(first[0], 0.2);
    // at the window start, redder noise has dephased more
    assert!(first[1..].windows(2).all(|w| w[0] > w[1]), "{first:?}");
    assert_eq!(csv.lines().count(), 31);
    assert!(dir.path().join("curves.svg").exists());
}

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let easy = tiny_config(dir.path(), r#", "expect_accuracy_min": 0.0"#);
    let o = run(&["experiment", "--config", &easy, "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{o:?}");
    assert!(stdout(&o).contains("PASS accuracy"));
    assert!(dir.path().join("tiny/scores.json").exists());

    // a band no run can satisfy
    let impossible = tiny_config(
        dir.path(),
        r#", "expect_accuracy_min": 1.0, "expect_macro_f1_max": 0.0"#,
    );
    let o = run(&["experiment", "--config", &impossible, "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{o:?}");
    assert!(stdout(&o).contains("FAIL"));

    let o = run(&["experiment", "no-such-preset", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"name": "bad", "purity": 2.0}"#).unwrap();
    let o = run(&[
        "experiment",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out,
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn experiment_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let mut scores = Vec::new();
    for run_dir in ["r1", "r2"] {
        let out = dir.path().join(run_dir);
        let o = run(&[
            "experiment",
            "--config",
            &cfg,
            "--save-data",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{o:?}");
        scores.push((
            fs::read(out.join("tiny/scores.json")).unwrap(),
            fs::read(out.join("tiny/test.dphc")).unwrap(),
            fs::read(out.join("tiny/model.dphm")).unwrap(),
        ));
    }
    assert_eq!(scores[0], scores[1]);
}

#[test]
fn preset_list() {
    let o = run(&["experiment", "--list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "ohmic-16",
        "colored-noisy-16",
        "pure-to-mixed-transfer",
        "bloch-region-generalization",
        "two-class-colored-noisy",
    ] {
        assert!(text.contains(name), "{name}");
    }
}
