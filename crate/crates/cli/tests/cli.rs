use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn noro(args: &[&str], paths: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_noro"));
    cmd.args(args);
    for (flag, path) in paths {
        cmd.arg(flag).arg(path);
    }
    cmd.output().expect("spawn noro")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn small_dataset(dir: &Path) -> PathBuf {
    let path = dir.join("small.csv");
    let out = noro(&["synth", "--rows", "400", "--subjects", "8", "--seed", "5"], &[("--out", &path)]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn missing_dataset_is_a_one_line_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.data");
    let out = noro(&["select-features"], &[("--data", &missing), ("--out", dir.path())]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: ") && err.contains("nope.data"), "{err}");
}

#[test]
fn invalid_model_is_a_usage_error_listing_valid_kinds() {
    let out = noro(&["evaluate", "--models", "ridge,svm"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("ridge, knn, neural, bagged, gpr"), "{err}");
}

#[test]
fn select_features_writes_report_with_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    for trials in ["1", "2"] {
        let out = noro(&["select-features", "--selection-trials", trials], &[("--data", &data), ("--out", dir.path())]);
        assert!(out.status.success(), "{}", stderr(&out));
        let file = read_json(&dir.path().join("feature_importance.json"));
        assert_eq!(file["report"]["trials"], trials.parse::<u64>().unwrap());
        assert_eq!(file["config"]["selection"]["trials"], trials.parse::<u64>().unwrap());
        let sum: f64 = file["report"]["motor"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }
}

#[test]
fn train_encoder_honours_bins_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out_dir = dir.path().join("run");
    let train = || {
        let out = noro(
            &["train-encoder", "--bins", "25", "--epochs-per-fold", "3", "--feature", "DFA"],
            &[("--data", &data), ("--out", &out_dir)],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        (
            std::fs::read(out_dir.join("encoder.json")).unwrap(),
            std::fs::read_to_string(out_dir.join("training_log.csv")).unwrap(),
        )
    };
    let (first, log) = train();
    let (second, log2) = train();
    assert_eq!(first, second);
    assert_eq!(log, log2);
    let enc: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!((enc["d"].as_u64(), enc["d_prime"].as_u64(), enc["k"].as_u64()), (Some(16), Some(16), Some(25)));
    assert_eq!(enc["feature_index"], 14);
    assert_eq!(enc["config"]["bins"], 25);
    let lines: Vec<&str> = log.lines().collect();
    assert!(lines[0].starts_with("# config="));
    assert_eq!(lines[1], "epoch,train_loss,valid_loss,fold");
    assert_eq!(lines.len(), 2 + 30);
    assert!(lines[31].starts_with("30,"));
}

#[test]
fn evaluate_needs_an_encoder_with_matching_bins() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = noro(&["evaluate", "--models", "ridge", "--no-noise", "--trials", "1"], &[("--data", &data), ("--out", dir.path())]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--train-first"));

    let out = noro(
        &["train-encoder", "--epochs-per-fold", "2", "--feature", "DFA"],
        &[("--data", &data), ("--out", dir.path())],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let out = noro(
        &["evaluate", "--models", "ridge", "--no-noise", "--trials", "1", "--bins", "7"],
        &[("--data", &data), ("--out", dir.path())],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("5 bins"), "{}", stderr(&out));
}

#[test]
fn no_noise_single_trial_report_and_rerender() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = noro(
        &[
            "evaluate", "--train-first", "--epochs-per-fold", "5", "--feature", "DFA", "--models", "ridge,knn", "--snr", "none",
            "--trials", "1",
        ],
        &[("--data", &data), ("--out", dir.path())],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report = read_json(&dir.path().join("report.json"));
    let cells = report["per_cell"].as_array().unwrap();
    assert_eq!(cells.len(), 2 * 2 * 2);
    for cell in cells {
        assert_eq!(cell["snr"], "none");
        assert!(cell["mae"]["mean"].as_f64().unwrap() <= cell["rmse"]["mean"].as_f64().unwrap());
    }
    for rel in report["relative"].as_array().unwrap() {
        assert!(rel["p"].is_null());
        assert_eq!(rel["significant"], false);
    }
    assert_eq!(report["config_echo"]["trials"], 1);
    assert_eq!(report["cluster_quality"].as_array().unwrap().len(), 2);

    let csv = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let rerendered = dir.path().join("again.csv");
    let out = noro(&["report"], &[("--input", &dir.path().join("report.json")), ("--output", &rerendered)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&rerendered).unwrap(), csv);
    assert_eq!(csv.lines().count(), 2 + 8);

    let pca = std::fs::read_to_string(dir.path().join("pca.csv")).unwrap();
    assert!(pca.lines().nth(1).unwrap() == "space,snr,row,bin,pc1,pc2");
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        format!(
            "dataset_path = {:?}\noutput_dir = {:?}\nbins = 4\nbinning_feature = \"DFA\"\n[encoder]\nepochs_per_fold = 2\n",
            data.display().to_string(),
            dir.path().join("from-file").display().to_string()
        ),
    )
    .unwrap();
    let out = noro(&["train-encoder", "--bins", "6"], &[("--config", &config)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let enc = read_json(&dir.path().join("from-file/encoder.json"));
    assert_eq!(enc["k"], 6);
    assert_eq!(enc["config"]["encoder"]["epochs_per_fold"], 2);

    std::fs::write(&config, "bogus_key = 1\n").unwrap();
    let out = noro(&["ingest"], &[("--config", &config)]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("bogus_key"), "{}", stderr(&out));
}

#[test]
fn ingest_summarizes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let data = small_dataset(dir.path());
    let out = noro(&["ingest"], &[("--data", &data), ("--out", dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let s = read_json(&dir.path().join("dataset_summary.json"));
    assert_eq!(s["rows"], 400);
    assert_eq!(s["subjects"], 8);
    assert_eq!(s["features"].as_array().unwrap().len(), 16);
    assert_eq!(s["folds"], 10);
}
