mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;

fn chartloop(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chartloop"))
        .args(args)
        .arg("--out-dir")
        .arg(out_dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn a(rel: &str) -> String {
    asset(rel).to_string_lossy().into_owned()
}

#[test]
fn datagen_counts_and_missing_path() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chartloop(&["datagen", "--corpus", &a("fixtures/grid.jsonl")], tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("describe 2  point 10  group 6"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!((m["n_describe"].as_u64(), m["n_point"].as_u64(), m["n_group"].as_u64()), (Some(2), Some(10), Some(6)));
    assert!(tmp.path().join("run_config.json").exists());

    let o = chartloop(&["datagen", "--corpus", "/no/such/file.jsonl"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/no/such/file.jsonl"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(chartloop(&["frobnicate"], tmp.path()).status.code(), Some(2));
    assert_eq!(chartloop(&["eval", "--buckets", "5,1"], tmp.path()).status.code(), Some(2));
    let o = chartloop(
        &["run", "--backend", "oracle", "--corpus", &a("fixtures/replay_charts.jsonl"), "--chart", "macys", "--question", "q"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2), "oracle backend without --reasoner-url");
}

#[test]
fn scripted_replay_prints_the_conclusion() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chartloop(
        &[
            "run",
            "--backend",
            "scripted",
            "--script",
            &a("scripts/figure1.json"),
            "--corpus",
            &a("fixtures/replay_charts.jsonl"),
            "--chart",
            "macys",
            "--question",
            "What is the difference between Macy's and Bloomingdale's in 2019?",
        ],
        tmp.path(),
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("So the answer is 558."), "{out}");
    assert!(out.contains("The data is 613."));
    let trace: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("trace.json")).unwrap()).unwrap();
    assert_eq!(trace["final"], "558");
}

#[test]
fn symbolic_run_without_describe() {
    let tmp = tempfile::tempdir().unwrap();
    let q = "What is the difference between the number of stores of Macy's in 2018 and the number of stores of Bloomingdale's in 2018?";
    let args = ["run", "--corpus", &a("fixtures/replay_charts.jsonl"), "--chart", "macys", "--question", q, "--gold", "581"];
    let o = chartloop(&args, tmp.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("Let's describe the figure."));
    assert!(stdout(&o).contains("final answer: 581"), "{}", stdout(&o));
    let mut args = args.to_vec();
    args.push("--no-describe");
    let o = chartloop(&args, tmp.path());
    assert!(o.status.success());
    assert!(!stdout(&o).contains("Let's describe the figure."));
    assert!(stdout(&o).contains("final answer: 581"));
}

#[test]
fn unreachable_backend_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chartloop(
        &[
            "run",
            "--backend",
            "http",
            "--reasoner-url",
            "http://127.0.0.1:9/complete",
            "--reader-url",
            "http://127.0.0.1:9/read",
            "--chart",
            "c",
            "--question",
            "q",
        ],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn closed_loop_eval_with_flags_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(chartloop(&["datagen", "--synth", "30", "--questions", "--seed", "5"], &data).status.success());
    let corpus = data.join("charts.jsonl").to_string_lossy().into_owned();
    let run = tmp.path().join("eval");
    let o = chartloop(
        &["eval", "--corpus", &corpus, "--sc", "5", "--temperature", "0.4", "--buckets", "0,10,20,40", "--seed", "5"],
        &run,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["overall_accuracy"], 1.0);
    assert_eq!(report["by_length_bucket"].as_array().unwrap().len(), 4);
    let cfg: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["sc"], 5);
    assert_eq!(cfg["temperature"], 0.4);
    assert_eq!(cfg["self_consistency"]["n_samples"], 5);
    assert!(run.join("records.csv").exists() && run.join("report.txt").exists());

    // Re-running from the saved config reproduces the traces.
    let rerun = tmp.path().join("rerun");
    let cfg_path = run.join("run_config.json").to_string_lossy().into_owned();
    assert!(chartloop(&["eval", "--corpus", &corpus, "--config", &cfg_path], &rerun).status.success());
    assert_eq!(fs::read(run.join("traces.jsonl")).unwrap(), fs::read(rerun.join("traces.jsonl")).unwrap());
    let cfg2: serde_json::Value = serde_json::from_str(&fs::read_to_string(rerun.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg2["sc"], 5);

    let o = chartloop(&["report", "--traces", &run.join("traces.jsonl").to_string_lossy(), "--corpus", &corpus], &tmp.path().join("rep"));
    assert!(o.status.success());
    assert!(stdout(&o).contains("accuracy 1.0000"));
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"seed": 9, "sc": 3, "no_describe": true, "buckets": [0, 5]}"#).unwrap();
    let out = tmp.path().join("o");
    let o = chartloop(
        &["datagen", "--corpus", &a("fixtures/grid.jsonl"), "--config", &cfg.to_string_lossy(), "--seed", "4"],
        &out,
    );
    assert!(o.status.success());
    let rc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run_config.json")).unwrap()).unwrap();
    assert_eq!(rc["seed"], 4);
    assert_eq!(rc["sc"], 3);
    assert_eq!(rc["no_describe"], true);
    assert_eq!(rc["buckets"], serde_json::json!([0, 5]));
    assert_eq!(rc["temperature"], 0.4);
}

#[test]
fn eval_with_no_questions_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chartloop(&["eval", "--corpus", &a("fixtures/grid.jsonl")], tmp.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn export_ft_annotations_and_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ft");
    let o = chartloop(&["export-ft", "--input", &a("annotated"), "--tagged"], &out);
    assert!(o.status.success());
    assert!(stdout(&o).contains("examples 2  skipped 0"));
    let text = fs::read_to_string(out.join("system2_sft.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("[INST] Q: In how many years"));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let o = chartloop(&["export-ft", "--input", &empty.to_string_lossy()], &tmp.path().join("ft2"));
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn export_ft_from_eval_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert!(chartloop(&["datagen", "--synth", "5", "--questions"], &data).status.success());
    let run = tmp.path().join("run");
    let corpus = data.join("charts.jsonl").to_string_lossy().into_owned();
    assert!(chartloop(&["eval", "--corpus", &corpus, "--sample", "10"], &run).status.success());
    let out = tmp.path().join("ft");
    let o = chartloop(
        &["export-ft", "--input", &run.join("traces.jsonl").to_string_lossy(), "--correct-only"],
        &out,
    );
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(out.join("system2_sft.jsonl")).unwrap().lines().count(), 10);
}
