use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn fewshot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fewshot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fixture() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let train = fewshot(
        dir.path(),
        &["synth", "--classes", "3", "--per-class", "6", "--dimension", "6", "--separation", "6",
          "--seed", "1", "--out", "train.jsonl"],
    );
    assert!(train.status.success(), "{}", stderr(&train));
    let test = fewshot(
        dir.path(),
        &["synth", "--classes", "3", "--per-class", "15", "--dimension", "6", "--separation", "6",
          "--seed", "2", "--out", "test.jsonl"],
    );
    assert!(test.status.success(), "{}", stderr(&test));
    std::fs::write(
        dir.path().join("exp.cfg"),
        "# small soe run\ntrain = train.jsonl\ntest = test.jsonl\nmethod = soesnn\nk = 2\nm-runs = 2\nepochs = 30\n",
    )
    .unwrap();
    dir
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn report_with_averages(dir: &Path, name: &str, template: &Value, avg: [f64; 3]) -> String {
    let mut v = template.clone();
    v["averaged"] = serde_json::json!({ "precision": avg[0], "recall": avg[1], "fscore": avg[2] });
    std::fs::write(dir.join(name), serde_json::to_string_pretty(&v).unwrap()).unwrap();
    name.to_owned()
}

#[test]
fn evaluate_writes_a_valid_report() {
    let dir = fixture();
    let o = fewshot(dir.path(), &["evaluate", "--config", "exp.cfg", "--out", "r.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(dir.path().join("r.json"));
    assert_eq!(v["format"], "fewshot-metrics-report/1");
    assert_eq!(v["config"]["method"], "soesnn");
    assert_eq!(v["config"]["k"], 2);
    assert_eq!(v["per_run"].as_array().unwrap().len(), 2);
    assert!(v["timestamp"].as_u64().is_some());
    for key in ["precision", "recall", "fscore"] {
        let x = v["averaged"][key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x));
    }
    let shown = fewshot(dir.path(), &["report", "r.json"]);
    assert!(shown.status.success());
    assert!(String::from_utf8_lossy(&shown.stdout).contains("average"));
}

#[test]
fn flags_override_the_config_file() {
    let dir = fixture();
    let o = fewshot(
        dir.path(),
        &["evaluate", "--config", "exp.cfg", "--method", "ptsnn", "--k", "3", "--out", "r.json"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let v = read_json(dir.path().join("r.json"));
    assert_eq!(v["config"]["method"], "ptsnn");
    assert_eq!(v["config"]["k"], 3);
}

#[test]
fn oversized_k_is_a_data_error_naming_the_class() {
    let dir = fixture();
    let o = fewshot(dir.path(), &["evaluate", "--config", "exp.cfg", "--k", "7", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("\"C0\""), "{msg}");
    assert_eq!(msg.trim().lines().count(), 1);
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn bad_configuration_exits_2_without_output() {
    let dir = fixture();
    for args in [
        &["evaluate", "--config", "exp.cfg", "--lr", "fast", "--out", "r.json"][..],
        &["evaluate", "--config", "exp.cfg", "--lr", "-1", "--out", "r.json"][..],
        &["evaluate", "--config", "missing.cfg", "--out", "r.json"][..],
        &["evaluate", "--train", "train.jsonl", "--out", "r.json"][..],
    ] {
        let o = fewshot(dir.path(), args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(!dir.path().join("r.json").exists());
    }
    std::fs::write(dir.path().join("bad.cfg"), "train = train.jsonl\nwidth = 3\n").unwrap();
    let o = fewshot(dir.path(), &["evaluate", "--config", "bad.cfg", "--out", "r.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));
}

#[test]
fn identical_runs_differ_only_in_timestamp() {
    let dir = fixture();
    for out in ["a.json", "b.json"] {
        let o = fewshot(dir.path(), &["evaluate", "--config", "exp.cfg", "--out", out]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut a = read_json(dir.path().join("a.json"));
    let mut b = read_json(dir.path().join("b.json"));
    a.as_object_mut().unwrap().remove("timestamp");
    b.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn ttest_reproduces_reference_p_value_and_is_antisymmetric() {
    let dir = fixture();
    let o = fewshot(dir.path(), &["evaluate", "--config", "exp.cfg", "--out", "r.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let template = read_json(dir.path().join("r.json"));
    let a = report_with_averages(dir.path(), "snn.json", &template, [0.71, 0.55, 0.60]);
    let b = report_with_averages(dir.path(), "base.json", &template, [0.39, 0.37, 0.27]);

    let fwd = fewshot(dir.path(), &["ttest", &a, &b]);
    assert!(fwd.status.success(), "{}", stderr(&fwd));
    let fwd: Value = serde_json::from_slice(&fwd.stdout).unwrap();
    let p = fwd["p"].as_f64().unwrap();
    assert!((p - 0.0293).abs() < 5e-5, "p = {p}");
    assert_eq!(fwd["d"].as_array().unwrap().len(), 3);

    let rev = fewshot(dir.path(), &["ttest", &b, &a]);
    let rev: Value = serde_json::from_slice(&rev.stdout).unwrap();
    assert_eq!(rev["t"].as_f64().unwrap(), -fwd["t"].as_f64().unwrap());
    assert_eq!(rev["p"].as_f64().unwrap(), p);
}

#[test]
fn ttest_of_a_report_against_itself_is_degenerate() {
    let dir = fixture();
    let o = fewshot(dir.path(), &["evaluate", "--config", "exp.cfg", "--out", "r.json"]);
    assert!(o.status.success());
    let t = fewshot(dir.path(), &["ttest", "r.json", "r.json"]);
    assert_eq!(t.status.code(), Some(5));
    assert!(stderr(&t).contains("zero variance"));
}

#[test]
fn pairs_and_train_soe_produce_files() {
    let dir = fixture();
    let o = fewshot(dir.path(), &["pairs", "--train", "train.jsonl", "--out", "pairs.jsonl"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("pairs.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 18 * 17 / 2);
    assert!(text.lines().all(|l| serde_json::from_str::<Value>(l).is_ok()));

    let o = fewshot(
        dir.path(),
        &["train-soe", "--train", "train.jsonl", "--out", "model.json", "--epochs", "5", "--head", "euclidean"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let model = read_json(dir.path().join("model.json"));
    assert_eq!(model["format"], "fewshot-soe-model/1");
    assert_eq!(model["training"]["loss_history"].as_array().unwrap().len(), 5);
}

#[test]
fn malformed_data_exits_3() {
    let dir = fixture();
    std::fs::write(dir.path().join("broken.jsonl"), "{\"id\": \"x\"\n").unwrap();
    let o = fewshot(
        dir.path(),
        &["evaluate", "--train", "broken.jsonl", "--test", "test.jsonl", "--out", "r.json"],
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("r.json").exists());
}
