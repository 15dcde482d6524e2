use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use accnote::model::{
    entry_to_line, load_dataset, ClusterTag, DataEntry, Label, Note, PipelineTrace, Provenance, ResultRecord,
    StancePartition,
};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn accnote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accnote"))
        .args(args)
        .env_remove("ACCNOTE_BASE_URL")
        .env_remove("ACCNOTE_API_KEY")
        .env_remove("ACCNOTE_CHAT_MODEL")
        .env_remove("ACCNOTE_EMBED_MODEL")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn trace() -> PipelineTrace {
    PipelineTrace {
        filter_decision: None,
        partition: StancePartition::default(),
        organizer_raw: vec![],
        candidates: vec![],
        judge_raw: vec![],
        judge_fallback: false,
        selected_index: 0,
        model_call_count: 1,
    }
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) {
    let mut text = String::new();
    for l in lines {
        text.push_str(&l);
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn base_entry() -> DataEntry {
    load_dataset(&fixture("example2.jsonl")).unwrap().entries[1].clone()
}

fn labelled_entry(id: &str, gold: Label, gold_note: Option<Note>) -> DataEntry {
    let mut e = base_entry();
    e.post.id = id.into();
    e.gold_label = Some(gold);
    e.gold_note = gold_note;
    e
}

fn note(label: Label, rationale: &str, citations: &[&str]) -> Note {
    Note {
        label,
        rationale: rationale.into(),
        citations: citations.iter().map(|c| c.to_string()).collect(),
        provenance: Provenance::Refuting,
    }
}

#[test]
fn run_is_deterministic_and_reports_partial() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for out in [&a, &b] {
        let o = accnote(&[
            "run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(out),
            "--mock-script", s(&fixture("mock_script.json")), "--no-cache",
        ]);
        assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
        let summary: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
        assert_eq!(summary["success"], 2);
        assert_eq!(summary["error"], 1);
        assert_eq!(summary["chat_calls"], 10);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 3);
}

#[test]
fn clean_run_exits_zero_and_resume_skips() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let text = std::fs::read_to_string(fixture("example2.jsonl")).unwrap();
    write_lines(&data, text.lines().take(2).map(String::from));
    let out = dir.path().join("r.jsonl");
    let cache = dir.path().join("cache.jsonl");
    let args = |resume: bool| {
        let mut v = vec![
            "run".to_string(), "--dataset".into(), s(&data).into(), "--out".into(), s(&out).into(),
            "--mock-script".into(), s(&fixture("mock_script.json")).into(), "--cache".into(), s(&cache).into(),
        ];
        if resume {
            v.push("--resume".into());
        }
        v
    };
    let first = accnote(&args(false).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let second = accnote(&args(true).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(second.status.code(), Some(0));
    let summary: Value = serde_json::from_str(stdout(&second).trim()).unwrap();
    assert_eq!(summary["skipped"], 2);
    assert_eq!(summary["chat_calls"], 0);
}

#[test]
fn missing_dataset_exits_two_naming_path() {
    let o = accnote(&["run", "--dataset", "/no/such/data.jsonl", "--out", "/tmp/x.jsonl", "--mock-script", s(&fixture("mock_script.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/data.jsonl"), "{}", stderr(&o));
}

#[test]
fn no_endpoint_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = accnote(&["run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&dir.path().join("r"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no endpoint configured"));
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "chat_modle = \"x\"\n").unwrap();
    let o = accnote(&[
        "run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&dir.path().join("r")),
        "--config", s(&cfg), "--mock-script", s(&fixture("mock_script.json")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_settings_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "empty_context_always = false\n").unwrap();
    let out = dir.path().join("r.jsonl");
    let o = accnote(&[
        "run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&out), "--no-cache",
        "--config", s(&cfg), "--mock-script", s(&fixture("mock_script.json")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let first = std::fs::read_to_string(&out).unwrap().lines().next().unwrap().to_string();
    let rec = ResultRecord::from_line(&first).unwrap();
    let clusters: Vec<_> = rec.trace().unwrap().candidates.iter().map(|c| c.cluster).collect();
    assert_eq!(clusters, vec![ClusterTag::Refuting]);
}

#[test]
fn environment_overrides_file_and_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    // file endpoint would hang on a non-routable address; env must win
    std::fs::write(
        &cfg,
        "base_url = \"http://10.255.255.1:1/v1\"\nchat_model = \"file-model\"\nmax_retries = 0\ntimeout_secs = 30\n",
    )
    .unwrap();
    let out = dir.path().join("r.jsonl");
    let o = Command::new(env!("CARGO_BIN_EXE_accnote"))
        .args([
            "run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&out), "--no-cache", "--config", s(&cfg),
        ])
        .env("ACCNOTE_BASE_URL", "http://127.0.0.1:9/env")
        .env_remove("ACCNOTE_CHAT_MODEL")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("127.0.0.1:9/env"), "{text}");

    let o = Command::new(env!("CARGO_BIN_EXE_accnote"))
        .args([
            "run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&out), "--no-cache", "--config", s(&cfg),
            "--base-url", "http://127.0.0.1:9/flag",
        ])
        .env("ACCNOTE_BASE_URL", "http://127.0.0.1:9/env")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(std::fs::read_to_string(&out).unwrap().contains("127.0.0.1:9/flag"));
}

fn detection_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    // (prediction, gold): TP TP FP FN TN
    let pairs = [
        (Label::Deceptive, Label::Deceptive),
        (Label::Deceptive, Label::Deceptive),
        (Label::Deceptive, Label::NonDeceptive),
        (Label::NonDeceptive, Label::Deceptive),
        (Label::NonDeceptive, Label::NonDeceptive),
    ];
    let data = dir.join("d.jsonl");
    let results = dir.join("r.jsonl");
    write_lines(
        &data,
        pairs.iter().enumerate().map(|(i, (_, g))| entry_to_line(&labelled_entry(&format!("e{i}"), *g, None))),
    );
    write_lines(
        &results,
        pairs.iter().enumerate().map(|(i, (p, _))| {
            ResultRecord::success(format!("e{i}"), &note(*p, "because", &[]), &trace()).to_line()
        }),
    );
    (data, results)
}

#[test]
fn eval_detect_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (data, results) = detection_fixture(dir.path());
    let o = accnote(&["eval-detect", "--results", s(&results), "--dataset", s(&data)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!((v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64(), v["tn"].as_u64()), (Some(2), Some(1), Some(1), Some(1)));
    assert!((v["f1"].as_f64().unwrap() - 0.6667).abs() < 1e-4);
}

#[test]
fn eval_detect_unknown_id() {
    let dir = tempfile::tempdir().unwrap();
    let (data, results) = detection_fixture(dir.path());
    let mut text = std::fs::read_to_string(&results).unwrap();
    text.push_str(&ResultRecord::success("ghost-7", &note(Label::Deceptive, "x", &[]), &trace()).to_line());
    text.push('\n');
    std::fs::write(&results, text).unwrap();
    let o = accnote(&["eval-detect", "--results", s(&results), "--dataset", s(&data)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("ghost-7"));
}

const NEUTRAL: &str = "The photo was taken in Damascus in 2007 during an official visit.";

#[test]
fn eval_notes_identity_corpus_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let gold = note(Label::Deceptive, NEUTRAL, &["https://www.nbcnews.com/id/wbna17920536"]);
    let mut e = labelled_entry("i1", Label::Deceptive, Some(gold.clone()));
    e.post.text = NEUTRAL.into();
    let data = dir.path().join("d.jsonl");
    let results = dir.path().join("r.jsonl");
    let csv_out = dir.path().join("scores.csv");
    write_lines(&data, [entry_to_line(&e)]);
    write_lines(&results, [ResultRecord::success("i1", &gold, &trace()).to_line()]);
    let o = accnote(&["eval-notes", "--results", s(&results), "--dataset", s(&data), "--out", s(&csv_out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(&csv_out).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(
        headers.iter().collect::<Vec<_>>(),
        vec!["item_id", "method", "rouge_l", "bleu", "chs1", "chs2", "chs3", "chs4", "chs5", "chs"]
    );
    let row = reader.records().next().unwrap().unwrap();
    let chs: f64 = row[9].parse().unwrap();
    assert!((chs - 1.0).abs() < 1e-9, "{row:?}");
    assert!(stdout(&o).contains("chs"));
}

#[test]
fn eval_notes_without_gold_is_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.jsonl");
    let results = dir.path().join("r.jsonl");
    write_lines(&data, [entry_to_line(&labelled_entry("i1", Label::Deceptive, None))]);
    write_lines(&results, [ResultRecord::success("i1", &note(Label::Deceptive, "x", &[]), &trace()).to_line()]);
    let o = accnote(&["eval-notes", "--results", s(&results), "--dataset", s(&data), "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

fn ratings_fixture(dir: &Path, metric: impl Fn(i64) -> f64) -> (PathBuf, PathBuf) {
    let ratings = [3i64, 1, 5, 2, 2, 4, 5];
    let scores = dir.join("scores.csv");
    let rated = dir.join("ratings.csv");
    let mut sw = csv::Writer::from_path(&scores).unwrap();
    sw.write_record(["item_id", "method", "metric"]).unwrap();
    let mut rw = csv::Writer::from_path(&rated).unwrap();
    rw.write_record(["item_id", "method", "ur_1", "ur_2", "ur_3", "ur_4", "ur_5"]).unwrap();
    for (i, r) in ratings.iter().enumerate() {
        sw.write_record([format!("n{i}"), "accnote".into(), metric(*r).to_string()]).unwrap();
        let r = r.to_string();
        rw.write_record([format!("n{i}"), "accnote".into(), r.clone(), r.clone(), r.clone(), r.clone(), r]).unwrap();
    }
    sw.flush().unwrap();
    rw.flush().unwrap();
    (scores, rated)
}

fn correlation_cells(o: &Output) -> Vec<f64> {
    let text = stdout(o);
    let line = text.lines().find(|l| l.starts_with("metric ") && !l.contains("us_1")).unwrap().to_string();
    line.split_whitespace().skip(1).map(|c| c.parse().unwrap()).collect()
}

#[test]
fn correlate_monotone_and_reversed() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, ratings) = ratings_fixture(dir.path(), |r| (r - 1) as f64 / 4.0);
    let o = accnote(&["correlate", "--scores", s(&scores), "--ratings", s(&ratings)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cells = correlation_cells(&o);
    assert_eq!(cells.len(), 6);
    assert!(cells.iter().all(|c| (c - 1.0).abs() < 1e-9), "{cells:?}");

    let (scores, ratings) = ratings_fixture(dir.path(), |r| 1.0 - (r - 1) as f64 / 4.0);
    let out = dir.path().join("table.csv");
    let o = accnote(&["correlate", "--scores", s(&scores), "--ratings", s(&ratings), "--out", s(&out)]);
    assert!(correlation_cells(&o).iter().all(|c| (c + 1.0).abs() < 1e-9));
    let table = std::fs::read_to_string(&out).unwrap();
    assert!(table.starts_with("metric,us_1,us_2,us_3,us_4,us_5,us_mean\n"));
}

#[test]
fn correlate_empty_join_is_error() {
    let dir = tempfile::tempdir().unwrap();
    let (scores, _) = ratings_fixture(dir.path(), |r| r as f64);
    let ratings = dir.path().join("other.csv");
    std::fs::write(&ratings, "item_id,method,ur_1,ur_2,ur_3,ur_4,ur_5\nzz,accnote,1,2,3,4,5\n").unwrap();
    let o = accnote(&["correlate", "--scores", s(&scores), "--ratings", s(&ratings)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn score_note_reports() {
    let gold = r#"{"label":"Deceptive","rationale":"The photo was taken in Damascus in 2007.","citations":["https://www.nbcnews.com/id/wbna17920536"]}"#;
    let o = accnote(&["score-note", "--note", gold, "--gold", gold, "--post-text", "The photo was taken in Damascus in 2007."]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["composite"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let bare = r#"{"label":"Deceptive","rationale":"The photo was taken in Damascus in 2007."}"#;
    let o = accnote(&["score-note", "--note", bare, "--gold", gold]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["chs1"].as_f64(), Some(0.0));
    let sum: f64 = ["chs1", "chs2", "chs3", "chs4", "chs5"].iter().map(|k| v[k].as_f64().unwrap()).sum();
    assert!((sum / 5.0 - v["composite"].as_f64().unwrap()).abs() < 1e-12);

    let o = accnote(&["score-note", "--note", "{not json", "--gold", gold]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn inspect_trace_by_id() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    accnote(&["run", "--dataset", s(&fixture("example2.jsonl")), "--out", s(&out), "--mock-script", s(&fixture("mock_script.json")), "--no-cache"]);
    let o = accnote(&["inspect-trace", "--results", s(&out), "--id", "1880000000000000002"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["trace"]["model_call_count"], 6);
    assert_eq!(v["citations"][0], "https://www.misbar.com/en/factcheck/...");
    let o = accnote(&["inspect-trace", "--results", s(&out)]);
    assert_eq!(stdout(&o).lines().count(), 3);
    let o = accnote(&["inspect-trace", "--results", s(&out), "--id", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
