//! End-to-end runs of the `analogy` binary against the scripted fixtures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn analogy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analogy"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const LION_Q: &str = "There are some lions in Londolozi at first. Lion cubs are born at the rate of 5 per month and lions die at the rate of 1 per month. If there are 148 lions in Londolozi after 1 year, how many lions were there in Londolozi at first?";

const LION_PROGRAM: &str = "def answer(born: int, died: int, final: int, months: int) -> int:\n    return final - (born - died) * months\n\nanswer(5, 1, 148, 12)\n";

fn lion_fixture(dir: &TempDir) -> (PathBuf, PathBuf) {
    let records = dir.path().join("math.jsonl");
    let record =
        json!({"id": "lions", "dataset": "gsm8k", "split": "seen", "text": LION_Q, "gold": 100});
    fs::write(&records, format!("{record}\n")).unwrap();
    let mut programs = vec![LION_PROGRAM.to_string(); 9];
    programs.push("def answer() -> int:\n    return 52\n".into());
    let script = json!({
        "name": "lions",
        "rules": [
            {"contains": ["Extract the given conditions"], "completions": ["Lion cubs are born at the rate of 5 per month.\nLions die at the rate of 1 per month.\nThere are 148 lions after 1 year."]},
            {"contains": ["Decompose the math question"], "completions": ["How many lions are added per month?"]},
            {"contains": ["step by step"], "completions": ["5 - 1 = 4. #### 4"]},
            {"contains": ["to a statement"], "completions": ["The number of lions increases by 4 every month."]},
            {"contains": ["Reference Answer", "increases by 4"], "completions": programs},
            {"contains": ["Reference Answer"], "completions": ["def answer() -> int:\n    return 7\n", "def answer() -> int:\n    return 8\n"]}
        ]
    });
    let script_path = dir.path().join("lions.json");
    fs::write(&script_path, script.to_string()).unwrap();
    (records, script_path)
}

#[test]
fn concept_extraction_replays_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("inst.jsonl");
    let replayed = dir.path().join("replayed.jsonl");
    let cache = dir.path().join("cache.jsonl");
    let questions = fixture("golden_questions.jsonl");
    let script = fixture("golden_oracle.json");

    let live = analogy(&[
        "extract-concept",
        "-i",
        s(&questions),
        "-o",
        s(&out),
        "--backend",
        "scripted",
        "--script",
        s(&script),
        "--cache",
        s(&cache),
    ]);
    assert_eq!(code(&live), 0, "{}", String::from_utf8_lossy(&live.stderr));
    let manifest = read_json(&dir.path().join("inst.jsonl.manifest.json"));
    assert_eq!(manifest["command"], "extract-concept");
    assert_eq!(manifest["counts"]["questions"], 5);
    assert_eq!(manifest["counts"]["instances"], 44);
    assert!(manifest["config_hash"]
        .as_str()
        .is_some_and(|h| h.len() == 64));
    assert!(dir.path().join("inst.jsonl.journal.jsonl").exists());

    let replay = analogy(&[
        "extract-concept",
        "-i",
        s(&questions),
        "-o",
        s(&replayed),
        "--backend",
        "replay",
        "--cache",
        s(&cache),
    ]);
    assert_eq!(
        code(&replay),
        0,
        "{}",
        String::from_utf8_lossy(&replay.stderr)
    );
    assert_eq!(fs::read(&out).unwrap(), fs::read(&replayed).unwrap());
    let again = read_json(&dir.path().join("replayed.jsonl.manifest.json"));
    assert_ne!(
        again["config_hash"], manifest["config_hash"],
        "paths differ so hashes differ"
    );
}

#[test]
fn replay_miss_exits_with_backend_code() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("empty.jsonl");
    fs::write(&cache, "").unwrap();
    let out = analogy(&[
        "extract-concept",
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&dir.path().join("x.jsonl")),
        "--backend",
        "replay",
        "--cache",
        s(&cache),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_and_input_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&analogy(&["extract-concept", "--bogus"])), 1);
    assert_eq!(code(&analogy(&[])), 1);
    assert_eq!(code(&analogy(&["--help"])), 0);
    assert_eq!(code(&analogy(&["--version"])), 0);

    let missing_cache = analogy(&[
        "extract-concept",
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&dir.path().join("x.jsonl")),
        "--backend",
        "replay",
        "--cache",
        s(&dir.path().join("absent.jsonl")),
    ]);
    assert_eq!(code(&missing_cache), 1);

    let missing_input = analogy(&[
        "extract-concept",
        "-i",
        s(&dir.path().join("absent.jsonl")),
        "-o",
        s(&dir.path().join("x.jsonl")),
        "--backend",
        "scripted",
        "--script",
        s(&fixture("golden_oracle.json")),
    ]);
    assert_eq!(code(&missing_input), 1);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "[oracle]\nbackend = \"scripted\"\nscript = \"{}\"\n\n[selection]\nx = 11\n",
            s(&fixture("golden_oracle.json"))
        ),
    )
    .unwrap();
    let bad = analogy(&[
        "extract-concept",
        "--config",
        s(&config),
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(code(&bad), 1, "x larger than k must be rejected");
    let fixed = analogy(&[
        "extract-concept",
        "--config",
        s(&config),
        "--x",
        "9",
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&dir.path().join("x.jsonl")),
    ]);
    assert_eq!(
        code(&fixed),
        0,
        "{}",
        String::from_utf8_lossy(&fixed.stderr)
    );
}

#[test]
fn emit_train_merges_seed_and_extracted() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.jsonl");
    let run = analogy(&[
        "extract-concept",
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&inst),
        "--backend",
        "scripted",
        "--script",
        s(&fixture("golden_oracle.json")),
    ]);
    assert_eq!(code(&run), 0);
    let train = dir.path().join("train.jsonl");
    let emit = analogy(&["emit-train", "--instances", s(&inst), "-o", s(&train)]);
    assert_eq!(code(&emit), 0, "{}", String::from_utf8_lossy(&emit.stderr));
    let m = read_json(&dir.path().join("train.jsonl.manifest.json"));
    let counts = &m["counts"];
    assert_eq!(counts["extracted"], 44);
    let written = fs::read_to_string(&train).unwrap().lines().count() as u64;
    assert_eq!(counts["written"].as_u64(), Some(written));
    assert_eq!(
        counts["seed"].as_u64().unwrap() + 44,
        written + counts["duplicates"].as_u64().unwrap() + counts["rejected"].as_u64().unwrap()
    );
    assert!(m["backend_ids"]
        .as_array()
        .unwrap()
        .iter()
        .any(|b| b.as_str().unwrap().starts_with("scripted:")));

    let no_seed = analogy(&[
        "emit-train",
        "--instances",
        s(&inst),
        "--no-seed",
        "-o",
        s(&dir.path().join("t2.jsonl")),
    ]);
    assert_eq!(code(&no_seed), 0);
}

#[test]
fn inference_and_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let pred = dir.path().join("pred.jsonl");
    let metrics = dir.path().join("metrics.json");
    let infer = analogy(&[
        "infer",
        "-i",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&pred),
        "--backend",
        "scripted",
        "--script",
        s(&fixture("golden_oracle.json")),
        "--rag",
    ]);
    assert_eq!(
        code(&infer),
        0,
        "{}",
        String::from_utf8_lossy(&infer.stderr)
    );
    assert_eq!(fs::read_to_string(&pred).unwrap().lines().count(), 5);

    let eval = analogy(&[
        "eval",
        "--predictions",
        s(&pred),
        "--records",
        s(&fixture("golden_questions.jsonl")),
        "-o",
        s(&metrics),
    ]);
    assert_eq!(code(&eval), 0, "{}", String::from_utf8_lossy(&eval.stderr));
    let m = read_json(&metrics);
    assert_eq!(m["overall"]["total"], 5);
    assert_eq!(m["overall"]["correct"], 5);
    assert!(String::from_utf8_lossy(&eval.stdout).contains("overall"));
    assert!(dir.path().join("metrics.json.manifest.json").exists());

    let bare = analogy(&[
        "eval",
        "--predictions",
        s(&pred),
        "--records",
        s(&fixture("golden_questions.jsonl")),
    ]);
    assert_eq!(code(&bare), 0);
    assert!(dir.path().join("pred.jsonl.eval.manifest.json").exists());
}

#[test]
fn simplification_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (records, script) = lion_fixture(&dir);
    let out = dir.path().join("simp.jsonl");
    let journal = dir.path().join("simp.journal.jsonl");
    let run = analogy(&[
        "extract-simplify",
        "-i",
        s(&records),
        "-o",
        s(&out),
        "--journal",
        s(&journal),
        "--backend",
        "scripted",
        "--script",
        s(&script),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 9);

    let report = dir.path().join("stats.json");
    let stats = analogy(&[
        "stats",
        "--journals",
        s(&journal),
        "--gold",
        s(&records),
        "--json",
        s(&report),
    ]);
    assert_eq!(
        code(&stats),
        0,
        "{}",
        String::from_utf8_lossy(&stats.stderr)
    );
    let table = String::from_utf8_lossy(&stats.stdout);
    assert!(table.contains("original"), "{table}");
    let r = read_json(&report);
    assert_eq!(r["total"], 1);
    assert_eq!(r["rows"][1]["instances_gained"], 1);
    assert_eq!(r["rows"][1]["collected_pct"], 100.0);
    assert_eq!(r["rows"][1]["accuracy_pct"], 100.0);
}
