//! Subcommand bodies. Each reads its inputs, runs one pipeline, writes its
//! outputs and a manifest, and prints a one-line summary.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use analogy_core::concept::{self, ConceptStatus};
use analogy_core::datakit::{
    builtin_seed, emit_training, evaluate, ingest, to_binary, EmitOptions, Evaluator, IngestFormat,
    QuestionRecord, SupervisionInstance,
};
use analogy_core::inference::{answer_batch, Prediction};
use analogy_core::journal::{read_jsonl, write_jsonl};
use analogy_core::simplify::{self, collect_stats, Reading, SimplificationJournal, SimplifyStatus};
use analogy_core::{Answer, Context, Error, RunConfig};
use anyhow::Result;

use crate::setup::{build_oracle, build_similarity, manifest_path, require, RunManifest};
use crate::InputArgs;

fn load_records(cfg: &RunConfig, io: &InputArgs) -> Result<Vec<QuestionRecord>> {
    let input = require(cfg.paths.input.as_ref(), "--input")?;
    let report = ingest(input, io.format, io.dataset, io.split)?;
    if report.malformed > 0 {
        tracing::warn!(
            malformed = report.malformed,
            total = report.total,
            "skipped malformed input lines"
        );
    }
    Ok(report.records)
}

fn journal_path(cfg: &RunConfig, output: &Path) -> PathBuf {
    cfg.paths.journal.clone().unwrap_or_else(|| {
        let mut s = output.as_os_str().to_os_string();
        s.push(".journal.jsonl");
        PathBuf::from(s)
    })
}

pub fn extract_concept(cfg: &RunConfig, io: &InputArgs, manifest: Option<&Path>) -> Result<()> {
    let output = require(cfg.paths.output.as_ref(), "--output")?.clone();
    let journal = journal_path(cfg, &output);
    let records = load_records(cfg, io)?;
    let oracle = build_oracle(&cfg.oracle)?;
    let similarity = build_similarity(&cfg.oracle)?;
    let ctx = Context::new(&oracle, similarity.as_ref()).with_limits(cfg.limits);

    let mut questions = Vec::with_capacity(records.len());
    let mut conversion_failures = 0;
    for r in &records {
        if r.choices.is_empty() {
            questions.push(r.clone());
            continue;
        }
        match to_binary(&oracle, r) {
            Ok(b) => questions.push(b),
            Err(e) if e.is_backend_unavailable() => return Err(e.into()),
            Err(e) => {
                tracing::warn!(record = %r.id, error = %e, "multiple-choice conversion failed; record skipped");
                conversion_failures += 1;
            }
        }
    }

    let results = concept::run_batch(&ctx, &questions, &cfg.selection, cfg.oracle.concurrency)?;
    let journals: Vec<_> = results.iter().map(|r| r.journal.clone()).collect();
    let instances: Vec<SupervisionInstance> =
        results.into_iter().flat_map(|r| r.instances).collect();
    write_jsonl(&journal, &journals)?;
    write_jsonl(&output, &instances)?;

    let skipped = journals
        .iter()
        .filter(|j| j.status == ConceptStatus::Skipped)
        .count();
    let mut m = RunManifest::new("extract-concept", cfg);
    m.backend_ids = vec![oracle.backend_id(), similarity.id()];
    m.count("records", records.len())
        .count("conversion_failures", conversion_failures)
        .count("questions", questions.len())
        .count("skipped", skipped)
        .count("instances", instances.len())
        .count("oracle_requests", oracle.backend_request_count() as usize);
    m.outputs = vec![output.clone(), journal];
    m.write(&manifest_path(manifest, &output))?;
    println!(
        "extract-concept: {} questions, {} skipped, {} instances -> {}",
        questions.len(),
        skipped,
        instances.len(),
        output.display()
    );
    Ok(())
}

pub fn extract_simplify(cfg: &RunConfig, io: &InputArgs, manifest: Option<&Path>) -> Result<()> {
    let output = require(cfg.paths.output.as_ref(), "--output")?.clone();
    let journal = journal_path(cfg, &output);
    let records = load_records(cfg, io)?;
    let (math, other): (Vec<_>, Vec<_>) = records.into_iter().partition(QuestionRecord::is_math);
    if !other.is_empty() {
        tracing::warn!(count = other.len(), "non-math records are not simplified");
    }
    let oracle = build_oracle(&cfg.oracle)?;
    let similarity = build_similarity(&cfg.oracle)?;
    let ctx = Context::new(&oracle, similarity.as_ref()).with_limits(cfg.limits);

    let results = simplify::run_batch(&ctx, &math, &cfg.simplification, cfg.oracle.concurrency)?;
    let journals: Vec<_> = results.iter().map(|r| r.journal.clone()).collect();
    let instances: Vec<SupervisionInstance> =
        results.into_iter().flat_map(|r| r.instances).collect();
    write_jsonl(&journal, &journals)?;
    write_jsonl(&output, &instances)?;

    let status_count = |s: SimplifyStatus| journals.iter().filter(|j| j.status == s).count();
    let mut m = RunManifest::new("extract-simplify", cfg);
    m.backend_ids = vec![oracle.backend_id()];
    m.count("questions", math.len())
        .count("non_math_skipped", other.len())
        .count("consensus", status_count(SimplifyStatus::Consensus))
        .count(
            "terminal_no_consensus",
            status_count(SimplifyStatus::TerminalNoConsensus),
        )
        .count(
            "budget_exhausted",
            status_count(SimplifyStatus::BudgetExhausted),
        )
        .count("skipped", status_count(SimplifyStatus::Skipped))
        .count("instances", instances.len())
        .count("oracle_requests", oracle.backend_request_count() as usize);
    m.outputs = vec![output.clone(), journal];
    m.write(&manifest_path(manifest, &output))?;
    println!(
        "extract-simplify: {} questions, {} reached consensus, {} instances -> {}",
        math.len(),
        status_count(SimplifyStatus::Consensus),
        instances.len(),
        output.display()
    );
    Ok(())
}

/// Backend ids recorded by the manifests of the given extraction outputs.
fn upstream_backend_ids(inputs: &[PathBuf]) -> Vec<String> {
    let mut ids = Vec::new();
    for path in inputs {
        let text = std::fs::read_to_string(manifest_path(None, path)).ok();
        let parsed: Option<serde_json::Value> = text.and_then(|t| serde_json::from_str(&t).ok());
        if let Some(list) = parsed.as_ref().and_then(|v| v["backend_ids"].as_array()) {
            for id in list.iter().filter_map(|v| v.as_str()) {
                if !ids.iter().any(|s| s == id) {
                    ids.push(id.to_string());
                }
            }
        }
    }
    ids
}

pub fn emit_train(
    cfg: &RunConfig,
    inputs: &[PathBuf],
    seed: Option<&Path>,
    no_seed: bool,
    manifest: Option<&Path>,
) -> Result<()> {
    let output = require(cfg.paths.output.as_ref(), "--output")?.clone();
    let seed: Vec<SupervisionInstance> = match (no_seed, seed) {
        (true, _) => Vec::new(),
        (false, Some(path)) => read_jsonl(path)?,
        (false, None) => builtin_seed(),
    };
    let mut instances = Vec::new();
    for path in inputs {
        instances.extend(read_jsonl::<SupervisionInstance>(path)?);
    }
    let options = EmitOptions {
        config_hash: Some(cfg.hash()),
        backend_ids: upstream_backend_ids(inputs),
    };
    let training = emit_training(&seed, &instances, &output, &options)?;

    let mut m = RunManifest::new("emit-train", cfg);
    m.backend_ids = options.backend_ids.clone();
    m.count("seed", seed.len())
        .count("extracted", instances.len())
        .count("written", training.total)
        .count("rejected", training.rejected)
        .count("duplicates", training.duplicates);
    m.outputs = vec![output.clone()];
    m.details = Some(serde_json::to_value(&training)?);
    m.write(&manifest_path(manifest, &output))?;
    println!(
        "emit-train: {} instances ({} rejected, {} duplicates) -> {}",
        training.total,
        training.rejected,
        training.duplicates,
        output.display()
    );
    Ok(())
}

pub fn infer(
    cfg: &RunConfig,
    io: &InputArgs,
    conceptual: bool,
    manifest: Option<&Path>,
) -> Result<()> {
    let output = require(cfg.paths.output.as_ref(), "--output")?.clone();
    let records = load_records(cfg, io)?;
    let oracle = build_oracle(&cfg.oracle)?;
    let similarity = build_similarity(&cfg.oracle)?;
    let ctx = Context::new(&oracle, similarity.as_ref()).with_limits(cfg.limits);

    let predictions = answer_batch(
        &ctx,
        &records,
        &cfg.inference,
        conceptual,
        cfg.oracle.concurrency,
    )?;
    write_jsonl(&output, &predictions)?;

    let unknown = predictions.iter().filter(|p| p.value == "unknown").count();
    let rag = predictions
        .iter()
        .filter(|p| p.pass == analogy_core::inference::Pass::Rag)
        .count();
    let mut m = RunManifest::new("infer", cfg);
    m.backend_ids = vec![oracle.backend_id(), similarity.id()];
    m.count("questions", records.len())
        .count("unknown", unknown)
        .count("rag_answers", rag)
        .count("oracle_requests", oracle.backend_request_count() as usize);
    m.details = Some(serde_json::json!({ "conceptual": conceptual }));
    m.outputs = vec![output.clone()];
    m.write(&manifest_path(manifest, &output))?;
    println!(
        "infer: {} predictions, {} unknown -> {}",
        predictions.len(),
        unknown,
        output.display()
    );
    Ok(())
}

pub fn eval(
    cfg: &RunConfig,
    predictions: &Path,
    records: &Path,
    format: IngestFormat,
    output: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<()> {
    let preds: Vec<Prediction> = read_jsonl(predictions)?;
    let recs = ingest(records, format, None, None)?.records;
    let metrics = evaluate(&preds, &recs, &Evaluator::new());

    println!(
        "{:<20} {:>8} {:>8} {:>8}",
        "group", "correct", "total", "acc"
    );
    let row = |name: &str, a: &analogy_core::datakit::Accuracy| {
        println!("{name:<20} {:>8} {:>8} {:>8.1}", a.correct, a.total, a.pct);
    };
    row("overall", &metrics.overall);
    for (k, a) in &metrics.by_split {
        row(&format!("split:{k}"), a);
    }
    for (k, a) in &metrics.by_dataset {
        row(&format!("dataset:{k}"), a);
    }
    if metrics.missing_gold > 0 || metrics.unknown_ids > 0 {
        println!(
            "excluded: {} without gold, {} unknown ids",
            metrics.missing_gold, metrics.unknown_ids
        );
    }

    let mut outputs = Vec::new();
    if let Some(out) = output {
        std::fs::write(out, serde_json::to_string_pretty(&metrics)? + "\n")
            .map_err(|e| Error::io(out, e))?;
        outputs.push(out.to_path_buf());
    }
    let mut m = RunManifest::new("eval", cfg);
    m.count("predictions", preds.len())
        .count("scored", metrics.overall.total)
        .count("missing_gold", metrics.missing_gold)
        .count("unknown_ids", metrics.unknown_ids);
    m.outputs = outputs;
    m.details = Some(serde_json::to_value(&metrics)?);
    let anchor = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| eval_anchor(predictions));
    m.write(&manifest_path(manifest, &anchor))?;
    Ok(())
}

fn eval_anchor(predictions: &Path) -> PathBuf {
    let mut s = predictions.as_os_str().to_os_string();
    s.push(".eval");
    PathBuf::from(s)
}

pub fn stats(
    cfg: &RunConfig,
    journals: &[PathBuf],
    gold: Option<&Path>,
    reading: Reading,
    json: Option<&Path>,
    manifest: Option<&Path>,
) -> Result<()> {
    let mut all: Vec<SimplificationJournal> = Vec::new();
    for path in journals {
        all.extend(read_jsonl::<SimplificationJournal>(path)?);
    }
    let gold_map: Option<BTreeMap<String, Answer>> = match gold {
        None => None,
        Some(path) => {
            let evaluator = Evaluator::new();
            let records = ingest(path, IngestFormat::Jsonl, None, None)?.records;
            Some(
                records
                    .iter()
                    .filter_map(|r| {
                        r.gold
                            .as_ref()
                            .map(|g| (r.id.clone(), g.reveal(&evaluator).clone()))
                    })
                    .collect(),
            )
        }
    };
    let report = collect_stats(
        &all,
        gold_map.as_ref(),
        reading,
        cfg.simplification.max_iters,
    );
    print!("{}", report.render_table());

    let mut outputs = Vec::new();
    if let Some(out) = json {
        std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")
            .map_err(|e| Error::io(out, e))?;
        outputs.push(out.to_path_buf());
    }
    let mut m = RunManifest::new("stats", cfg);
    m.count("journals", all.len())
        .count("with_valid_programs", report.total);
    m.outputs = outputs;
    m.details = Some(serde_json::to_value(&report)?);
    let anchor = json.map(Path::to_path_buf).unwrap_or_else(|| {
        let mut s = journals[0].as_os_str().to_os_string();
        s.push(".stats");
        PathBuf::from(s)
    });
    m.write(&manifest_path(manifest, &anchor))?;
    Ok(())
}
