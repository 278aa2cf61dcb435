use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, QuestionRecord, Split};
use crate::error::{Error, Result};
use crate::oracle::{extract_final_answer, Answer, AnswerKind, AnswerMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IngestFormat {
    /// Native record schema, one per line.
    Jsonl,
    /// `{"question", "answer"}` lines with a `#### N` final answer.
    Gsm8k,
    /// `{"qid", "question", "answer": bool}` as a JSON array or lines.
    Strategyqa,
    /// ARC / CommonsenseQA lines: `{"id", "question": {"stem", "choices"}, "answerKey"}`.
    Choices,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    pub records: Vec<QuestionRecord>,
    pub malformed: usize,
    pub total: usize,
}

#[derive(Deserialize)]
struct Gsm8kLine {
    #[serde(default)]
    id: Option<String>,
    question: String,
    answer: String,
}

#[derive(Deserialize)]
struct StrategyQaItem {
    #[serde(default)]
    qid: Option<String>,
    question: String,
    answer: bool,
}

#[derive(Deserialize)]
struct ChoiceItem {
    id: String,
    question: ChoiceQuestion,
    #[serde(rename = "answerKey")]
    answer_key: String,
}

#[derive(Deserialize)]
struct ChoiceQuestion {
    stem: String,
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    label: String,
    text: String,
}

fn parse_line(
    line: &str,
    index: usize,
    format: IngestFormat,
    dataset: Option<Dataset>,
) -> std::result::Result<QuestionRecord, String> {
    match format {
        IngestFormat::Jsonl => {
            let mut rec: QuestionRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
            if let Some(d) = dataset {
                rec.dataset = d;
            }
            Ok(rec)
        }
        IngestFormat::Gsm8k => {
            let raw: Gsm8kLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
            if !raw.answer.contains("####") {
                return Err("answer lacks a #### final value".into());
            }
            let gold = extract_final_answer(&raw.answer, AnswerMode::Numeric);
            if gold.kind != AnswerKind::Number {
                return Err("unreadable #### final value".into());
            }
            Ok(QuestionRecord::new(
                raw.id.unwrap_or_else(|| format!("gsm8k-{index}")),
                raw.question,
            )
            .with_dataset(dataset.unwrap_or(Dataset::Gsm8k))
            .with_mode(AnswerMode::Numeric)
            .with_gold(Answer::number(gold.number.unwrap_or_default())))
        }
        IngestFormat::Strategyqa => {
            let raw: StrategyQaItem = serde_json::from_str(line).map_err(|e| e.to_string())?;
            Ok(strategyqa(raw, index, dataset))
        }
        IngestFormat::Choices => {
            let raw: ChoiceItem = serde_json::from_str(line).map_err(|e| e.to_string())?;
            let correct = raw
                .question
                .choices
                .iter()
                .position(|c| c.label == raw.answer_key)
                .ok_or_else(|| format!("answer key {} not among choices", raw.answer_key))?;
            let mut rec = QuestionRecord::new(raw.id, raw.question.stem)
                .with_dataset(dataset.unwrap_or(Dataset::Arc));
            rec.choices = raw.question.choices.into_iter().map(|c| c.text).collect();
            rec.correct_choice = Some(correct);
            Ok(rec)
        }
    }
}

fn strategyqa(raw: StrategyQaItem, index: usize, dataset: Option<Dataset>) -> QuestionRecord {
    QuestionRecord::new(
        raw.qid.unwrap_or_else(|| format!("strategyqa-{index}")),
        raw.question,
    )
    .with_dataset(dataset.unwrap_or(Dataset::Strategyqa))
    .with_mode(AnswerMode::Binary)
    .with_gold(Answer::boolean(raw.answer))
}

/// Loads and normalizes a dataset file. Malformed lines are skipped and
/// counted; more than 10% malformed is fatal.
pub fn ingest(
    path: &Path,
    format: IngestFormat,
    dataset: Option<Dataset>,
    split: Option<Split>,
) -> Result<IngestReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut malformed = 0;
    let mut total = 0;

    if format == IngestFormat::Strategyqa && text.trim_start().starts_with('[') {
        let items: Vec<StrategyQaItem> = serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        total = items.len();
        records.extend(
            items
                .into_iter()
                .enumerate()
                .map(|(i, it)| strategyqa(it, i + 1, dataset)),
        );
    } else {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            total += 1;
            match parse_line(line, i + 1, format, dataset) {
                Ok(rec) => records.push(rec),
                Err(e) => {
                    malformed += 1;
                    tracing::warn!(file = %path.display(), line = i + 1, error = %e, "skipping malformed record");
                }
            }
        }
    }
    if total == 0 {
        tracing::warn!(file = %path.display(), "input contains no records");
    }
    if malformed * 10 > total {
        return Err(Error::Input(format!(
            "{}: {malformed} of {total} lines are malformed",
            path.display()
        )));
    }
    if let Some(s) = split {
        for r in &mut records {
            r.split = s;
        }
    }
    Ok(IngestReport {
        records,
        malformed,
        total,
    })
}
