//! Question records, ingestion, multiple-choice conversion, training-data
//! emission, seed fixtures and accuracy evaluation.

mod binary;
mod emit;
mod eval;
mod ingest;
mod seed;

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::oracle::{Answer, AnswerMode};
use crate::program::ParameterBinding;

pub use binary::to_binary;
pub use emit::{
    emit_training, is_program_task, EmitOptions, Origin, SupervisionInstance, TrainingManifest,
};
pub use eval::{evaluate, Accuracy, Metrics};
pub use ingest::{ingest, IngestFormat, IngestReport};
pub use seed::{
    builtin_seed, generate_seed, reference_seed, BUILTIN_SEED_JSONL, SEED_BINARY_COUNT,
    SEED_MATH_COUNT,
};

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    Strategyqa,
    Gsm8k,
    Arc,
    Csqa,
    Hotpotqa,
    #[default]
    Other,
}

impl Dataset {
    pub fn as_str(self) -> &'static str {
        match self {
            Dataset::Strategyqa => "strategyqa",
            Dataset::Gsm8k => "gsm8k",
            Dataset::Arc => "arc",
            Dataset::Csqa => "csqa",
            Dataset::Hotpotqa => "hotpotqa",
            Dataset::Other => "other",
        }
    }

    fn is_multiple_choice(self) -> bool {
        matches!(self, Dataset::Arc | Dataset::Csqa)
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Seen,
    Unseen,
    Dev,
    #[default]
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Seen => "seen",
            Split::Unseen => "unseen",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// Capability required to look at gold answers. Only evaluation code
/// should construct one.
#[derive(Debug)]
pub struct Evaluator(());

impl Evaluator {
    pub fn new() -> Self {
        Evaluator(())
    }
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new()
    }
}

/// A gold answer behind an access counter. Clones share the counter, so
/// any read through any copy of a record is observable.
#[derive(Clone)]
pub struct Gold {
    answer: Answer,
    reads: Arc<AtomicUsize>,
}

impl Gold {
    pub fn new(answer: Answer) -> Self {
        Self {
            answer,
            reads: Arc::new(AtomicUsize::new(0)),
        }
    }

    pub fn reveal(&self, _: &Evaluator) -> &Answer {
        self.reads.fetch_add(1, Ordering::SeqCst);
        &self.answer
    }

    /// Number of reads so far, including serializations.
    pub fn read_count(&self) -> usize {
        self.reads.load(Ordering::SeqCst)
    }
}

impl fmt::Debug for Gold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Gold(..)")
    }
}

impl Serialize for Gold {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.reads.fetch_add(1, Ordering::SeqCst);
        match self.answer.kind {
            crate::oracle::AnswerKind::Number => {
                let n = self.answer.number.unwrap_or(f64::NAN);
                if n.fract() == 0.0 && n.abs() < 1e15 {
                    s.serialize_i64(n as i64)
                } else {
                    s.serialize_f64(n)
                }
            }
            _ => s.serialize_str(&self.answer.label()),
        }
    }
}

impl<'de> Deserialize<'de> for Gold {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = serde_json::Value::deserialize(d)?;
        let answer = match &raw {
            serde_json::Value::Bool(b) => Answer::boolean(*b),
            serde_json::Value::Number(n) => Answer::number(n.as_f64().unwrap_or(f64::NAN)),
            serde_json::Value::String(s) => Answer::from_label(s),
            other => {
                return Err(serde::de::Error::custom(format!(
                    "unsupported gold value {other}"
                )))
            }
        };
        Ok(Gold::new(answer))
    }
}

/// One normalized question.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    #[serde(default)]
    pub dataset: Dataset,
    #[serde(default)]
    pub split: Split,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Gold>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub binding: Option<ParameterBinding>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub choices: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct_choice: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<AnswerMode>,
}

impl QuestionRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            dataset: Dataset::Other,
            split: Split::Test,
            text: text.into(),
            gold: None,
            binding: None,
            choices: Vec::new(),
            correct_choice: None,
            mode: None,
        }
    }

    pub fn with_dataset(mut self, dataset: Dataset) -> Self {
        self.dataset = dataset;
        self
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    pub fn with_gold(mut self, gold: Answer) -> Self {
        self.gold = Some(Gold::new(gold));
        self
    }

    pub fn with_mode(mut self, mode: AnswerMode) -> Self {
        self.mode = Some(mode);
        self
    }

    pub fn with_binding(mut self, binding: ParameterBinding) -> Self {
        self.binding = Some(binding);
        self
    }

    /// Answer space, decided from declared metadata only.
    pub fn answer_mode(&self) -> AnswerMode {
        self.mode.unwrap_or(match self.dataset {
            Dataset::Gsm8k => AnswerMode::Numeric,
            _ => AnswerMode::Binary,
        })
    }

    pub fn is_math(&self) -> bool {
        self.answer_mode() == AnswerMode::Numeric
    }

    /// Gold reads observed on this record so far.
    pub fn gold_reads(&self) -> usize {
        self.gold.as_ref().map_or(0, Gold::read_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gold_reads_are_counted_across_clones() {
        let rec = QuestionRecord::new("q1", "Is ice cold?").with_gold(Answer::yes());
        let copy = rec.clone();
        assert_eq!(rec.gold_reads(), 0);
        let _ = format!("{rec:?}");
        assert_eq!(rec.gold_reads(), 0);
        let ev = Evaluator::new();
        assert_eq!(
            copy.gold.as_ref().unwrap().reveal(&ev).kind,
            crate::oracle::AnswerKind::Yes
        );
        assert_eq!(rec.gold_reads(), 1);
        serde_json::to_string(&rec).unwrap();
        assert_eq!(rec.gold_reads(), 2);
    }

    #[test]
    fn record_json_round_trip() {
        let line = r#"{"id":"a","dataset":"gsm8k","split":"seen","text":"2+2?","gold":4}"#;
        let rec: QuestionRecord = serde_json::from_str(line).unwrap();
        assert_eq!(rec.split, Split::Seen);
        assert!(rec.is_math());
        assert_eq!(
            serde_json::to_string(&rec).unwrap(),
            r#"{"id":"a","dataset":"gsm8k","split":"seen","text":"2+2?","gold":4}"#
        );
        let rec: QuestionRecord =
            serde_json::from_str(r#"{"id":"b","text":"t","gold":true}"#).unwrap();
        assert_eq!(rec.answer_mode(), AnswerMode::Binary);
    }
}
