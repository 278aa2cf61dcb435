use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::program::{format_number, numbers_close, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerKind {
    Yes,
    No,
    Number,
    Unknown,
}

/// A final answer extracted from free text or a program result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub kind: AnswerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub number: Option<f64>,
    #[serde(default)]
    pub raw_text: String,
}

/// Which answer space a question lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnswerMode {
    Binary,
    Numeric,
}

impl Answer {
    fn of(kind: AnswerKind, number: Option<f64>, raw: &str) -> Self {
        Self {
            kind,
            number,
            raw_text: raw.to_string(),
        }
    }

    pub fn yes() -> Self {
        Self::of(AnswerKind::Yes, None, "")
    }

    pub fn no() -> Self {
        Self::of(AnswerKind::No, None, "")
    }

    pub fn unknown() -> Self {
        Self::of(AnswerKind::Unknown, None, "")
    }

    pub fn number(n: f64) -> Self {
        Self::of(AnswerKind::Number, Some(n), "")
    }

    pub fn boolean(b: bool) -> Self {
        if b {
            Self::yes()
        } else {
            Self::no()
        }
    }

    pub fn is_concrete(&self) -> bool {
        self.kind != AnswerKind::Unknown
    }

    /// `yes`, `no`, `unknown` or the formatted number.
    pub fn label(&self) -> String {
        match self.kind {
            AnswerKind::Yes => "yes".into(),
            AnswerKind::No => "no".into(),
            AnswerKind::Unknown => "unknown".into(),
            AnswerKind::Number => format_number(self.number.unwrap_or(f64::NAN)),
        }
    }

    /// Parses a label or a dataset gold string.
    pub fn from_label(text: &str) -> Self {
        let t = text.trim().to_ascii_lowercase();
        match t.as_str() {
            "yes" | "true" => return Self::yes().with_raw(text),
            "no" | "false" => return Self::no().with_raw(text),
            _ => {}
        }
        match parse_number(&t) {
            Some(n) => Self::number(n).with_raw(text),
            None => Self::unknown().with_raw(text),
        }
    }

    pub fn from_value(v: &Value) -> Self {
        match v {
            Value::Bool(b) => Self::boolean(*b),
            Value::Number(n) => Self::number(*n),
            Value::Text(s) => Self::from_label(s),
        }
    }

    fn with_raw(mut self, raw: &str) -> Self {
        self.raw_text = raw.to_string();
        self
    }

    /// Grading equality. Unknown never matches anything.
    pub fn matches(&self, other: &Answer) -> bool {
        match (self.kind, other.kind) {
            (AnswerKind::Number, AnswerKind::Number) => match (self.number, other.number) {
                (Some(a), Some(b)) => numbers_close(a, b),
                _ => false,
            },
            (AnswerKind::Unknown, _) | (_, AnswerKind::Unknown) => false,
            (a, b) => a == b,
        }
    }
}

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"-?(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?").expect("valid regex"));
static ANSWER_IS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)answer\s*(?:is|:)\s*[:\-]?\s*\**\s*(yes|no|true|false)\b")
        .expect("valid regex")
});
static WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z]+").expect("valid regex"));

fn parse_number(s: &str) -> Option<f64> {
    let m = NUMBER.find(s)?;
    m.as_str().replace(',', "").parse().ok()
}

fn polarity(word: &str) -> Option<bool> {
    match word.to_ascii_lowercase().as_str() {
        "yes" | "true" | "correct" => Some(true),
        "no" | "false" | "incorrect" => Some(false),
        _ => None,
    }
}

fn binary(text: &str) -> Answer {
    if let Some(c) = ANSWER_IS.captures_iter(text).last() {
        let yes = polarity(&c[1]).unwrap_or(false);
        return Answer::boolean(yes).with_raw(text);
    }
    let last_sentence = text
        .split(['.', '!', '?', '\n'])
        .map(str::trim)
        .rfind(|s| !s.is_empty())
        .unwrap_or("");
    let hits: Vec<bool> = WORD
        .find_iter(last_sentence)
        .filter_map(|w| polarity(w.as_str()))
        .collect();
    if !hits.is_empty() && hits.iter().all(|&h| h == hits[0]) {
        return Answer::boolean(hits[0]).with_raw(text);
    }
    match WORD
        .find_iter(text)
        .filter_map(|w| polarity(w.as_str()))
        .last()
    {
        Some(b) => Answer::boolean(b).with_raw(text),
        None => Answer::unknown().with_raw(text),
    }
}

fn numeric(text: &str) -> Answer {
    if let Some(pos) = text.rfind("####") {
        if let Some(n) = parse_number(&text[pos + 4..]) {
            return Answer::number(n).with_raw(text);
        }
    }
    match NUMBER.find_iter(text).last() {
        Some(m) => match m.as_str().replace(',', "").parse() {
            Ok(n) => Answer::number(n).with_raw(text),
            Err(_) => Answer::unknown().with_raw(text),
        },
        None => Answer::unknown().with_raw(text),
    }
}

/// Pulls the final answer out of a chain-of-thought completion. Never fails;
/// unparseable text yields `unknown`.
pub fn extract_final_answer(text: &str, mode: AnswerMode) -> Answer {
    match mode {
        AnswerMode::Binary => binary(text),
        AnswerMode::Numeric => numeric(text),
    }
}
