//! `ask_llm` backed by the chat oracle: unit resolution, typed value
//! queries and JSON answer extraction.

use parking_lot::Mutex;

use super::interp::{AskHost, HostReply};
use super::value::{format_number, Value, ValueKind};
use crate::oracle::{Message, Oracle, OracleError, Sampling, Transcript};

const UNIT_EXAMPLE_QUESTION: &str = "Does the answer to the following question require a measurement unit? If it is physical metric, use SI units. If it is monetary metric, use 'USD'.\nQuestion: What is the density of copper?\nAnswer with the proper unit, or 'None' if not applicable.";
const UNIT_EXAMPLE_ANSWER: &str = "kg/m^3";
const VALUE_SYSTEM: &str =
    "Answer the question in the expected type. Use your best educated guess or estimation if needed.";
const VALUE_EXAMPLE_QUESTION: &str = "How many people today are related to Genghis Khan? (int)";
const VALUE_EXAMPLE_ANSWER: &str = "{\"answer\": 35000000}";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("no JSON answer found")]
    NoJson,
    #[error("JSON object has no `answer` field")]
    MissingAnswer,
}

fn unit_transcript(question: &str) -> Transcript {
    Transcript::new(
        vec![
            Message::user(UNIT_EXAMPLE_QUESTION),
            Message::assistant(UNIT_EXAMPLE_ANSWER),
            Message::user(format!(
                "Can the following question be answered with a metric in the International System of Units (SI Units)?\nQuestion: {question}\nAnswer with the proper unit, or 'None' if not applicable."
            )),
        ],
        Sampling::deterministic(),
    )
}

fn value_transcript(query: &str, kind: ValueKind) -> Transcript {
    Transcript::new(
        vec![
            Message::system(VALUE_SYSTEM),
            Message::user(VALUE_EXAMPLE_QUESTION),
            Message::assistant(VALUE_EXAMPLE_ANSWER),
            Message::user(format!("{query} ({})", kind.type_name())),
        ],
        Sampling::deterministic(),
    )
}

/// Asks which SI (or USD) unit a numeric answer should be expressed in.
/// `None` when the oracle says no unit applies.
pub fn resolve_unit(oracle: &Oracle, question: &str) -> Result<Option<String>, OracleError> {
    let reply = oracle.complete_one(&unit_transcript(question))?;
    if reply.contains("None") {
        return Ok(None);
    }
    let unit = reply
        .trim()
        .trim_matches(|c: char| c == '\'' || c == '"' || c == '`')
        .trim_end_matches('.')
        .trim();
    Ok((!unit.is_empty()).then(|| unit.to_string()))
}

/// Returns the `answer` field of the first syntactically valid JSON object
/// in `text`.
pub fn extract_json_answer(text: &str) -> Result<serde_json::Value, ExtractError> {
    for (i, _) in text.match_indices('{') {
        let mut stream =
            serde_json::Deserializer::from_str(&text[i..]).into_iter::<serde_json::Value>();
        if let Some(Ok(serde_json::Value::Object(map))) = stream.next() {
            return map
                .get("answer")
                .cloned()
                .ok_or(ExtractError::MissingAnswer);
        }
    }
    Err(ExtractError::NoJson)
}

fn parse_numeric_text(s: &str) -> Option<f64> {
    let cleaned: String = s
        .trim()
        .trim_start_matches('$')
        .chars()
        .filter(|&c| c != ',')
        .collect();
    let head = cleaned.split_whitespace().next()?;
    head.parse::<f64>().ok().filter(|n| n.is_finite())
}

/// Coerces a JSON answer into the requested kind. `Ok(None)` means the
/// oracle declined to answer.
pub fn coerce_answer(answer: &serde_json::Value, kind: ValueKind) -> Result<Option<Value>, String> {
    use serde_json::Value as J;
    if answer.is_null() {
        return Ok(None);
    }
    if let J::String(s) = answer {
        if s.trim().eq_ignore_ascii_case("unknown") {
            return Ok(None);
        }
    }
    let mismatch = || format!("cannot read {answer} as {}", kind.type_name());
    let value = match kind {
        ValueKind::Integer | ValueKind::Decimal => {
            let n = match answer {
                J::Number(n) => n.as_f64().ok_or_else(mismatch)?,
                J::String(s) => parse_numeric_text(s).ok_or_else(mismatch)?,
                _ => return Err(mismatch()),
            };
            if kind == ValueKind::Integer {
                Value::Number(n.trunc())
            } else {
                Value::Number(n)
            }
        }
        ValueKind::Text => match answer {
            J::String(s) => Value::Text(s.clone()),
            J::Number(n) => Value::Text(format_number(n.as_f64().ok_or_else(mismatch)?)),
            J::Bool(b) => Value::Text(if *b { "True" } else { "False" }.into()),
            _ => return Err(mismatch()),
        },
        ValueKind::Boolean => match answer {
            J::Bool(b) => Value::Bool(*b),
            J::String(s) => match s.trim().to_ascii_lowercase().as_str() {
                "yes" | "true" => Value::Bool(true),
                "no" | "false" => Value::Bool(false),
                _ => return Err(mismatch()),
            },
            _ => return Err(mismatch()),
        },
    };
    Ok(Some(value))
}

/// One typed knowledge query, with a unit instruction for numeric kinds
/// when a unit applies.
pub fn ask_value(oracle: &Oracle, query: &str, kind: ValueKind) -> Result<HostReply, OracleError> {
    let unit = match kind {
        ValueKind::Integer | ValueKind::Decimal => resolve_unit(oracle, query)?,
        _ => None,
    };
    let sent_query = match &unit {
        Some(u) => format!("{query} Answer in {u}."),
        None => query.to_string(),
    };
    let reply = oracle.complete_one(&value_transcript(&sent_query, kind))?;
    let value = match extract_json_answer(&reply) {
        Ok(json) => coerce_answer(&json, kind).unwrap_or_else(|e| {
            tracing::debug!(%e, "uncoercible oracle answer treated as unknown");
            None
        }),
        Err(e) => {
            tracing::debug!(%e, reply = %reply, "unparseable oracle answer treated as unknown");
            None
        }
    };
    Ok(HostReply {
        sent_query,
        unit,
        value,
    })
}

/// [`AskHost`] over a shared [`Oracle`]. Remembers the first backend
/// failure so callers can tell an unavailable oracle from a program error.
pub struct LlmHost<'a> {
    oracle: &'a Oracle,
    failure: Mutex<Option<String>>,
}

impl<'a> LlmHost<'a> {
    pub fn new(oracle: &'a Oracle) -> Self {
        Self {
            oracle,
            failure: Mutex::new(None),
        }
    }

    /// First unavailable-backend failure seen, if any.
    pub fn backend_failure(&self) -> Option<String> {
        self.failure.lock().clone()
    }
}

impl AskHost for LlmHost<'_> {
    fn ask(&self, query: &str, kind: ValueKind) -> Result<HostReply, String> {
        ask_value(self.oracle, query, kind).map_err(|e| {
            if e.is_unavailable() {
                self.failure.lock().get_or_insert_with(|| e.to_string());
            }
            e.to_string()
        })
    }
}
