use super::QuestionRecord;
use crate::error::{Error, Result};
use crate::oracle::{Answer, AnswerMode, Oracle, Sampling, TaskId};

/// Rewrites a multiple-choice record as a yes/no question whose correct
/// answer is yes. Records that are already binary pass through.
pub fn to_binary(oracle: &Oracle, record: &QuestionRecord) -> Result<QuestionRecord> {
    if record.choices.is_empty() {
        if !record.dataset.is_multiple_choice() && record.answer_mode() == AnswerMode::Binary {
            return Ok(record.clone());
        }
        return Err(Error::Input(format!(
            "record {} has no choices to convert",
            record.id
        )));
    }
    let correct = record
        .correct_choice
        .and_then(|i| record.choices.get(i))
        .ok_or_else(|| {
            Error::Input(format!("record {} lacks a valid correct choice", record.id))
        })?;
    let choices = record
        .choices
        .iter()
        .enumerate()
        .map(|(i, c)| format!("({}) {c}", (b'A' + (i % 26) as u8) as char))
        .collect::<Vec<_>>()
        .join(" ");
    let transcript = TaskId::BinaryTransform.transcript(
        &[
            ("q", &record.text),
            ("choices", &choices),
            ("answer", correct),
        ],
        Sampling::deterministic(),
    )?;
    let rewritten = oracle.complete_one(&transcript)?;
    let text = rewritten.trim();
    if text.is_empty() {
        return Err(Error::Input(format!(
            "empty rewrite for record {}",
            record.id
        )));
    }
    let mut out = record.clone();
    out.text = text.to_string();
    out.choices.clear();
    out.correct_choice = None;
    out.mode = Some(AnswerMode::Binary);
    out.gold = Some(super::Gold::new(Answer::yes()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datakit::{Dataset, Evaluator};
    use crate::oracle::{AnswerKind, Rule, ScriptedBackend};
    use std::sync::Arc;

    fn oracle() -> Oracle {
        Oracle::new(Arc::new(ScriptedBackend::from_rules(vec![Rule::contains(
            ["Correct Answer: copper"],
        )
        .reply(["Is copper a metal?"])])))
    }

    #[test]
    fn rewrites_with_yes_gold() {
        let mut rec = QuestionRecord::new("c1", "Which is a metal?").with_dataset(Dataset::Arc);
        rec.choices = vec!["wood".into(), "copper".into()];
        rec.correct_choice = Some(1);
        let out = to_binary(&oracle(), &rec).unwrap();
        assert_eq!(out.text, "Is copper a metal?");
        assert_eq!(
            out.gold.unwrap().reveal(&Evaluator::new()).kind,
            AnswerKind::Yes
        );
        assert!(out.choices.is_empty());
    }

    #[test]
    fn passthrough_and_precondition() {
        let bin = QuestionRecord::new("s", "Is ice cold?").with_dataset(Dataset::Strategyqa);
        assert_eq!(to_binary(&oracle(), &bin).unwrap().text, "Is ice cold?");
        let mc = QuestionRecord::new("a", "Which?").with_dataset(Dataset::Csqa);
        assert!(to_binary(&oracle(), &mc).is_err());
    }
}
