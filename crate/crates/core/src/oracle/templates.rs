use serde::{Deserialize, Serialize};

use super::{Message, OracleError, Sampling, Transcript};

/// Prompt template identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskId {
    Cot,
    Abs,
    Q2p,
    Aq2p,
    Qc2p,
    MathQ2kc,
    MathQ2nq,
    Qa2s,
    Sim,
    BinaryTransform,
    RagAnswer,
}

impl TaskId {
    pub const ALL: [TaskId; 11] = [
        TaskId::Cot,
        TaskId::Abs,
        TaskId::Q2p,
        TaskId::Aq2p,
        TaskId::Qc2p,
        TaskId::MathQ2kc,
        TaskId::MathQ2nq,
        TaskId::Qa2s,
        TaskId::Sim,
        TaskId::BinaryTransform,
        TaskId::RagAnswer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::Cot => "cot",
            TaskId::Abs => "abs",
            TaskId::Q2p => "q2p",
            TaskId::Aq2p => "aq2p",
            TaskId::Qc2p => "qc2p",
            TaskId::MathQ2kc => "math_q2kc",
            TaskId::MathQ2nq => "math_q2nq",
            TaskId::Qa2s => "qa2s",
            TaskId::Sim => "sim",
            TaskId::BinaryTransform => "binary_transform",
            TaskId::RagAnswer => "rag_answer",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            TaskId::Cot => "Answer this question by thinking step by step. Question: {q} Output:",
            TaskId::Abs => "Convert this question to the abstract form. Question: {q} Output:",
            TaskId::Q2p => "Solve this question with a Python program with necessary abstractions. Also generate the corresponding values for the parameters. Question: {q} Output:",
            TaskId::Aq2p => "Solve this abstract question with a Python program. Abstract Question: {aq} Output:",
            TaskId::Qc2p => "Solve this question with a Python program based on the provided reference answer. Question: {q} Reference Answer: {cot} Output:",
            TaskId::MathQ2kc => "Extract the given conditions in the math question. Question: {q} Output:",
            TaskId::MathQ2nq => "Decompose the math question to steps, based on currently known conditions. Question: {q} Known Conditions: {c} Output:",
            TaskId::Qa2s => "Convert the given math question and its answer to a statement. Question: {q} Answer: {a} Output:",
            TaskId::Sim => "Generate similar questions that fit this abstract question. Abstract Question: {aq} Output:",
            TaskId::BinaryTransform => "Rewrite this multiple-choice question and its correct answer as a single question whose correct answer is yes. Question: {q} Choices: {choices} Correct Answer: {answer} Output:",
            TaskId::RagAnswer => "Answer this question with a short paragraph. Question: {q} Output:",
        }
    }

    /// Slot names in template order.
    pub fn slots(self) -> Vec<&'static str> {
        let t = self.template();
        let mut out = Vec::new();
        let mut rest = t;
        while let Some(open) = rest.find('{') {
            let after = &rest[open + 1..];
            let close = after.find('}').expect("balanced template");
            out.push(&after[..close]);
            rest = &after[close + 1..];
        }
        out
    }

    /// Renders and wraps as a single user turn.
    pub fn transcript(
        self,
        slots: &[(&str, &str)],
        sampling: Sampling,
    ) -> Result<Transcript, OracleError> {
        Ok(Transcript::new(
            vec![Message::user(render(self, slots)?)],
            sampling,
        ))
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Fills every slot of the task's template. Missing, empty, or unknown
/// slots are errors.
pub fn render(task: TaskId, slots: &[(&str, &str)]) -> Result<String, OracleError> {
    let wanted = task.slots();
    for (name, _) in slots {
        if !wanted.contains(name) {
            return Err(OracleError::Render(format!(
                "{task}: unknown slot `{name}`"
            )));
        }
    }
    for name in &wanted {
        let value = slots.iter().find(|(n, _)| n == name).map(|(_, v)| *v);
        match value {
            None => {
                return Err(OracleError::Render(format!(
                    "{task}: missing slot `{name}`"
                )))
            }
            Some(v) if v.trim().is_empty() => {
                return Err(OracleError::Render(format!(
                    "{task}: slot `{name}` is empty"
                )))
            }
            Some(_) => {}
        }
    }
    let mut out = String::new();
    let mut rest = task.template();
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after.find('}').expect("balanced template");
        let name = &after[..close];
        let value = slots
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .unwrap_or_default();
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}
