//! Workloads shared by the benchmarks.

use analogy_core::concept::CandidateVerdict;
use analogy_core::inference::ProgramRun;
use analogy_core::program::{AskHost, HostReply, OracleCall};
use analogy_core::{Answer, ExecutionOutcome, Status, Value, ValueKind};

/// Answers every oracle call with the same value, without any I/O.
pub struct ConstantHost(pub Value);

impl AskHost for ConstantHost {
    fn ask(&self, query: &str, _: ValueKind) -> Result<HostReply, String> {
        Ok(HostReply {
            sent_query: query.to_string(),
            unit: None,
            value: Some(self.0.clone()),
        })
    }
}

/// A program with `calls` oracle calls, each guarded by arithmetic.
pub fn oracle_heavy_program(calls: usize) -> String {
    let mut src = String::from("def answer(animal: str, place: str) -> bool:\n    ok = True\n");
    for i in 0..calls {
        src.push_str(&format!(
            "    c{i} = ask_llm(f\"Is fact {i} true for {{animal}} in {{place}}?\", bool)\n    ok = ok and (c{i} or {i} % 2 == 0)\n"
        ));
    }
    src.push_str("    return ok\n");
    src
}

/// A purely numeric program with `depth` chained assignments.
pub fn arithmetic_program(depth: usize) -> String {
    let mut src = String::from("def answer(a: float, b: float) -> float:\n    x = a\n");
    for i in 0..depth {
        src.push_str(&format!(
            "    x = (x * {} + b) / {} - a % 7\n",
            i % 5 + 2,
            i % 3 + 1
        ));
    }
    src.push_str("    return x\n");
    src
}

/// `k` executed runs spread over a few numeric values, with some failures.
pub fn numeric_runs(k: usize) -> Vec<ProgramRun> {
    (0..k)
        .map(|i| {
            let outcome = if i % 7 == 6 {
                ExecutionOutcome::error("division by zero")
            } else {
                ExecutionOutcome {
                    status: Status::Value,
                    value: Some(Value::Number([100.0, 100.000_000_1, 52.0, 4.0][i % 4])),
                    error_message: None,
                    oracle_trace: Vec::<OracleCall>::new(),
                }
            };
            ProgramRun {
                source: String::new(),
                ast: None,
                binding: None,
                outcome,
            }
        })
        .collect()
}

/// `k` labelled samples, mostly yes.
pub fn gate_samples(k: usize) -> Vec<Answer> {
    (0..k)
        .map(|i| match i % 10 {
            0 => Answer::no(),
            1 => Answer::unknown(),
            _ => Answer::yes(),
        })
        .collect()
}

/// `n` candidate verdicts with varied flags and match counts.
pub fn verdicts(n: usize) -> Vec<CandidateVerdict> {
    (0..n)
        .map(|i| CandidateVerdict {
            similarity_ok: i % 5 != 0,
            complexity_ok: i % 7 != 0,
            soundness_ok: i % 3 != 0,
            accuracy_ok: i % 4 != 0,
            match_count: i % 11,
            error_count: i % 2,
            max_query_similarity: (i % 10) as f64 / 10.0,
        })
        .collect()
}
