//! Simplification for math questions: grow a set of known conditions one
//! single-hop sub-question at a time until sampled programs agree.

mod stats;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::config::SimplifyConfig;
use crate::context::Context;
use crate::datakit::{Origin, QuestionRecord, SupervisionInstance};
use crate::error::{Error, Result};
use crate::inference::{run_completion, ProgramRun};
use crate::oracle::{
    extract_final_answer, render, AnswerKind, AnswerMode, OracleError, Sampling, TaskId,
};
use crate::program::{ExecutionOutcome, Status, Value};
use crate::vote::cluster_values;

pub use stats::{collect_stats, IterationRow, IterationStats, Reading};

const TERMINAL_PHRASE: &str = "no more decomposition";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionOrigin {
    Initial,
    Folded { iteration: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub text: String,
    pub origin: ConditionOrigin,
}

/// Facts established so far, in the order they were learned. Append-only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownConditions {
    statements: Vec<Condition>,
}

impl KnownConditions {
    pub fn initial<I, S>(statements: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            statements: statements
                .into_iter()
                .map(|s| Condition {
                    text: s.into(),
                    origin: ConditionOrigin::Initial,
                })
                .collect(),
        }
    }

    pub fn statements(&self) -> &[Condition] {
        &self.statements
    }

    pub fn texts(&self) -> Vec<&str> {
        self.statements.iter().map(|c| c.text.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn fold(&mut self, statement: impl Into<String>, iteration: usize) {
        self.statements.push(Condition {
            text: statement.into(),
            origin: ConditionOrigin::Folded { iteration },
        });
    }

    /// The statements as one prompt slot value.
    pub fn render(&self) -> String {
        self.texts().join(" ")
    }
}

/// Splits oracle output into statements: one per line, or one per sentence
/// when the output is a single line. Numbering and bullets are dropped.
pub fn split_statements(output: &str) -> Vec<String> {
    let lines: Vec<&str> = output
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let pieces: Vec<String> = if lines.len() == 1 {
        split_sentences(lines[0])
    } else {
        lines.iter().map(|l| l.to_string()).collect()
    };
    pieces
        .into_iter()
        .map(|p| strip_bullet(&p).to_string())
        .filter(|p| !p.is_empty())
        .collect()
}

fn strip_bullet(line: &str) -> &str {
    let t = line.trim_start_matches(['-', '*', '\u{2022}']).trim_start();
    let digits = t.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        if let Some(rest) = t[digits..].strip_prefix(['.', ')', ':']) {
            return rest.trim();
        }
    }
    t.trim()
}

fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let at_break = matches!(c, '.' | '!' | '?')
            && chars.get(i + 1).is_some_and(|(_, n)| n.is_whitespace());
        if at_break {
            let end = pos + c.len_utf8();
            out.push(text[start..end].trim().to_string());
            start = end;
        }
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NextQuestion {
    Question(String),
    Terminal,
}

fn oracle_call<T>(
    r: std::result::Result<T, OracleError>,
) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_unavailable() => Err(Error::Oracle(e)),
        Err(e) => Ok(Err(e.to_string())),
    }
}

/// Initial known conditions. `Ok(Err(..))` when the oracle says nothing usable.
pub fn initial_conditions(
    ctx: &Context<'_>,
    q: &QuestionRecord,
) -> Result<std::result::Result<KnownConditions, String>> {
    let t = TaskId::MathQ2kc.transcript(&[("q", &q.text)], Sampling::deterministic())?;
    Ok(oracle_call(ctx.oracle.complete_one(&t))?.and_then(|out| {
        let statements = split_statements(&out);
        if statements.is_empty() {
            Err("condition extraction returned no statements".to_string())
        } else {
            Ok(KnownConditions::initial(statements))
        }
    }))
}

pub fn parse_next_question(output: &str) -> NextQuestion {
    let text = output.trim();
    if text.is_empty() {
        tracing::warn!("empty next-question output treated as terminal");
        return NextQuestion::Terminal;
    }
    if text.to_lowercase().contains(TERMINAL_PHRASE) {
        return NextQuestion::Terminal;
    }
    NextQuestion::Question(text.lines().next().unwrap_or(text).trim().to_string())
}

pub fn next_question(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    kc: &KnownConditions,
) -> Result<std::result::Result<NextQuestion, String>> {
    if kc.is_empty() {
        return Err(Error::Input(
            "next question needs at least one known condition".into(),
        ));
    }
    let t = TaskId::MathQ2nq.transcript(
        &[("q", &q.text), ("c", &kc.render())],
        Sampling::deterministic(),
    )?;
    Ok(oracle_call(ctx.oracle.complete_one(&t))?.map(|o| parse_next_question(&o)))
}

/// What one fold produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub cot_answer: String,
    pub statement: String,
}

/// Answers the sub-question given the conditions, turns the answer into a
/// statement and appends it to `kc`. `kc` is untouched on failure.
pub fn answer_and_fold(
    ctx: &Context<'_>,
    kc: &mut KnownConditions,
    nq: &str,
    iteration: usize,
) -> Result<std::result::Result<Fold, String>> {
    let prompt = format!("{} {nq}", kc.render());
    let t = TaskId::Cot.transcript(&[("q", &prompt)], Sampling::deterministic())?;
    let cot = match oracle_call(ctx.oracle.complete_one(&t))? {
        Ok(c) => c,
        Err(e) => return Ok(Err(e)),
    };
    let answer = extract_final_answer(&cot, AnswerMode::Numeric);
    if answer.kind != AnswerKind::Number {
        return Ok(Err("sub-question answer has no number".into()));
    }
    let label = answer.label();
    let t = TaskId::Qa2s.transcript(&[("q", nq), ("a", &label)], Sampling::deterministic())?;
    let statement = match oracle_call(ctx.oracle.complete_one(&t))? {
        Ok(s) => s.trim().to_string(),
        Err(e) => return Ok(Err(e)),
    };
    if statement.is_empty() {
        return Ok(Err("statement conversion returned nothing".into()));
    }
    kc.fold(statement.clone(), iteration);
    Ok(Ok(Fold {
        cot_answer: label,
        statement,
    }))
}

/// Sampled programs for one iteration and their agreement.
#[derive(Debug, Clone, Serialize)]
pub struct Proposal {
    pub runs: Vec<ProgramRun>,
    /// Indices of the runs in the consensus cluster, empty without consensus.
    pub consensus_members: Vec<usize>,
    pub consensus: Option<Value>,
    pub largest_cluster: usize,
    pub invalid: usize,
}

impl Proposal {
    pub fn outcomes(&self) -> Vec<ExecutionOutcome> {
        self.runs.iter().map(|r| r.outcome.clone()).collect()
    }
}

fn value_order(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Number(_) => 0,
            Value::Bool(_) => 1,
            Value::Text(_) => 2,
        }
    }
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.total_cmp(y),
        (Value::Bool(x), Value::Bool(y)) => x.cmp(y),
        (Value::Text(x), Value::Text(y)) => x.cmp(y),
        _ => rank(a).cmp(&rank(b)),
    }
}

/// Agreement over executed values. The largest value cluster wins, and
/// equal sizes are broken by value order. The result is independent of
/// sample order.
pub fn consensus_of(runs: &[ProgramRun], quota: usize) -> (Option<usize>, Vec<usize>, usize) {
    let values: Vec<Option<&Value>> = runs
        .iter()
        .map(|r| {
            (r.outcome.status == Status::Value)
                .then_some(r.outcome.value.as_ref())
                .flatten()
        })
        .collect();
    let clusters = cluster_values(&values);
    let best = clusters.iter().max_by(|a, b| {
        a.size().cmp(&b.size()).then_with(|| {
            let va = values[a.representative].expect("clustered");
            let vb = values[b.representative].expect("clustered");
            value_order(vb, va)
        })
    });
    let largest = best.map_or(0, |c| c.size());
    match best {
        Some(c) if c.size() >= quota => (Some(c.representative), c.members.clone(), largest),
        _ => (None, Vec::new(), largest),
    }
}

/// Samples `sample_count` programs conditioned on the known conditions and
/// checks whether `quota` of them execute to the same value.
pub fn propose_and_check(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    kc: &KnownConditions,
    sample_count: usize,
    quota: usize,
) -> Result<std::result::Result<Proposal, String>> {
    if quota == 0 || quota > sample_count {
        return Err(Error::Config(format!(
            "quota {quota} must be in 1..={sample_count}"
        )));
    }
    let t = TaskId::Qc2p.transcript(
        &[("q", &q.text), ("cot", &kc.render())],
        Sampling::sampled(sample_count as u32),
    )?;
    let completions = match oracle_call(ctx.oracle.complete(&t))? {
        Ok(c) => c,
        Err(e) => return Ok(Err(e)),
    };
    Ok(Ok(check_completions(ctx, q, &completions, quota)?))
}

fn check_completions(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    completions: &[String],
    quota: usize,
) -> Result<Proposal> {
    use rayon::prelude::*;
    let host = ctx.host();
    let runs: Vec<ProgramRun> = completions
        .par_iter()
        .map(|c| run_completion(c, q.binding.as_ref(), &host, &ctx.limits))
        .collect();
    ctx.check_host(&host)?;
    let invalid = runs.iter().filter(|r| r.ast.is_none()).count();
    let (rep, members, largest_cluster) = consensus_of(&runs, quota);
    Ok(Proposal {
        consensus: rep.and_then(|i| runs[i].outcome.value.clone()),
        consensus_members: members,
        largest_cluster,
        invalid,
        runs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplifyStatus {
    Consensus,
    TerminalNoConsensus,
    BudgetExhausted,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Absent for the original question at iteration 0.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_question: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub terminal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cot_answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub folded_statement: Option<String>,
    pub outcomes: Vec<ExecutionOutcome>,
    pub valid_programs: usize,
    pub invalid_programs: usize,
    pub largest_cluster: usize,
    /// Every sample executed to the same value.
    pub unanimous: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub consensus: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplificationJournal {
    pub question_id: String,
    pub sample_count: usize,
    pub quota: usize,
    pub initial_conditions: KnownConditions,
    pub final_conditions: KnownConditions,
    pub iterations: Vec<IterationRecord>,
    pub status: SimplifyStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_reason: Option<String>,
}

impl SimplificationJournal {
    /// Iteration where at least `quota` samples first agreed.
    pub fn first_consensus(&self) -> Option<usize> {
        self.iterations
            .iter()
            .find(|r| r.consensus.is_some())
            .map(|r| r.iteration)
    }

    pub fn first_unanimous(&self) -> Option<usize> {
        self.iterations
            .iter()
            .find(|r| r.unanimous)
            .map(|r| r.iteration)
    }

    pub fn consensus_at(&self, iteration: usize) -> Option<&Value> {
        self.iterations
            .get(iteration)
            .and_then(|r| r.consensus.as_ref())
    }

    pub fn has_valid_program(&self) -> bool {
        self.iterations.iter().any(|r| r.valid_programs > 0)
    }
}

#[derive(Debug, Clone)]
pub struct SimplifyResult {
    pub journal: SimplificationJournal,
    pub instances: Vec<SupervisionInstance>,
}

fn record(iteration: usize, p: &Proposal, sample_count: usize) -> IterationRecord {
    IterationRecord {
        iteration,
        next_question: None,
        terminal: false,
        cot_answer: None,
        folded_statement: None,
        outcomes: p.outcomes(),
        valid_programs: p.runs.len() - p.invalid,
        invalid_programs: p.invalid,
        largest_cluster: p.largest_cluster,
        unanimous: sample_count > 0 && p.largest_cluster == sample_count,
        consensus: p.consensus.clone(),
    }
}

fn empty_record(iteration: usize) -> IterationRecord {
    IterationRecord {
        iteration,
        next_question: None,
        terminal: false,
        cot_answer: None,
        folded_statement: None,
        outcomes: Vec::new(),
        valid_programs: 0,
        invalid_programs: 0,
        largest_cluster: 0,
        unanimous: false,
        consensus: None,
    }
}

/// Runs the loop for one question. Never reads the gold answer.
pub fn run_simplification(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    cfg: &SimplifyConfig,
) -> Result<SimplifyResult> {
    cfg.validate()?;
    let mut journal = SimplificationJournal {
        question_id: q.id.clone(),
        sample_count: cfg.sample_count,
        quota: cfg.quota,
        initial_conditions: KnownConditions::default(),
        final_conditions: KnownConditions::default(),
        iterations: Vec::new(),
        status: SimplifyStatus::Skipped,
        abort_reason: None,
    };
    let finish = |mut journal: SimplificationJournal,
                  kc: &KnownConditions,
                  status,
                  reason: Option<String>| {
        journal.final_conditions = kc.clone();
        journal.status = status;
        journal.abort_reason = reason;
        Ok(SimplifyResult {
            journal,
            instances: Vec::new(),
        })
    };

    let mut kc = match initial_conditions(ctx, q)? {
        Ok(kc) => kc,
        Err(e) => {
            return finish(
                journal,
                &KnownConditions::default(),
                SimplifyStatus::Skipped,
                Some(e),
            )
        }
    };
    journal.initial_conditions = kc.clone();

    for iteration in 0..=cfg.max_iters {
        let mut rec = empty_record(iteration);
        if iteration > 0 {
            let nq = match next_question(ctx, q, &kc)? {
                Ok(NextQuestion::Question(nq)) => nq,
                Ok(NextQuestion::Terminal) => {
                    rec.terminal = true;
                    journal.iterations.push(rec);
                    return finish(journal, &kc, SimplifyStatus::TerminalNoConsensus, None);
                }
                Err(e) => return finish(journal, &kc, SimplifyStatus::BudgetExhausted, Some(e)),
            };
            rec.next_question = Some(nq.clone());
            match answer_and_fold(ctx, &mut kc, &nq, iteration)? {
                Ok(fold) => {
                    rec.cot_answer = Some(fold.cot_answer);
                    rec.folded_statement = Some(fold.statement);
                }
                Err(e) => {
                    journal.iterations.push(rec);
                    return finish(journal, &kc, SimplifyStatus::TerminalNoConsensus, Some(e));
                }
            }
        }
        let proposal = match propose_and_check(ctx, q, &kc, cfg.sample_count, cfg.quota)? {
            Ok(p) => p,
            Err(e) => {
                journal.iterations.push(rec);
                return finish(journal, &kc, SimplifyStatus::BudgetExhausted, Some(e));
            }
        };
        let filled = record(iteration, &proposal, cfg.sample_count);
        rec = IterationRecord {
            next_question: rec.next_question,
            cot_answer: rec.cot_answer,
            folded_statement: rec.folded_statement,
            ..filled
        };
        journal.iterations.push(rec);
        if proposal.consensus.is_some() {
            let instances = consensus_instances(q, &kc, &proposal, iteration)?;
            let mut result = finish(journal, &kc, SimplifyStatus::Consensus, None)?;
            result.instances = instances;
            return Ok(result);
        }
    }
    finish(journal, &kc, SimplifyStatus::BudgetExhausted, None)
}

fn consensus_instances(
    q: &QuestionRecord,
    kc: &KnownConditions,
    proposal: &Proposal,
    iteration: usize,
) -> Result<Vec<SupervisionInstance>> {
    let input = render(TaskId::Qc2p, &[("q", &q.text), ("cot", &kc.render())])?;
    Ok(proposal
        .consensus_members
        .iter()
        .map(|&i| SupervisionInstance {
            task: TaskId::Qc2p,
            input: input.clone(),
            target: proposal.runs[i].source.clone(),
            origin: Origin::Simplification,
            origin_question_id: q.id.clone(),
            provenance: format!("simplify:{}:iter{iteration}:sample{i}", q.id),
            synthetic: false,
        })
        .collect())
}

/// Runs every question on a pool of `concurrency` workers, in input order.
pub fn run_batch(
    ctx: &Context<'_>,
    questions: &[QuestionRecord],
    cfg: &SimplifyConfig,
    concurrency: usize,
) -> Result<Vec<SimplifyResult>> {
    crate::context::par_map(questions, concurrency, |q| run_simplification(ctx, q, cfg))
}

#[cfg(test)]
mod tests;
