//! Answering questions by sampling programs and voting on their executed
//! values, with a retrieval-augmented second pass and a conceptual mode.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binding::{fit_binding, from_invocation, parse_with_parameters};
use crate::config::{check_cutoff, InferenceConfig};
use crate::context::Context;
use crate::datakit::QuestionRecord;
use crate::error::{Error, Result};
use crate::oracle::{Answer, Sampling, TaskId, PARAGRAPH_MAX_TOKENS};
use crate::program::{
    execute_program, extract_program_source, parse_program, strip_answer_call, validate_program,
    AskHost, ExecutionOutcome, Limits, ParameterBinding, ProgramAst, Status,
};
use crate::vote::{cluster_values, modal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pass {
    First,
    Rag,
}

/// One sampled program and what it did.
#[derive(Debug, Clone, Serialize)]
pub struct ProgramRun {
    pub source: String,
    #[serde(skip)]
    pub ast: Option<ProgramAst>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding: Option<ParameterBinding>,
    pub outcome: ExecutionOutcome,
}

impl ProgramRun {
    /// Oracle queries issued at run time, then any literal queries not
    /// reached.
    pub fn queries(&self) -> Vec<String> {
        let mut out: Vec<String> = self.outcome.queries().map(str::to_string).collect();
        if let Some(ast) = &self.ast {
            for q in ast.static_queries() {
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }
}

/// Parses a completion into a program, derives its binding and executes it.
/// Binding sources in order: the program's own `answer(...)` call, a
/// `With parameters` line, then `fallback`.
pub fn run_completion(
    completion: &str,
    fallback: Option<&ParameterBinding>,
    host: &dyn AskHost,
    limits: &Limits,
) -> ProgramRun {
    let source = extract_program_source(completion);
    let ast = match parse_program(&source) {
        Ok(ast) => ast,
        Err(e) => {
            return ProgramRun {
                source,
                ast: None,
                binding: None,
                outcome: ExecutionOutcome::error(format!("parse error at {e}")),
            }
        }
    };
    let raw = from_invocation(&ast)
        .or_else(|| parse_with_parameters(completion))
        .or_else(|| fallback.cloned())
        .unwrap_or_default();
    let (binding, outcome) = match fit_binding(&ast, &raw) {
        Ok(b) => {
            let outcome = execute_program(&ast, &b, host, limits);
            (Some(b), outcome)
        }
        Err(e) => (
            None,
            ExecutionOutcome::error(format!("binding failure: {e}")),
        ),
    };
    ProgramRun {
        source,
        ast: Some(ast),
        binding,
        outcome,
    }
}

pub(crate) fn run_all(
    ctx: &Context<'_>,
    completions: &[String],
    fallback: Option<&ParameterBinding>,
) -> Result<Vec<ProgramRun>> {
    let host = ctx.host();
    let runs = completions
        .par_iter()
        .map(|c| run_completion(c, fallback, &host, &ctx.limits))
        .collect();
    ctx.check_host(&host)?;
    Ok(runs)
}

#[derive(Debug, Clone, Serialize)]
pub struct VotedAnswer {
    pub value: Answer,
    pub vote_counts: BTreeMap<String, usize>,
    pub programs: Vec<ProgramRun>,
    pub pass: Pass,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Majority vote over executed values under soft equality. Ties go to the
/// cluster of the earliest program; unknown wins only when no program
/// produced a value.
pub fn vote(runs: &[ProgramRun]) -> (Answer, BTreeMap<String, usize>) {
    let values: Vec<_> = runs
        .iter()
        .map(|r| {
            (r.outcome.status == Status::Value)
                .then_some(r.outcome.value.as_ref())
                .flatten()
        })
        .collect();
    let clusters = cluster_values(&values);
    let mut counts = BTreeMap::new();
    for c in &clusters {
        let label = Answer::from_value(values[c.representative].expect("clustered")).label();
        *counts.entry(label).or_insert(0) += c.size();
    }
    let unknown = runs
        .iter()
        .filter(|r| r.outcome.status == Status::Unknown)
        .count();
    if unknown > 0 {
        counts.insert("unknown".into(), unknown);
    }
    let value = modal(&clusters)
        .map(|c| Answer::from_value(values[c.representative].expect("clustered")))
        .unwrap_or_else(Answer::unknown);
    (value, counts)
}

fn voted(runs: Vec<ProgramRun>, pass: Pass) -> VotedAnswer {
    let (value, vote_counts) = vote(&runs);
    VotedAnswer {
        value,
        vote_counts,
        programs: runs,
        pass,
        note: None,
    }
}

/// Samples `k` programs for the question and votes.
pub fn first_pass(ctx: &Context<'_>, q: &QuestionRecord, k: usize) -> Result<VotedAnswer> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let t = TaskId::Q2p.transcript(&[("q", &q.text)], Sampling::sampled(k as u32))?;
    let completions = ctx.oracle.complete(&t)?;
    Ok(voted(
        run_all(ctx, &completions, q.binding.as_ref())?,
        Pass::First,
    ))
}

/// When the first pass voted unknown, answers its sub-queries in prose and
/// regenerates programs conditioned on that text. Otherwise returns `first`
/// without any oracle traffic.
pub fn rag_second_pass(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    first: &VotedAnswer,
    k: usize,
) -> Result<VotedAnswer> {
    if first.value.is_concrete() {
        return Ok(first.clone());
    }
    let mut queries: Vec<String> = Vec::new();
    for run in &first.programs {
        for query in run.queries() {
            if !queries.contains(&query) {
                queries.push(query);
            }
        }
    }
    if queries.is_empty() {
        tracing::info!(question = %q.id, "no sub-queries collected; keeping first pass");
        let mut same = first.clone();
        same.note = Some("second pass skipped: no oracle queries in first-pass programs".into());
        return Ok(same);
    }
    let paragraphs = queries
        .par_iter()
        .map(|query| {
            let t = TaskId::RagAnswer.transcript(
                &[("q", query)],
                Sampling::deterministic().with_max_tokens(PARAGRAPH_MAX_TOKENS),
            )?;
            Ok(ctx.oracle.complete_one(&t)?.trim().to_string())
        })
        .collect::<Result<Vec<String>>>()?;
    let context = paragraphs
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join("\n");
    if context.is_empty() {
        let mut same = first.clone();
        same.note = Some("second pass skipped: empty retrieval paragraphs".into());
        return Ok(same);
    }
    let t = TaskId::Qc2p.transcript(
        &[("q", &q.text), ("cot", &context)],
        Sampling::sampled(k as u32),
    )?;
    let completions = ctx.oracle.complete(&t)?;
    Ok(voted(
        run_all(ctx, &completions, q.binding.as_ref())?,
        Pass::Rag,
    ))
}

/// Drops programs with any oracle query at least `cutoff` similar to the
/// original question.
pub fn no_repeat_filter(
    ctx: &Context<'_>,
    programs: &[ProgramRun],
    original: &str,
    cutoff: f64,
) -> Result<Vec<ProgramRun>> {
    check_cutoff(cutoff)?;
    let mut kept = Vec::new();
    for run in programs {
        let mut repeats = false;
        for query in run.queries() {
            if ctx.similarity.score(&query, original)? >= cutoff {
                repeats = true;
                break;
            }
        }
        if !repeats {
            kept.push(run.clone());
        }
    }
    Ok(kept)
}

/// Full inference for one question under `cfg`.
pub fn answer_question(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    cfg: &InferenceConfig,
) -> Result<VotedAnswer> {
    cfg.validate()?;
    let mut first = first_pass(ctx, q, cfg.k)?;
    if let Some(cutoff) = cfg.no_repeat {
        let kept = no_repeat_filter(ctx, &first.programs, &q.text, cutoff)?;
        first = voted(kept, Pass::First);
    }
    if cfg.rag {
        return rag_second_pass(ctx, q, &first, cfg.k);
    }
    Ok(first)
}

/// Samples `k` programs for an abstract question and returns the first that
/// parses with every parameter used, without any trailing invocation.
pub fn conceptual_answer(ctx: &Context<'_>, abstract_text: &str, k: usize) -> Result<ProgramAst> {
    let t =
        TaskId::Aq2p.transcript(&[("aq", abstract_text)], Sampling::sampled(k.max(1) as u32))?;
    for completion in ctx.oracle.complete(&t)? {
        let Ok(ast) = parse_program(&extract_program_source(&completion)) else {
            continue;
        };
        if !validate_program(&ast).unused_params.is_empty() {
            continue;
        }
        return parse_program(&strip_answer_call(&ast))
            .map_err(|e| Error::Input(format!("stripped program no longer parses: {e}")));
    }
    Err(Error::Input(format!(
        "none of {k} sampled programs is valid"
    )))
}

/// Answers through the abstract form: abstracts the question, asks for a
/// parameterized program and runs it on the question's own values.
/// Abstraction or program failures yield an unknown answer with a note.
pub fn answer_conceptually(ctx: &Context<'_>, q: &QuestionRecord, k: usize) -> Result<VotedAnswer> {
    let unknown = |note: String| VotedAnswer {
        value: Answer::unknown(),
        vote_counts: BTreeMap::new(),
        programs: Vec::new(),
        pass: Pass::First,
        note: Some(note),
    };
    let aq = match crate::concept::abstract_question(ctx, q)? {
        Ok(aq) => aq,
        Err(e) => return Ok(unknown(format!("abstraction failed: {e}"))),
    };
    let ast = match conceptual_answer(ctx, &aq.text, k) {
        Ok(ast) => ast,
        Err(Error::Input(e)) => return Ok(unknown(e)),
        Err(e) => return Err(e),
    };
    let host = ctx.host();
    let (binding, outcome) = match fit_binding(&ast, &aq.binding) {
        Ok(b) => {
            let outcome = execute_program(&ast, &b, &host, &ctx.limits);
            (Some(b), outcome)
        }
        Err(e) => (
            None,
            ExecutionOutcome::error(format!("binding failure: {e}")),
        ),
    };
    ctx.check_host(&host)?;
    let run = ProgramRun {
        source: crate::program::print_program(&ast),
        ast: Some(ast),
        binding,
        outcome,
    };
    Ok(voted(vec![run], Pass::First))
}

/// Answers every question on `concurrency` workers, in input order.
pub fn answer_batch(
    ctx: &Context<'_>,
    questions: &[QuestionRecord],
    cfg: &InferenceConfig,
    conceptual: bool,
    concurrency: usize,
) -> Result<Vec<Prediction>> {
    cfg.validate()?;
    crate::context::par_map(questions, concurrency, |q| {
        let voted = if conceptual {
            answer_conceptually(ctx, q, cfg.k)?
        } else {
            answer_question(ctx, q, cfg)?
        };
        Ok(Prediction::new(q.id.clone(), &voted))
    })
}

/// One line of the predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub value: String,
    pub pass: Pass,
    pub vote_counts: BTreeMap<String, usize>,
    pub program_count: usize,
}

impl Prediction {
    pub fn new(question_id: impl Into<String>, voted: &VotedAnswer) -> Self {
        Self {
            question_id: question_id.into(),
            value: voted.value.label(),
            pass: voted.pass,
            vote_counts: voted.vote_counts.clone(),
            program_count: voted.programs.len(),
        }
    }
}
