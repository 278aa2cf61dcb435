//! Conceptualization: abstract a question, instantiate similar questions,
//! keep the confidently answered ones, and harvest programs that solve them
//! as supervision for the original.

mod parse;
mod select;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binding::{fit_binding, from_invocation, parse_with_parameters};
use crate::config::SelectionConfig;
use crate::context::Context;
use crate::datakit::{Origin, QuestionRecord, Split, SupervisionInstance};
use crate::error::{Error, Result};
use crate::oracle::{extract_final_answer, Answer, OracleError, Sampling, TaskId};
use crate::program::{
    execute_program, extract_program_source, parse_program, strip_answer_call, validate_program,
    AskHost, ExecutionOutcome, ParameterBinding, ProgramAst, Status, ValidationReport, ValueKind,
};
use crate::vote::{cluster_by, modal};

pub use parse::{parse_abstraction, parse_similars};
pub use select::{apply_selection, survivors, tiers, CandidateVerdict, Criterion, Selection};

/// A question with some values replaced by typed parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractQuestion {
    pub text: String,
    pub parameters: Vec<(String, ValueKind)>,
    pub source_question_id: String,
    /// The source question's own values for the parameters.
    pub binding: ParameterBinding,
}

/// Outcome of sampling K chains of thought for one similar question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub answers: Vec<Answer>,
    pub modal_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub silver: Option<Answer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_cot: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SimilarQuestion {
    pub record: QuestionRecord,
    pub binding: Option<ParameterBinding>,
    pub gate: GateResult,
}

impl SimilarQuestion {
    pub fn silver(&self) -> Option<&Answer> {
        self.gate.silver.as_ref()
    }
}

#[derive(Debug, Clone)]
pub struct SimilarQuestionSet {
    pub abstract_question: AbstractQuestion,
    pub similars: Vec<SimilarQuestion>,
}

impl SimilarQuestionSet {
    /// Number of similars that passed the confidence gate.
    pub fn m(&self) -> usize {
        self.similars
            .iter()
            .filter(|s| s.silver().is_some())
            .count()
    }

    pub fn similar(&self, id: &str) -> Option<&SimilarQuestion> {
        self.similars.iter().find(|s| s.record.id == id)
    }

    pub fn silver_bearing(&self) -> impl Iterator<Item = &SimilarQuestion> {
        self.similars.iter().filter(|s| s.silver().is_some())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QuestionResult {
    pub question_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding: Option<ParameterBinding>,
    pub outcome: ExecutionOutcome,
    pub matches_silver: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateProgram {
    pub source: String,
    #[serde(skip)]
    pub ast: Option<ProgramAst>,
    pub origin_question_id: String,
    pub validation: ValidationReport,
    /// Binding the program itself carried for its origin question.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub own_binding: Option<ParameterBinding>,
    pub per_question_results: Vec<QuestionResult>,
}

/// Keeps non-fatal oracle problems local to one question.
fn soft<T>(r: std::result::Result<T, OracleError>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_unavailable() => Err(Error::Oracle(e)),
        Err(e) => Ok(Err(e.to_string())),
    }
}

pub fn abstract_question(
    ctx: &Context<'_>,
    q: &QuestionRecord,
) -> Result<std::result::Result<AbstractQuestion, String>> {
    let t = TaskId::Abs.transcript(&[("q", &q.text)], Sampling::deterministic())?;
    Ok(soft(ctx.oracle.complete_one(&t))?.and_then(|out| parse_abstraction(&out, &q.id)))
}

/// A generated similar question and the binding parsed alongside it.
pub type DraftSimilar = (QuestionRecord, Option<ParameterBinding>);

/// Up to `n` distinct concrete questions instantiating the abstraction.
/// The records inherit the source question's dataset and answer mode.
pub fn generate_similars(
    ctx: &Context<'_>,
    aq: &AbstractQuestion,
    source: &QuestionRecord,
    n: usize,
) -> Result<std::result::Result<Vec<DraftSimilar>, String>> {
    if n == 0 {
        return Err(Error::Config(
            "similar question count must be at least 1".into(),
        ));
    }
    let t = TaskId::Sim.transcript(&[("aq", &aq.text)], Sampling::deterministic())?;
    let out = match soft(ctx.oracle.complete_one(&t))? {
        Ok(out) => out,
        Err(e) => return Ok(Err(e)),
    };
    Ok(Ok(parse_similars(&out, n)
        .into_iter()
        .enumerate()
        .map(|(i, (text, binding))| {
            let mut rec = QuestionRecord::new(format!("{}#s{:02}", source.id, i), text)
                .with_dataset(source.dataset)
                .with_split(Split::Train)
                .with_mode(source.answer_mode());
            rec.binding = binding.clone();
            (rec, binding)
        })
        .collect()))
}

/// Index of the admitted representative answer: the modal concrete answer
/// when at least `x` samples agree. Unknown answers never form a label.
pub fn gate_decision(answers: &[Answer], x: usize) -> Option<usize> {
    let concrete: Vec<Option<&Answer>> = answers
        .iter()
        .map(|a| a.is_concrete().then_some(a))
        .collect();
    let clusters = cluster_by(&concrete, |a, b| a.matches(b));
    let best = modal(&clusters)?;
    (best.size() >= x).then_some(best.representative)
}

fn modal_count(answers: &[Answer]) -> usize {
    let concrete: Vec<Option<&Answer>> = answers
        .iter()
        .map(|a| a.is_concrete().then_some(a))
        .collect();
    modal(&cluster_by(&concrete, |a, b| a.matches(b))).map_or(0, |c| c.size())
}

/// Samples `k` chains of thought and admits a silver label when `x` agree.
pub fn confidence_gate(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    k: usize,
    x: usize,
) -> Result<GateResult> {
    let t = TaskId::Cot.transcript(&[("q", &q.text)], Sampling::sampled(k as u32))?;
    let cots = match soft(ctx.oracle.complete(&t))? {
        Ok(c) => c,
        Err(e) => {
            tracing::warn!(question = %q.id, error = %e, "CoT sampling failed; gate rejects");
            Vec::new()
        }
    };
    let mode = q.answer_mode();
    let answers: Vec<Answer> = cots
        .iter()
        .map(|c| {
            let mut a = extract_final_answer(c, mode);
            a.raw_text.clear();
            a
        })
        .collect();
    let admitted = gate_decision(&answers, x);
    Ok(GateResult {
        modal_count: modal_count(&answers),
        silver: admitted.map(|i| answers[i].clone()),
        chosen_cot: admitted.map(|i| cots[i].clone()),
        answers,
    })
}

/// One program for a gated similar question, conditioned on its CoT.
pub fn generate_candidate(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    cot: &str,
) -> Result<CandidateProgram> {
    let t = TaskId::Qc2p.transcript(&[("q", &q.text), ("cot", cot)], Sampling::deterministic())?;
    let completion = match soft(ctx.oracle.complete_one(&t))? {
        Ok(c) => c,
        Err(e) => {
            return Ok(CandidateProgram {
                source: String::new(),
                ast: None,
                origin_question_id: q.id.clone(),
                validation: ValidationReport::parse_failure(e),
                own_binding: None,
                per_question_results: Vec::new(),
            })
        }
    };
    Ok(candidate_from_completion(&completion, &q.id))
}

pub fn candidate_from_completion(completion: &str, origin_question_id: &str) -> CandidateProgram {
    let source = extract_program_source(completion);
    match parse_program(&source) {
        Ok(ast) => CandidateProgram {
            validation: validate_program(&ast),
            own_binding: from_invocation(&ast).or_else(|| parse_with_parameters(completion)),
            source,
            ast: Some(ast),
            origin_question_id: origin_question_id.to_string(),
            per_question_results: Vec::new(),
        },
        Err(e) => CandidateProgram {
            source,
            ast: None,
            origin_question_id: origin_question_id.to_string(),
            validation: ValidationReport::parse_failure(e.to_string()),
            own_binding: None,
            per_question_results: Vec::new(),
        },
    }
}

/// Values for `program`'s parameters on question `q`: the program's own
/// binding when `q` is its origin, then `q`'s generated binding, then an
/// auxiliary program-with-values query. `Ok(Err(..))` is a binding failure.
pub fn bind_for_question(
    ctx: &Context<'_>,
    program: &CandidateProgram,
    q: &QuestionRecord,
) -> Result<std::result::Result<ParameterBinding, String>> {
    let Some(ast) = &program.ast else {
        return Ok(Err("candidate did not parse".into()));
    };
    if program.origin_question_id == q.id {
        if let Some(b) = program
            .own_binding
            .as_ref()
            .and_then(|b| fit_binding(ast, b).ok())
        {
            return Ok(Ok(b));
        }
    }
    if let Some(b) = q.binding.as_ref().and_then(|b| fit_binding(ast, b).ok()) {
        return Ok(Ok(b));
    }
    let t = TaskId::Q2p.transcript(&[("q", &q.text)], Sampling::deterministic())?;
    let completion = match soft(ctx.oracle.complete_one(&t))? {
        Ok(c) => c,
        Err(e) => return Ok(Err(format!("auxiliary binding query failed: {e}"))),
    };
    let raw = parse_program(&extract_program_source(&completion))
        .ok()
        .and_then(|aux| from_invocation(&aux))
        .or_else(|| parse_with_parameters(&completion));
    Ok(match raw {
        Some(raw) => fit_binding(ast, &raw),
        None => Err("auxiliary binding query produced no parameter values".into()),
    })
}

/// Executes the candidate on every silver-bearing similar question.
pub fn evaluate_candidate(
    ctx: &Context<'_>,
    host: &dyn AskHost,
    candidate: &mut CandidateProgram,
    set: &SimilarQuestionSet,
) -> Result<()> {
    let mut results = Vec::new();
    for s in set.silver_bearing() {
        let silver = s.silver().expect("filtered");
        let (binding, outcome) = match &candidate.ast {
            None => (None, ExecutionOutcome::error("candidate did not parse")),
            Some(ast) => match bind_for_question(ctx, candidate, &s.record)? {
                Ok(b) => {
                    let out = execute_program(ast, &b, host, &ctx.limits);
                    (Some(b), out)
                }
                Err(e) => (
                    None,
                    ExecutionOutcome::error(format!("binding failure: {e}")),
                ),
            },
        };
        let matches_silver = outcome.status == Status::Value
            && outcome
                .value
                .as_ref()
                .is_some_and(|v| silver.matches(&Answer::from_value(v)));
        results.push(QuestionResult {
            question_id: s.record.id.clone(),
            binding,
            outcome,
            matches_silver,
        });
    }
    candidate.per_question_results = results;
    Ok(())
}

fn keyword_call(binding: &ParameterBinding) -> String {
    format!("answer({})", binding.render_kwargs())
}

/// Builds q2p instances for every low-tier program on each question it
/// solved, and one aq2p instance per high-tier program. q2p targets are
/// re-executed and dropped when they no longer reproduce the silver label.
/// Returns the instances and the number dropped.
pub fn formulate_instances(
    ctx: &Context<'_>,
    host: &dyn AskHost,
    candidates: &[CandidateProgram],
    selection: &Selection,
    set: &SimilarQuestionSet,
) -> Result<(Vec<SupervisionInstance>, usize)> {
    let source_id = &set.abstract_question.source_question_id;
    let mut out = Vec::new();
    let mut dropped = 0;
    for &ci in &selection.low_pass {
        let cand = &candidates[ci];
        let Some(ast) = &cand.ast else { continue };
        let stripped = strip_answer_call(ast);
        for r in cand
            .per_question_results
            .iter()
            .filter(|r| r.matches_silver)
        {
            let (Some(similar), Some(binding)) = (set.similar(&r.question_id), &r.binding) else {
                continue;
            };
            let target = format!("{stripped}\n{}\n", keyword_call(binding));
            let recheck = parse_program(&target).map(|t| {
                let b = from_invocation(&t).unwrap_or_default();
                execute_program(&t, &b, host, &ctx.limits)
            });
            let ok = match (&recheck, similar.silver()) {
                (Ok(o), Some(silver)) => {
                    o.status == Status::Value
                        && o.value
                            .as_ref()
                            .is_some_and(|v| silver.matches(&Answer::from_value(v)))
                }
                _ => false,
            };
            if !ok {
                dropped += 1;
                continue;
            }
            out.push(SupervisionInstance {
                task: TaskId::Q2p,
                input: crate::oracle::render(TaskId::Q2p, &[("q", &similar.record.text)])?,
                target,
                origin: Origin::ConceptualizationQ2p,
                origin_question_id: source_id.clone(),
                provenance: format!("concept:{source_id}:candidate{ci}:{}", r.question_id),
                synthetic: false,
            });
        }
    }
    for &ci in &selection.high_pass {
        let Some(ast) = &candidates[ci].ast else {
            continue;
        };
        out.push(SupervisionInstance {
            task: TaskId::Aq2p,
            input: crate::oracle::render(TaskId::Aq2p, &[("aq", &set.abstract_question.text)])?,
            target: strip_answer_call(ast),
            origin: Origin::ConceptualizationAq2p,
            origin_question_id: source_id.clone(),
            provenance: format!("concept:{source_id}:candidate{ci}"),
            synthetic: false,
        });
    }
    Ok((out, dropped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConceptStatus {
    Completed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarEntry {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub binding: Option<ParameterBinding>,
    pub answers: Vec<String>,
    pub modal_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub silver: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub origin_question_id: String,
    pub parse_ok: bool,
    pub oracle_call_count: usize,
    pub unused_params: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<CandidateVerdict>,
    pub high: bool,
    pub low: bool,
}

/// Every decision taken for one source question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptJournal {
    pub question_id: String,
    pub status: ConceptStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abstract_question: Option<AbstractQuestion>,
    pub similars: Vec<SimilarEntry>,
    pub x: usize,
    pub k: usize,
    pub m: usize,
    pub high_threshold: f64,
    pub low_threshold: usize,
    pub candidates: Vec<CandidateEntry>,
    pub instances: usize,
    pub dropped_instances: usize,
}

impl ConceptJournal {
    fn skipped(q: &QuestionRecord, cfg: &SelectionConfig, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        tracing::info!(question = %q.id, %reason, "question skipped");
        Self {
            question_id: q.id.clone(),
            status: ConceptStatus::Skipped,
            reason: Some(reason),
            abstract_question: None,
            similars: Vec::new(),
            x: cfg.x,
            k: cfg.k,
            m: 0,
            high_threshold: cfg.high_threshold(0),
            low_threshold: cfg.low_threshold,
            candidates: Vec::new(),
            instances: 0,
            dropped_instances: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConceptResult {
    pub journal: ConceptJournal,
    pub instances: Vec<SupervisionInstance>,
}

/// Runs the whole pipeline for one question. Never reads the question's
/// gold answer. Backend outages are errors; everything else is journaled.
pub fn run_conceptualization(
    ctx: &Context<'_>,
    q: &QuestionRecord,
    cfg: &SelectionConfig,
) -> Result<ConceptResult> {
    cfg.validate()?;
    let skip = |reason: String| ConceptResult {
        journal: ConceptJournal::skipped(q, cfg, reason),
        instances: Vec::new(),
    };

    let aq = match abstract_question(ctx, q)? {
        Ok(aq) => aq,
        Err(e) => return Ok(skip(format!("abstraction failed: {e}"))),
    };
    let drafts = match generate_similars(ctx, &aq, q, cfg.n)? {
        Ok(d) => d,
        Err(e) => return Ok(skip(format!("similar question generation failed: {e}"))),
    };
    if drafts.len() < 2 {
        let mut r = skip(format!("only {} usable similar questions", drafts.len()));
        r.journal.abstract_question = Some(aq);
        return Ok(r);
    }

    let gates = drafts
        .par_iter()
        .map(|(rec, _)| confidence_gate(ctx, rec, cfg.k, cfg.x))
        .collect::<Result<Vec<_>>>()?;
    let set = SimilarQuestionSet {
        abstract_question: aq,
        similars: drafts
            .into_iter()
            .zip(gates)
            .map(|((record, binding), gate)| SimilarQuestion {
                record,
                binding,
                gate,
            })
            .collect(),
    };

    let host = ctx.host();
    let mut candidates = set
        .silver_bearing()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|s| generate_candidate(ctx, &s.record, s.gate.chosen_cot.as_deref().expect("gated")))
        .collect::<Result<Vec<_>>>()?;
    candidates
        .par_iter_mut()
        .try_for_each(|c| evaluate_candidate(ctx, &host, c, &set))?;
    ctx.check_host(&host)?;

    let selection = apply_selection(
        &candidates,
        &set,
        &q.text,
        q.answer_mode(),
        cfg,
        ctx.similarity,
    )?;
    let (instances, dropped) = formulate_instances(ctx, &host, &candidates, &selection, &set)?;
    ctx.check_host(&host)?;

    let journal = ConceptJournal {
        question_id: q.id.clone(),
        status: ConceptStatus::Completed,
        reason: (selection.m == 0)
            .then(|| "no similar question passed the confidence gate".to_string()),
        similars: set
            .similars
            .iter()
            .map(|s| SimilarEntry {
                id: s.record.id.clone(),
                text: s.record.text.clone(),
                binding: s.binding.clone(),
                answers: s.gate.answers.iter().map(Answer::label).collect(),
                modal_count: s.gate.modal_count,
                silver: s.silver().map(Answer::label),
            })
            .collect(),
        x: cfg.x,
        k: cfg.k,
        m: selection.m,
        high_threshold: selection.high_threshold,
        low_threshold: cfg.low_threshold,
        candidates: candidates
            .iter()
            .enumerate()
            .map(|(i, c)| CandidateEntry {
                origin_question_id: c.origin_question_id.clone(),
                parse_ok: c.validation.parse_ok,
                oracle_call_count: c.validation.oracle_call_count,
                unused_params: c.validation.unused_params.clone(),
                verdict: selection.verdicts.get(i).cloned(),
                high: selection.high_pass.contains(&i),
                low: selection.low_pass.contains(&i),
            })
            .collect(),
        abstract_question: Some(set.abstract_question),
        instances: instances.len(),
        dropped_instances: dropped,
    };
    Ok(ConceptResult { journal, instances })
}

/// Runs every question on a pool of `concurrency` workers. Results keep
/// input order regardless of scheduling.
pub fn run_batch(
    ctx: &Context<'_>,
    questions: &[QuestionRecord],
    cfg: &SelectionConfig,
    concurrency: usize,
) -> Result<Vec<ConceptResult>> {
    crate::context::par_map(questions, concurrency, |q| {
        run_conceptualization(ctx, q, cfg)
    })
}
