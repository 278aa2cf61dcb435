//! The four program selection criteria and the accuracy thresholds.

use serde::{Deserialize, Serialize};

use super::{CandidateProgram, SimilarQuestionSet};
use crate::config::SelectionConfig;
use crate::error::Result;
use crate::oracle::{AnswerMode, Similarity};
use crate::program::Status;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    /// No oracle query paraphrases the question being answered.
    Similarity,
    /// Enough oracle calls to reflect a real decomposition.
    Complexity,
    /// Parses, uses every parameter, and rarely errors.
    Soundness,
    /// Matches the silver label on at least the low threshold of questions.
    Accuracy,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::Similarity,
        Criterion::Complexity,
        Criterion::Soundness,
        Criterion::Accuracy,
    ];
}

/// Per-candidate facts and verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateVerdict {
    pub similarity_ok: bool,
    pub complexity_ok: bool,
    pub soundness_ok: bool,
    pub accuracy_ok: bool,
    pub match_count: usize,
    pub error_count: usize,
    /// Highest query similarity observed, for the journal.
    pub max_query_similarity: f64,
}

impl CandidateVerdict {
    pub fn passes(&self, c: Criterion) -> bool {
        match c {
            Criterion::Similarity => self.similarity_ok,
            Criterion::Complexity => self.complexity_ok,
            Criterion::Soundness => self.soundness_ok,
            Criterion::Accuracy => self.accuracy_ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Number of similar questions carrying a silver label.
    pub m: usize,
    pub high_threshold: f64,
    pub verdicts: Vec<CandidateVerdict>,
    /// Candidate indices passing every criterion and the high threshold.
    pub high_pass: Vec<usize>,
    /// Candidate indices passing every criterion.
    pub low_pass: Vec<usize>,
}

/// Applies the criteria in the given order and returns surviving indices.
/// Verdicts are pure, so every order yields the same set.
pub fn survivors(verdicts: &[CandidateVerdict], order: &[Criterion]) -> Vec<usize> {
    let mut alive: Vec<usize> = (0..verdicts.len()).collect();
    for &c in order {
        alive.retain(|&i| verdicts[i].passes(c));
    }
    alive
}

fn complexity_ok(calls: usize, mode: AnswerMode, cfg: &SelectionConfig) -> bool {
    // Pure arithmetic programs for math questions make no oracle calls and
    // are judged on soundness and accuracy alone.
    if calls == 0 && mode == AnswerMode::Numeric {
        return true;
    }
    calls >= cfg.min_oracle_calls
}

pub(crate) fn judge(
    cand: &CandidateProgram,
    set: &SimilarQuestionSet,
    original: &str,
    mode: AnswerMode,
    cfg: &SelectionConfig,
    similarity: &dyn Similarity,
) -> Result<CandidateVerdict> {
    let mut max_sim: f64 = 0.0;
    let static_queries = cand
        .ast
        .as_ref()
        .map(|a| a.static_queries())
        .unwrap_or_default();
    for q in &static_queries {
        max_sim = max_sim.max(similarity.score(q, original)?);
    }
    for r in &cand.per_question_results {
        let executed_on = set.similar(&r.question_id).map(|s| s.record.text.as_str());
        for q in r.outcome.queries() {
            max_sim = max_sim.max(similarity.score(q, original)?);
            if let Some(text) = executed_on {
                max_sim = max_sim.max(similarity.score(q, text)?);
            }
        }
    }
    let match_count = cand
        .per_question_results
        .iter()
        .filter(|r| r.matches_silver)
        .count();
    let error_count = cand
        .per_question_results
        .iter()
        .filter(|r| r.outcome.status == Status::Error)
        .count();
    Ok(CandidateVerdict {
        similarity_ok: max_sim < cfg.sim_cutoff,
        complexity_ok: complexity_ok(cand.validation.oracle_call_count, mode, cfg),
        soundness_ok: cand.validation.parse_ok
            && cand.validation.unused_params.is_empty()
            && error_count <= cfg.max_error_questions,
        accuracy_ok: match_count >= cfg.low_threshold,
        match_count,
        error_count,
        max_query_similarity: max_sim,
    })
}

/// Splits candidates into the high and low accuracy tiers after the
/// similarity, complexity and soundness filters.
pub fn apply_selection(
    candidates: &[CandidateProgram],
    set: &SimilarQuestionSet,
    original: &str,
    mode: AnswerMode,
    cfg: &SelectionConfig,
    similarity: &dyn Similarity,
) -> Result<Selection> {
    let m = set.m();
    let high_threshold = cfg.high_threshold(m);
    if m == 0 {
        tracing::info!(question = %set.abstract_question.source_question_id, "no silver-labelled similars");
        return Ok(Selection {
            m,
            high_threshold,
            verdicts: Vec::new(),
            high_pass: Vec::new(),
            low_pass: Vec::new(),
        });
    }
    let verdicts = candidates
        .iter()
        .map(|c| judge(c, set, original, mode, cfg, similarity))
        .collect::<Result<Vec<_>>>()?;
    let (low_pass, high_pass) = tiers(&verdicts, high_threshold);
    Ok(Selection {
        m,
        high_threshold,
        verdicts,
        high_pass,
        low_pass,
    })
}

/// `(low_pass, high_pass)` indices for the given verdicts.
pub fn tiers(verdicts: &[CandidateVerdict], high_threshold: f64) -> (Vec<usize>, Vec<usize>) {
    let low = survivors(verdicts, &Criterion::ALL);
    let high = low
        .iter()
        .copied()
        .filter(|&i| verdicts[i].match_count as f64 >= high_threshold)
        .collect();
    (low, high)
}
