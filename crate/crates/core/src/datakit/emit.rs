use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::journal::write_jsonl;
use crate::oracle::TaskId;
use crate::program::parse_program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Seed,
    ConceptualizationQ2p,
    ConceptualizationAq2p,
    Simplification,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Seed => "seed",
            Origin::ConceptualizationQ2p => "conceptualization_q2p",
            Origin::ConceptualizationAq2p => "conceptualization_aq2p",
            Origin::Simplification => "simplification",
        }
    }
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One training pair for the multi-function model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupervisionInstance {
    pub task: TaskId,
    pub input: String,
    pub target: String,
    pub origin: Origin,
    pub origin_question_id: String,
    /// Pointer into the journal that produced this instance.
    pub provenance: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub synthetic: bool,
}

/// Tasks whose target is a program in the restricted language.
pub fn is_program_task(task: TaskId) -> bool {
    matches!(task, TaskId::Q2p | TaskId::Aq2p | TaskId::Qc2p)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EmitOptions {
    pub config_hash: Option<String>,
    pub backend_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingManifest {
    pub counts: BTreeMap<String, usize>,
    pub total: usize,
    pub rejected: usize,
    pub duplicates: usize,
    pub synthetic_seed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub backend_ids: Vec<String>,
}

/// Writes the training mix: seed instances in their given order, then
/// extracted instances sorted by origin and question id. Exact duplicate
/// (input, target) pairs are dropped and program targets that do not parse
/// are rejected.
pub fn emit_training(
    seed: &[SupervisionInstance],
    instances: &[SupervisionInstance],
    path: &Path,
    options: &EmitOptions,
) -> Result<TrainingManifest> {
    let mut extracted: Vec<&SupervisionInstance> = instances.iter().collect();
    extracted.sort_by(|a, b| {
        (
            a.origin,
            &a.origin_question_id,
            &a.provenance,
            a.task,
            &a.input,
            &a.target,
        )
            .cmp(&(
                b.origin,
                &b.origin_question_id,
                &b.provenance,
                b.task,
                &b.input,
                &b.target,
            ))
    });

    let mut seen = HashSet::new();
    let mut out: Vec<&SupervisionInstance> = Vec::new();
    let mut rejected = 0;
    let mut duplicates = 0;
    for inst in seed.iter().chain(extracted) {
        if is_program_task(inst.task) {
            if let Err(e) = parse_program(&inst.target) {
                tracing::warn!(question = %inst.origin_question_id, error = %e, "rejecting unparseable program target");
                rejected += 1;
                continue;
            }
        }
        if !seen.insert((inst.input.as_str(), inst.target.as_str())) {
            duplicates += 1;
            continue;
        }
        out.push(inst);
    }
    if duplicates > 0 {
        tracing::info!(duplicates, "dropped duplicate training pairs");
    }

    write_jsonl(path, &out)?;
    let mut counts = BTreeMap::new();
    for inst in &out {
        *counts.entry(inst.origin.as_str().to_string()).or_insert(0) += 1;
    }
    Ok(TrainingManifest {
        counts,
        total: out.len(),
        rejected,
        duplicates,
        synthetic_seed: out.iter().filter(|i| i.synthetic).count(),
        config_hash: options.config_hash.clone(),
        backend_ids: options.backend_ids.clone(),
    })
}
