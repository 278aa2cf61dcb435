use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::SimplificationJournal;
use crate::oracle::Answer;

/// Which agreement counts as collected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// At least `quota` of the samples agree.
    #[default]
    Quota,
    /// Every sample agrees.
    Unanimous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub instances_gained: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy_pct: Option<f64>,
    pub collected_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub reading: Reading,
    /// Questions with at least one parseable program.
    pub total: usize,
    pub rows: Vec<IterationRow>,
}

/// Per-iteration yield. `gold` maps question ids to reference answers and
/// is consulted only for the accuracy column.
pub fn collect_stats(
    journals: &[SimplificationJournal],
    gold: Option<&BTreeMap<String, Answer>>,
    reading: Reading,
    max_iters: usize,
) -> IterationStats {
    let valid: Vec<&SimplificationJournal> =
        journals.iter().filter(|j| j.has_valid_program()).collect();
    let total = valid.len();
    let deepest = valid
        .iter()
        .filter_map(|j| j.iterations.last().map(|r| r.iteration))
        .max()
        .unwrap_or(0)
        .max(max_iters);

    let first = |j: &SimplificationJournal| match reading {
        Reading::Quota => j.first_consensus(),
        Reading::Unanimous => j.first_unanimous(),
    };

    let mut cumulative = 0;
    let rows = (0..=deepest)
        .map(|i| {
            let reached: Vec<&&SimplificationJournal> =
                valid.iter().filter(|j| first(j) == Some(i)).collect();
            cumulative += reached.len();
            let accuracy_pct = gold.and_then(|g| {
                let judged: Vec<bool> = reached
                    .iter()
                    .filter_map(|j| {
                        let value = j.iterations[i].consensus.as_ref()?;
                        g.get(&j.question_id)
                            .map(|a| a.matches(&Answer::from_value(value)))
                    })
                    .collect();
                (!judged.is_empty())
                    .then(|| pct(judged.iter().filter(|b| **b).count(), judged.len()))
            });
            IterationRow {
                iteration: i,
                instances_gained: reached.len(),
                accuracy_pct,
                collected_pct: pct(cumulative, total),
            }
        })
        .collect();
    IterationStats {
        reading,
        total,
        rows,
    }
}

fn pct(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

impl IterationStats {
    /// Aligned-column text report with one decimal for percentages.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>10} {:>10} {:>13}",
            "Iteration", "Gained", "Accuracy", "Collected Pct"
        );
        for r in &self.rows {
            let label = if r.iteration == 0 {
                "original".to_string()
            } else {
                r.iteration.to_string()
            };
            let acc = r
                .accuracy_pct
                .map_or("-".to_string(), |a| format!("{a:.1}"));
            let _ = writeln!(
                out,
                "{:<10} {:>10} {:>10} {:>13.1}",
                label, r.instances_gained, acc, r.collected_pct
            );
        }
        let _ = writeln!(out, "total questions with valid programs: {}", self.total);
        out
    }
}
