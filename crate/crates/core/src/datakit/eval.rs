use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Evaluator, QuestionRecord};
use crate::inference::Prediction;
use crate::oracle::Answer;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
    pub pct: f64,
}

impl Accuracy {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        if correct {
            self.correct += 1;
        }
        self.pct = 100.0 * self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub overall: Accuracy,
    pub by_split: BTreeMap<String, Accuracy>,
    pub by_dataset: BTreeMap<String, Accuracy>,
    /// Predictions whose record has no gold answer.
    pub missing_gold: usize,
    /// Predictions whose id matches no record.
    pub unknown_ids: usize,
}

/// Accuracy overall and per split and dataset. Unknown predictions are
/// always wrong; numbers compare with soft equality.
pub fn evaluate(
    predictions: &[Prediction],
    records: &[QuestionRecord],
    evaluator: &Evaluator,
) -> Metrics {
    let by_id: HashMap<&str, &QuestionRecord> =
        records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut m = Metrics::default();
    for p in predictions {
        let Some(rec) = by_id.get(p.question_id.as_str()) else {
            m.unknown_ids += 1;
            continue;
        };
        let Some(gold) = &rec.gold else {
            m.missing_gold += 1;
            continue;
        };
        let correct = Answer::from_label(&p.value).matches(gold.reveal(evaluator));
        m.overall.add(correct);
        m.by_split
            .entry(rec.split.as_str().into())
            .or_default()
            .add(correct);
        m.by_dataset
            .entry(rec.dataset.as_str().into())
            .or_default()
            .add(correct);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datakit::Split;
    use crate::inference::Pass;

    fn pred(id: &str, value: &str) -> Prediction {
        Prediction {
            question_id: id.into(),
            value: value.into(),
            pass: Pass::First,
            vote_counts: BTreeMap::new(),
            program_count: 0,
        }
    }

    #[test]
    fn three_of_four_with_splits() {
        let records = vec![
            QuestionRecord::new("a", "?")
                .with_gold(Answer::yes())
                .with_split(Split::Seen),
            QuestionRecord::new("b", "?")
                .with_gold(Answer::no())
                .with_split(Split::Seen),
            QuestionRecord::new("c", "?")
                .with_gold(Answer::number(160.0))
                .with_split(Split::Unseen),
            QuestionRecord::new("d", "?")
                .with_gold(Answer::yes())
                .with_split(Split::Unseen),
            QuestionRecord::new("e", "?"),
        ];
        let preds = vec![
            pred("a", "yes"),
            pred("b", "no"),
            pred("c", "160.0000000001"),
            pred("d", "unknown"),
            pred("e", "yes"),
            pred("zz", "yes"),
        ];
        let m = evaluate(&preds, &records, &Evaluator::new());
        assert_eq!(m.overall.pct, 75.0);
        assert_eq!(m.by_split["seen"].pct, 100.0);
        assert_eq!(m.by_split["unseen"].pct, 50.0);
        assert_eq!((m.missing_gold, m.unknown_ids), (1, 1));
    }
}
