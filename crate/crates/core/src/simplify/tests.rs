use std::collections::BTreeMap;
use std::sync::Arc;

use super::*;
use crate::oracle::{
    Answer, FnBackend, LexicalSimilarity, Oracle, Rule, ScriptedBackend, Transcript,
};
use crate::program::fixtures::LIONS;

const LION_Q: &str = "There are some lions in Londolozi at first. Lion cubs are born at the rate of 5 per month and lions die at the rate of 1 per month. If there are 148 lions in Londolozi after 1 year, how many lions were there in Londolozi at first?";
const LION_KC: &str = "There are some lions in Londolozi at first.\nLion cubs are born at the rate of 5 per month.\nLions die at the rate of 1 per month.\nThere are 148 lions in Londolozi after 1 year.";
const RATE_Q: &str = "What is the net increase in the number of lions per month?";
const RATE_S: &str = "The number of lions increases by 4 every month.";
const WRONG: &str = "def answer() -> int:\n    return 52\n";
const BROKEN: &str = "def answer(:\n";

fn lion_program() -> String {
    format!("{LIONS}\nanswer(5, 1, 148, 12)\n")
}

fn lions() -> QuestionRecord {
    QuestionRecord::new("lions", LION_Q).with_dataset(crate::datakit::Dataset::Gsm8k)
}

fn mixed(right: usize, wrong: usize, broken: usize) -> Vec<String> {
    let mut v = vec![lion_program(); right];
    v.extend(vec![WRONG.to_string(); wrong]);
    v.extend(vec![BROKEN.to_string(); broken]);
    v
}

fn lion_rules(iter0: Vec<String>, iter1: Vec<String>, next: &str) -> Vec<Rule> {
    vec![
        Rule::contains(["Extract the given conditions"]).reply([LION_KC]),
        Rule::contains(["Decompose the math question"]).reply([next]),
        Rule::contains(["step by step", RATE_Q]).reply(["Born 5, die 1, so 5 - 1 = 4. #### 4"]),
        Rule::contains(["statement", RATE_Q]).reply([RATE_S]),
        Rule::contains(["Reference Answer", RATE_S]).reply(iter1),
        Rule::contains(["Reference Answer"]).reply(iter0),
    ]
}

fn oracle(rules: Vec<Rule>) -> (Arc<ScriptedBackend>, Oracle) {
    let backend = Arc::new(ScriptedBackend::from_rules(rules));
    (backend.clone(), Oracle::new(backend))
}

fn run(o: &Oracle, cfg: &SimplifyConfig) -> SimplifyResult {
    let ctx = Context::new(o, &LexicalSimilarity);
    run_simplification(&ctx, &lions(), cfg).unwrap()
}

#[test]
fn statements_split_by_line_or_sentence() {
    let one = "Benny bought 2 soft drinks for $4 each. Benny bought 5 candy bars. Benny spent 28 dollars in total.";
    assert_eq!(
        split_statements(one),
        [
            "Benny bought 2 soft drinks for $4 each.",
            "Benny bought 5 candy bars.",
            "Benny spent 28 dollars in total."
        ]
    );
    assert_eq!(
        split_statements("1. A costs $4.50.\n- B is 2.\n\n"),
        ["A costs $4.50.", "B is 2."]
    );
    assert!(split_statements("  \n").is_empty());
}

#[test]
fn terminal_phrase_detection() {
    assert_eq!(
        parse_next_question("No more decomposition."),
        NextQuestion::Terminal
    );
    assert_eq!(
        parse_next_question("There is NO MORE DECOMPOSITION needed"),
        NextQuestion::Terminal
    );
    assert_eq!(parse_next_question(""), NextQuestion::Terminal);
    assert_eq!(
        parse_next_question(RATE_Q),
        NextQuestion::Question(RATE_Q.into())
    );
}

#[test]
fn consensus_at_original_question() {
    let (backend, o) = oracle(lion_rules(mixed(10, 0, 0), vec![], RATE_Q));
    let r = run(&o, &SimplifyConfig::default());
    let j = &r.journal;
    assert_eq!(j.status, SimplifyStatus::Consensus);
    assert_eq!(j.iterations.len(), 1);
    assert_eq!(j.iterations[0].consensus, Some(Value::Number(100.0)));
    assert!(j.iterations[0].unanimous);
    assert_eq!(r.instances.len(), 10);
    assert!(r
        .instances
        .iter()
        .all(|i| i.task == TaskId::Qc2p && i.origin == Origin::Simplification));
    assert_eq!(
        backend.hit_counts()[1],
        0,
        "no decomposition after consensus"
    );
}

#[test]
fn fold_then_consensus_at_quota() {
    let (_, o) = oracle(lion_rules(mixed(5, 5, 0), mixed(9, 0, 1), RATE_Q));
    let r = run(&o, &SimplifyConfig::default());
    let j = &r.journal;
    assert_eq!(j.status, SimplifyStatus::Consensus);
    assert_eq!(j.iterations.len(), 2);
    assert_eq!(j.iterations[0].consensus, None);
    let it1 = &j.iterations[1];
    assert_eq!(it1.next_question.as_deref(), Some(RATE_Q));
    assert_eq!(it1.cot_answer.as_deref(), Some("4"));
    assert_eq!(it1.folded_statement.as_deref(), Some(RATE_S));
    assert_eq!(
        (it1.largest_cluster, it1.invalid_programs, it1.unanimous),
        (9, 1, false)
    );
    assert_eq!(j.first_consensus(), Some(1));
    assert_eq!(j.first_unanimous(), None);

    let init = j.initial_conditions.statements();
    let fin = j.final_conditions.statements();
    assert_eq!(&fin[..init.len()], init);
    assert_eq!(
        fin.last().unwrap().origin,
        ConditionOrigin::Folded { iteration: 1 }
    );
    assert!(init.iter().all(|c| c.origin == ConditionOrigin::Initial));

    assert_eq!(r.instances.len(), 9);
    assert!(r.instances[0].input.contains(RATE_S));
    assert!(r.instances[0]
        .provenance
        .starts_with("simplify:lions:iter1:"));
}

#[test]
fn eight_of_ten_is_not_consensus() {
    let (_, o) = oracle(lion_rules(mixed(8, 2, 0), mixed(8, 2, 0), RATE_Q));
    let r = run(
        &o,
        &SimplifyConfig {
            max_iters: 1,
            ..SimplifyConfig::default()
        },
    );
    assert_eq!(r.journal.status, SimplifyStatus::BudgetExhausted);
    assert!(r.instances.is_empty());
}

#[test]
fn terminal_without_consensus() {
    let (backend, o) = oracle(lion_rules(mixed(5, 5, 0), vec![], "No more decomposition."));
    let r = run(&o, &SimplifyConfig::default());
    assert_eq!(r.journal.status, SimplifyStatus::TerminalNoConsensus);
    assert_eq!(r.journal.iterations.len(), 2);
    assert!(r.journal.iterations[1].terminal);
    assert_eq!(backend.hit_counts()[1], 1);
    assert_eq!(r.journal.final_conditions, r.journal.initial_conditions);
}

#[test]
fn unreadable_sub_answer_aborts() {
    let mut rules = lion_rules(mixed(5, 5, 0), vec![], RATE_Q);
    rules[2] = Rule::contains(["step by step", RATE_Q]).reply(["It grows steadily."]);
    let (_, o) = oracle(rules);
    let r = run(&o, &SimplifyConfig::default());
    assert_eq!(r.journal.status, SimplifyStatus::TerminalNoConsensus);
    assert!(r.journal.abort_reason.is_some());
}

#[test]
fn empty_conditions_skip() {
    let (_, o) = oracle(vec![
        Rule::contains(["Extract the given conditions"]).reply(["   "])
    ]);
    let r = run(&o, &SimplifyConfig::default());
    assert_eq!(r.journal.status, SimplifyStatus::Skipped);
    assert!(r.journal.iterations.is_empty());
}

/// Backend that folds a numbered statement each iteration and reaches
/// agreement once `agree_after` statements have been folded.
fn counting_oracle(agree_after: usize) -> Oracle {
    let f = move |t: &Transcript| {
        let last = t.last_content();
        let n = t.sampling.n as usize;
        let folded = last.matches("Fact number").count();
        let reply = if last.starts_with("Extract the given conditions") {
            vec![LION_KC.to_string()]
        } else if last.starts_with("Decompose") {
            vec![format!("What is sub-question {folded}?")]
        } else if last.starts_with("Answer this question by thinking") {
            vec![format!("#### {folded}")]
        } else if last.starts_with("Convert the given math question") {
            vec![format!("Fact number {folded} holds.")]
        } else if folded >= agree_after {
            mixed(n, 0, 0)
        } else {
            mixed(n / 2, n - n / 2, 0)
        };
        Ok(reply.into_iter().cycle().take(n).collect())
    };
    Oracle::new(Arc::new(FnBackend::new("counting", f)))
}

#[test]
fn budget_boundaries() {
    let cfg = SimplifyConfig::default();
    let exact = run(&counting_oracle(5), &cfg).journal;
    assert_eq!(exact.status, SimplifyStatus::Consensus);
    assert_eq!(exact.iterations.len(), 6);
    let over = run(&counting_oracle(6), &cfg).journal;
    assert_eq!(over.status, SimplifyStatus::BudgetExhausted);
    assert_eq!(over.iterations.len(), 6);
    let indices: Vec<usize> = over.iterations.iter().map(|r| r.iteration).collect();
    assert_eq!(indices, [0, 1, 2, 3, 4, 5]);
    let zero = run(
        &counting_oracle(6),
        &SimplifyConfig {
            max_iters: 0,
            ..cfg
        },
    )
    .journal;
    assert_eq!(zero.iterations.len(), 1);
}

#[test]
fn gold_untouched_by_extraction() {
    let (_, o) = oracle(lion_rules(mixed(5, 5, 0), mixed(10, 0, 0), RATE_Q));
    let ctx = Context::new(&o, &LexicalSimilarity);
    let q = lions().with_gold(Answer::number(100.0));
    run_simplification(&ctx, &q, &SimplifyConfig::default()).unwrap();
    assert_eq!(q.gold_reads(), 0);
}

#[test]
fn outage_propagates() {
    let o = Oracle::new(Arc::new(crate::oracle::ReplayBackend));
    let ctx = Context::new(&o, &LexicalSimilarity);
    assert!(
        run_simplification(&ctx, &lions(), &SimplifyConfig::default())
            .unwrap_err()
            .is_backend_unavailable()
    );
}

fn run_with(value: Option<f64>) -> ProgramRun {
    ProgramRun {
        source: String::new(),
        ast: None,
        binding: None,
        outcome: match value {
            Some(v) => ExecutionOutcome {
                status: Status::Value,
                value: Some(Value::Number(v)),
                error_message: None,
                oracle_trace: vec![],
            },
            None => ExecutionOutcome::error("boom"),
        },
    }
}

#[test]
fn quota_enumeration() {
    let runs = |v: &[Option<f64>]| v.iter().map(|x| run_with(*x)).collect::<Vec<_>>();
    let nine: Vec<_> = std::iter::repeat_n(Some(4.0), 9).chain([None]).collect();
    let (rep, members, _) = consensus_of(&runs(&nine), 9);
    assert!(rep.is_some());
    assert_eq!(members.len(), 9);
    let eight: Vec<_> = std::iter::repeat_n(Some(4.0), 8)
        .chain([Some(5.0), Some(5.0)])
        .collect();
    assert_eq!(consensus_of(&runs(&eight), 9).0, None);
    let tie = runs(&[Some(5.0), Some(4.0), Some(4.0), Some(5.0)]);
    let rev: Vec<_> = tie.iter().rev().cloned().collect();
    let a = consensus_of(&tie, 2)
        .0
        .map(|i| tie[i].outcome.value.clone());
    let b = consensus_of(&rev, 2)
        .0
        .map(|i| rev[i].outcome.value.clone());
    assert_eq!(a, b);
}

fn synthetic(id: &str, first: Option<usize>, unanimous: bool) -> SimplificationJournal {
    let depth = first.unwrap_or(5);
    let iterations = (0..=depth)
        .map(|i| {
            let hit = first == Some(i);
            IterationRecord {
                valid_programs: 10,
                consensus: hit.then_some(Value::Number(1.0)),
                unanimous: hit && unanimous,
                largest_cluster: if hit { 10 } else { 3 },
                ..empty_record(i)
            }
        })
        .collect();
    SimplificationJournal {
        question_id: id.into(),
        sample_count: 10,
        quota: 9,
        initial_conditions: KnownConditions::default(),
        final_conditions: KnownConditions::default(),
        iterations,
        status: if first.is_some() {
            SimplifyStatus::Consensus
        } else {
            SimplifyStatus::BudgetExhausted
        },
        abort_reason: None,
    }
}

#[test]
fn stats_edge_cases() {
    let empty = collect_stats(&[], None, Reading::Quota, 5);
    assert_eq!(empty.rows.len(), 6);
    assert!(empty
        .rows
        .iter()
        .all(|r| r.instances_gained == 0 && r.collected_pct == 0.0));
    let one = collect_stats(&[synthetic("a", Some(0), true)], None, Reading::Quota, 5);
    assert_eq!(one.rows[0].collected_pct, 100.0);

    let js = [
        synthetic("a", Some(0), false),
        synthetic("b", Some(1), true),
        synthetic("c", None, false),
    ];
    let quota = collect_stats(&js, None, Reading::Quota, 5);
    let unan = collect_stats(&js, None, Reading::Unanimous, 5);
    assert_eq!(quota.rows[0].instances_gained, 1);
    assert_eq!(unan.rows[0].instances_gained, 0);
    assert_eq!(unan.rows[1].instances_gained, 1);

    let gold = BTreeMap::from([
        ("a".to_string(), Answer::number(1.0)),
        ("b".to_string(), Answer::number(2.0)),
    ]);
    let with_gold = collect_stats(&js, Some(&gold), Reading::Quota, 5);
    assert_eq!(with_gold.rows[0].accuracy_pct, Some(100.0));
    assert_eq!(with_gold.rows[1].accuracy_pct, Some(0.0));
    assert_eq!(with_gold.rows[2].accuracy_pct, None);
    assert!(with_gold.render_table().contains("original"));
}
