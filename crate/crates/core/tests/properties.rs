//! Property tests for the core invariants.

use std::sync::Arc;

use analogy_core::concept::{gate_decision, survivors, tiers, CandidateVerdict, Criterion};
use analogy_core::inference::{vote, ProgramRun};
use analogy_core::oracle::{
    CompletionCache, FnBackend, Message, ReplayBackend, Sampling, Transcript,
};
use analogy_core::program::{
    execute_program, parse_program, print_program, AskHost, HostReply, OracleCall, ParameterBinding,
};
use analogy_core::simplify::{consensus_of, KnownConditions};
use analogy_core::{
    Answer, ExecutionOutcome, Limits, Oracle, SelectionConfig, Status, Value, ValueKind,
};
use proptest::prelude::*;

struct NoHost;

impl AskHost for NoHost {
    fn ask(&self, _: &str, _: ValueKind) -> Result<HostReply, String> {
        Err("no oracle configured".into())
    }
}

fn arith(names: Vec<&'static str>) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|n| n.to_string()),
        (0u32..100, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        prop::sample::select(names).prop_map(str::to_string),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["+", "-", "*", "/", "//", "%", "**"]),
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("({a} {op} {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a} * {b} + 1")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(|(c, t, e)| format!("({t} if {c} > 3 else {e})")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("max({a}, {b})")),
        ]
    })
}

fn program() -> impl Strategy<Value = String> {
    (arith(vec!["a", "b", "c"]), arith(vec!["a", "b", "c", "x"]), any::<bool>()).prop_map(|(e1, e2, branch)| {
        let body = if branch {
            format!("    x = {e1}\n    if x >= 10 and not (a == b):\n        x += 1\n    else:\n        x = x - 2\n    return {e2}\n")
        } else {
            format!("    x = {e1}\n    return {e2}\n")
        };
        format!("def answer(a: int, b: float, c: int) -> float:\n{body}\nanswer(3, 4.5, 7)\n")
    })
}

fn binding() -> ParameterBinding {
    ParameterBinding::new()
        .with("a", Value::Number(3.0))
        .with("b", Value::Number(4.5))
        .with("c", Value::Number(7.0))
}

fn verdict() -> impl Strategy<Value = CandidateVerdict> {
    (any::<[bool; 4]>(), 0usize..12).prop_map(|(f, matches)| CandidateVerdict {
        similarity_ok: f[0],
        complexity_ok: f[1],
        soundness_ok: f[2],
        accuracy_ok: f[3],
        match_count: matches,
        error_count: 0,
        max_query_similarity: 0.0,
    })
}

fn answer() -> impl Strategy<Value = Answer> {
    prop_oneof![
        Just(Answer::yes()),
        Just(Answer::no()),
        Just(Answer::unknown())
    ]
}

fn run(value: Option<f64>) -> ProgramRun {
    let outcome = match value {
        Some(v) => ExecutionOutcome {
            status: Status::Value,
            value: Some(Value::Number(v)),
            error_message: None,
            oracle_trace: Vec::<OracleCall>::new(),
        },
        None => ExecutionOutcome::error("boom"),
    };
    ProgramRun {
        source: String::new(),
        ast: None,
        binding: None,
        outcome,
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn print_parse_round_trip(src in program()) {
        let ast = parse_program(&src).unwrap();
        let printed = print_program(&ast);
        let reparsed = parse_program(&printed).unwrap();
        prop_assert_eq!(&print_program(&reparsed), &printed);
        prop_assert_eq!(&reparsed.functions, &ast.functions);
        let a = execute_program(&ast, &binding(), &NoHost, &Limits::default());
        let b = execute_program(&reparsed, &binding(), &NoHost, &Limits::default());
        prop_assert_eq!(a.status, b.status);
        prop_assert_eq!(a.value, b.value);
    }

    #[test]
    fn threshold_law(m in 1usize..=40, counts in prop::collection::vec(0usize..=40, 1..30)) {
        let counts: Vec<usize> = counts.into_iter().map(|c| c % (m + 1)).collect();
        let verdicts: Vec<_> = counts
            .iter()
            .map(|&c| CandidateVerdict {
                similarity_ok: true,
                complexity_ok: true,
                soundness_ok: true,
                accuracy_ok: c >= 2,
                match_count: c,
                error_count: 0,
                max_query_similarity: 0.0,
            })
            .collect();
        let (low, high) = tiers(&verdicts, SelectionConfig::default().high_threshold(m));
        for (i, &c) in counts.iter().enumerate() {
            prop_assert_eq!(high.contains(&i), c >= 3 && 4 * c >= 3 * m);
            prop_assert_eq!(low.contains(&i), c >= 2);
            prop_assert!(!high.contains(&i) || low.contains(&i));
        }
    }

    #[test]
    fn gate_is_monotone(answers in prop::collection::vec(answer(), 1..16), x in 1usize..16) {
        let admitted = gate_decision(&answers, x);
        if admitted.is_some() && x > 1 {
            prop_assert!(gate_decision(&answers, x - 1).is_some());
        }
        if let Some(i) = admitted {
            let label = answers[i].clone();
            prop_assert!(label.is_concrete());
            let mut more = answers.clone();
            more.push(label.clone());
            let again = gate_decision(&more, x).map(|j| more[j].clone());
            prop_assert_eq!(again, Some(label));
        }
    }

    #[test]
    fn filters_commute(verdicts in prop::collection::vec(verdict(), 0..20), perm in Just(Criterion::ALL).prop_shuffle()) {
        let mut a = survivors(&verdicts, &Criterion::ALL);
        let mut b = survivors(&verdicts, &perm);
        a.sort_unstable();
        b.sort_unstable();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn consensus_ignores_sample_order(
        values in prop::collection::vec(prop::option::of(prop::sample::select(vec![1.0, 2.0, 100.0, 52.0])), 1..14),
        quota in 1usize..12,
        seed in any::<u64>(),
    ) {
        let runs: Vec<_> = values.iter().copied().map(run).collect();
        let mut order: Vec<usize> = (0..runs.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<_> = order.iter().map(|&i| runs[i].clone()).collect();
        let (rep_a, members_a, largest_a) = consensus_of(&runs, quota);
        let (rep_b, members_b, largest_b) = consensus_of(&shuffled, quota);
        prop_assert_eq!(largest_a, largest_b);
        prop_assert_eq!(members_a.len(), members_b.len());
        let va = rep_a.and_then(|i| runs[i].outcome.value.clone());
        let vb = rep_b.and_then(|i| shuffled[i].outcome.value.clone());
        prop_assert_eq!(va, vb);

        let (answer_a, counts_a) = vote(&runs);
        let (_, counts_b) = vote(&shuffled);
        prop_assert_eq!(counts_a, counts_b);
        prop_assert!(answer_a.is_concrete() == values.iter().any(Option::is_some));
    }

    #[test]
    fn cache_round_trip(
        prompts in prop::collection::vec("[a-zA-Z0-9 ?.]{1,40}", 1..8),
        n in 1u32..4,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let live = Oracle::new(Arc::new(FnBackend::new("echo", |t: &Transcript| {
            Ok((0..t.sampling.n).map(|i| format!("{} #{i}", t.last_content())).collect())
        })))
        .with_cache(Arc::new(CompletionCache::open(&path).unwrap()));
        let transcripts: Vec<_> = prompts
            .iter()
            .map(|p| Transcript::new(vec![Message::system("sys"), Message::user(p.clone())], Sampling::sampled(n)))
            .collect();
        let first: Vec<_> = transcripts.iter().map(|t| live.complete(t).unwrap()).collect();
        drop(live);

        let replay = Oracle::new(Arc::new(ReplayBackend)).with_cache(Arc::new(CompletionCache::open(&path).unwrap()));
        for (t, want) in transcripts.iter().zip(&first) {
            prop_assert_eq!(&replay.complete(t).unwrap(), want);
        }
        prop_assert_eq!(replay.backend_request_count(), 0);
    }

    #[test]
    fn folding_keeps_a_prefix(
        initial in prop::collection::vec("[a-z ]{1,20}\\.", 1..5),
        folds in prop::collection::vec("[a-z ]{1,20}\\.", 0..8),
    ) {
        let mut kc = KnownConditions::initial(initial.clone());
        let mut previous: Vec<String> = kc.texts().into_iter().map(str::to_string).collect();
        for (i, f) in folds.iter().enumerate() {
            kc.fold(f.clone(), i + 1);
            let now: Vec<String> = kc.texts().into_iter().map(str::to_string).collect();
            prop_assert_eq!(now.len(), previous.len() + 1);
            prop_assert_eq!(&now[..previous.len()], &previous[..]);
            prop_assert!(kc.render().starts_with(&previous.join(" ")));
            previous = now;
        }
        prop_assert_eq!(kc.len(), initial.len() + folds.len());
    }
}
