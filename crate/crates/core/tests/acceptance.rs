//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use analogy_core::concept::{
    self, apply_selection, candidate_from_completion, evaluate_candidate, gate_decision, survivors,
    tiers, AbstractQuestion, CandidateVerdict, Criterion, GateResult, SimilarQuestion,
    SimilarQuestionSet,
};
use analogy_core::datakit::{ingest, Dataset, Evaluator, IngestFormat, Split};
use analogy_core::inference::{first_pass, rag_second_pass, Pass};
use analogy_core::journal::to_jsonl_string;
use analogy_core::oracle::{FnBackend, LexicalSimilarity, Rule, ScriptedBackend, Transcript};
use analogy_core::program::fixtures::{
    book_stack_binding, candy_bar_binding, lions_binding, BOOK_STACK, CANDY_BAR, LIONS,
};
use analogy_core::program::{execute_program, parse_program, AskHost, HostReply, ParameterBinding};
use analogy_core::simplify::{
    self, collect_stats, IterationRecord, KnownConditions, Reading, SimplificationJournal,
    SimplifyStatus,
};
use analogy_core::{
    Answer, AnswerMode, Context, Limits, Oracle, QuestionRecord, SelectionConfig, SimplifyConfig,
    Value, ValueKind,
};

type Check = Result<(), String>;
type CheckFn = fn() -> Check;

struct NoHost;

impl AskHost for NoHost {
    fn ask(&self, _: &str, _: ValueKind) -> Result<HostReply, String> {
        Err("no oracle configured".into())
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn criterion_1_interpreter() -> Check {
    let start = Instant::now();
    let cases = [
        ("candy bar", CANDY_BAR, candy_bar_binding(), 4.0),
        ("lions", LIONS, lions_binding(), 100.0),
        (
            "book stack",
            BOOK_STACK,
            book_stack_binding(),
            12.0 * 80.0 / 6.0,
        ),
    ];
    for (name, src, binding, expected) in cases {
        let ast = parse_program(src).map_err(|e| format!("{name}: {e}"))?;
        let out = execute_program(&ast, &binding, &NoHost, &Limits::default());
        let Some(Value::Number(v)) = out.value else {
            return Err(format!(
                "{name}: no numeric value ({:?})",
                out.error_message
            ));
        };
        ensure(
            (v - expected).abs() < 1e-9,
            format!("{name}: {v} != {expected}"),
        )?;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )
}

fn verdict(matches: usize) -> CandidateVerdict {
    CandidateVerdict {
        similarity_ok: true,
        complexity_ok: true,
        soundness_ok: true,
        accuracy_ok: matches >= 2,
        match_count: matches,
        error_count: 0,
        max_query_similarity: 0.0,
    }
}

/// Small deterministic generator for randomized match counts.
struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

fn criterion_2_threshold_law() -> Check {
    let cfg = SelectionConfig::default();
    let mut rng = SplitMix(7);
    for m in 1..=30usize {
        let mut counts: Vec<usize> = (0..=m).collect();
        counts.extend((0..200).map(|_| (rng.next() % (m as u64 + 1)) as usize));
        let verdicts: Vec<_> = counts.iter().map(|&c| verdict(c)).collect();
        let (low, high) = tiers(&verdicts, cfg.high_threshold(m));
        for (i, &c) in counts.iter().enumerate() {
            let ref_high = c >= 3 && 4 * c >= 3 * m;
            let ref_low = c >= 2;
            ensure(
                high.contains(&i) == ref_high,
                format!("M={m} matches={c}: high tier disagrees"),
            )?;
            ensure(
                low.contains(&i) == ref_low,
                format!("M={m} matches={c}: low tier disagrees"),
            )?;
        }
    }
    Ok(())
}

fn criterion_3_confidence_gate() -> Check {
    let mut compositions = 0;
    for yes in 0..=10usize {
        for no in 0..=10 - yes {
            let unknown = 10 - yes - no;
            compositions += 1;
            let expected = yes.max(no) >= 9;
            let orders = [
                [
                    vec![Answer::yes(); yes],
                    vec![Answer::no(); no],
                    vec![Answer::unknown(); unknown],
                ]
                .concat(),
                [
                    vec![Answer::unknown(); unknown],
                    vec![Answer::no(); no],
                    vec![Answer::yes(); yes],
                ]
                .concat(),
            ];
            for answers in &orders {
                let admitted = gate_decision(answers, 9);
                ensure(
                    admitted.is_some() == expected,
                    format!("({yes},{no},{unknown}): gate disagrees"),
                )?;
                if let Some(i) = admitted {
                    let want = if yes >= 9 {
                        Answer::yes()
                    } else {
                        Answer::no()
                    };
                    ensure(
                        answers[i] == want,
                        format!("({yes},{no},{unknown}): wrong label"),
                    )?;
                }
            }
        }
    }
    ensure(
        compositions == 66,
        format!("enumerated {compositions} compositions"),
    )
}

fn synthetic_journal(id: usize, first: Option<usize>) -> SimplificationJournal {
    let depth = first.unwrap_or(5);
    let iterations = (0..=depth)
        .map(|i| IterationRecord {
            iteration: i,
            next_question: (i > 0).then(|| format!("step {i}")),
            terminal: false,
            cot_answer: None,
            folded_statement: None,
            outcomes: Vec::new(),
            valid_programs: 10,
            invalid_programs: 0,
            largest_cluster: if first == Some(i) { 10 } else { 4 },
            unanimous: first == Some(i),
            consensus: (first == Some(i)).then_some(Value::Number(1.0)),
        })
        .collect();
    SimplificationJournal {
        question_id: format!("q{id}"),
        sample_count: 10,
        quota: 9,
        initial_conditions: KnownConditions::initial(["given"]),
        final_conditions: KnownConditions::initial(["given"]),
        iterations,
        status: if first.is_some() {
            SimplifyStatus::Consensus
        } else {
            SimplifyStatus::BudgetExhausted
        },
        abort_reason: None,
    }
}

fn criterion_4_iteration_stats() -> Check {
    let start = Instant::now();
    let gained = [344usize, 103, 92, 46, 15, 1];
    let mut journals = Vec::new();
    for (iter, &n) in gained.iter().enumerate() {
        for _ in 0..n {
            journals.push(synthetic_journal(journals.len(), Some(iter)));
        }
    }
    while journals.len() < 1358 {
        journals.push(synthetic_journal(journals.len(), None));
    }
    let stats = collect_stats(&journals, None, Reading::Quota, 5);
    let expected = ["25.3", "32.9", "39.7", "43.1", "44.2", "44.3"];
    ensure(stats.total == 1358, format!("total {}", stats.total))?;
    for (row, want) in stats.rows.iter().zip(expected) {
        let got = format!("{:.1}", row.collected_pct);
        ensure(
            got == want,
            format!("iteration {}: {got} != {want}", row.iteration),
        )?;
        ensure(
            row.instances_gained == gained[row.iteration],
            "gained count mismatch",
        )?;
    }
    let elapsed = start.elapsed();
    ensure(
        elapsed < Duration::from_secs(1),
        format!("took {elapsed:?}"),
    )
}

fn golden_instances(concurrency: usize) -> Result<String, String> {
    let backend = ScriptedBackend::from_json_file(&fixture("golden_oracle.json"))
        .map_err(|e| e.to_string())?;
    let oracle = Oracle::new(Arc::new(backend)).with_concurrency(concurrency);
    let ctx = Context::new(&oracle, &LexicalSimilarity);
    let records = ingest(
        &fixture("golden_questions.jsonl"),
        IngestFormat::Jsonl,
        None,
        None,
    )
    .map_err(|e| e.to_string())?
    .records;
    let results = concept::run_batch(&ctx, &records, &SelectionConfig::default(), concurrency)
        .map_err(|e| e.to_string())?;
    let instances: Vec<_> = results.into_iter().flat_map(|r| r.instances).collect();
    Ok(to_jsonl_string(&instances))
}

fn criterion_5_golden_run() -> Check {
    let serial = golden_instances(1)?;
    let again = golden_instances(1)?;
    let parallel = golden_instances(64)?;
    ensure(!serial.is_empty(), "golden run produced no instances")?;
    ensure(serial == again, "two serial runs differ")?;
    ensure(serial == parallel, "serial and concurrent runs differ")
}

const LION_Q: &str = "There are some lions in Londolozi at first. Lion cubs are born at the rate of 5 per month and lions die at the rate of 1 per month. If there are 148 lions in Londolozi after 1 year, how many lions were there in Londolozi at first?";

fn lion_programs(right: usize, wrong: usize) -> Vec<String> {
    let good = format!("{LIONS}\nanswer(5, 1, 148, 12)\n");
    let mut v = vec![good; right];
    v.extend(vec![
        "def answer() -> int:\n    return 52\n".to_string();
        wrong
    ]);
    v
}

fn lion_oracle(next: &str, after_fold: Vec<String>) -> Oracle {
    let rules = vec![
        Rule::contains(["Extract the given conditions"]).reply([
            "Lion cubs are born at the rate of 5 per month.\nLions die at the rate of 1 per month.\nThere are 148 lions after 1 year.",
        ]),
        Rule::contains(["Decompose the math question"]).reply([next]),
        Rule::contains(["step by step"]).reply(["5 - 1 = 4. #### 4"]),
        Rule::contains(["to a statement"]).reply(["The number of lions increases by 4 every month."]),
        Rule::contains(["Reference Answer", "increases by 4"]).reply(after_fold),
        Rule::contains(["Reference Answer"]).reply(lion_programs(5, 5)),
    ];
    Oracle::new(Arc::new(ScriptedBackend::from_rules(rules)))
}

fn criterion_6_simplification_stopping() -> Check {
    let q = QuestionRecord::new("lions", LION_Q).with_dataset(Dataset::Gsm8k);
    let cfg = SimplifyConfig::default();
    let run = |o: &Oracle| {
        let ctx = Context::new(o, &LexicalSimilarity);
        simplify::run_simplification(&ctx, &q, &cfg).map_err(|e| e.to_string())
    };

    let terminal = run(&lion_oracle("No more decomposition.", vec![]))?.journal;
    ensure(
        terminal.status == SimplifyStatus::TerminalNoConsensus,
        format!("(a) status {:?}", terminal.status),
    )?;
    ensure(
        terminal.iterations.last().is_some_and(|r| r.terminal),
        "(a) no terminal marker",
    )?;

    let consensus = run(&lion_oracle(
        "How many lions are added per month?",
        lion_programs(9, 1),
    ))?;
    let j = &consensus.journal;
    ensure(
        j.status == SimplifyStatus::Consensus,
        format!("(b) status {:?}", j.status),
    )?;
    ensure(
        j.iterations.len() == 2 && j.iterations[1].largest_cluster == 9,
        "(b) consensus not at 9/10 on iteration 1",
    )?;
    ensure(
        j.iterations[1].consensus == Some(Value::Number(100.0)),
        "(b) wrong consensus value",
    )?;
    ensure(consensus.instances.len() == 9, "(b) expected 9 instances")?;
    let below = run(&lion_oracle(
        "How many lions are added per month?",
        lion_programs(8, 2),
    ))?
    .journal;
    ensure(
        below.status != SimplifyStatus::Consensus,
        "(b) 8/10 must not reach consensus",
    )?;

    let endless = Oracle::new(Arc::new(FnBackend::new("endless", |t: &Transcript| {
        let last = t.last_content();
        let n = t.sampling.n as usize;
        let reply = if last.starts_with("Extract") {
            vec!["Lions are born at 5 per month.".to_string()]
        } else if last.starts_with("Decompose") {
            vec!["What else is known?".to_string()]
        } else if last.starts_with("Answer this question") {
            vec!["#### 4".to_string()]
        } else if last.starts_with("Convert") {
            vec!["Another fact holds.".to_string()]
        } else {
            lion_programs(5, 5)
        };
        Ok(reply.into_iter().cycle().take(n).collect())
    })));
    let budget = run(&endless)?.journal;
    ensure(
        budget.status == SimplifyStatus::BudgetExhausted,
        format!("(c) status {:?}", budget.status),
    )?;
    ensure(
        budget.iterations.len() == 6,
        format!("(c) {} iterations", budget.iterations.len()),
    )?;

    let statuses = [terminal.status, j.status, budget.status];
    let json: Vec<String> = statuses
        .iter()
        .map(|s| serde_json::to_string(s).unwrap())
        .collect();
    ensure(
        json[0] != json[1] && json[1] != json[2] && json[0] != json[2],
        "statuses not distinguishable",
    )
}

fn criterion_7_rag_gating() -> Check {
    let unsure = "def answer() -> bool:\n    price = ask_llm(\"What is the museum ticket price?\", bool)\n    return price\n";
    let yes = "def answer() -> bool:\n    return True\n";
    let q = QuestionRecord::new("museum", "Can I visit Museum X 20 times with 100 dollars?");

    let backend = Arc::new(ScriptedBackend::from_rules(vec![
        Rule::contains(["short paragraph"]).reply(["Tickets to Museum X cost 10 dollars."]),
        Rule::contains(["Reference Answer"]).reply([yes]),
        Rule::contains(["necessary abstractions"]).reply([unsure]),
        Rule::contains(["museum ticket price"]).reply(["{\"answer\": \"unknown\"}"]),
    ]));
    let oracle = Oracle::new(backend.clone());
    let ctx = Context::new(&oracle, &LexicalSimilarity);
    let first = first_pass(&ctx, &q, 10).map_err(|e| e.to_string())?;
    ensure(!first.value.is_concrete(), "first pass should be unknown")?;
    let second = rag_second_pass(&ctx, &q, &first, 10).map_err(|e| e.to_string())?;
    let hits = backend.hit_counts();
    ensure(hits[0] == 1, format!("{} paragraph requests", hits[0]))?;
    ensure(
        hits[1] == 1,
        format!("{} second-pass program requests", hits[1]),
    )?;
    ensure(
        second.pass == Pass::Rag && second.value == Answer::yes(),
        "second pass answer not carried",
    )?;

    let backend = Arc::new(ScriptedBackend::from_rules(vec![
        Rule::contains(["short paragraph"]).reply(["unused"]),
        Rule::contains(["Reference Answer"]).reply([yes]),
        Rule::contains(["necessary abstractions"]).reply([yes]),
    ]));
    let oracle = Oracle::new(backend.clone());
    let ctx = Context::new(&oracle, &LexicalSimilarity);
    let first = first_pass(&ctx, &q, 10).map_err(|e| e.to_string())?;
    let before = oracle.request_count();
    let out = rag_second_pass(&ctx, &q, &first, 10).map_err(|e| e.to_string())?;
    ensure(
        oracle.request_count() == before,
        "second pass issued oracle calls after a yes",
    )?;
    ensure(
        out.pass == Pass::First && out.value == Answer::yes(),
        "first-pass answer changed",
    )
}

fn criterion_8_no_gold_leakage() -> Check {
    let records = ingest(
        &fixture("golden_questions.jsonl"),
        IngestFormat::Jsonl,
        None,
        Some(Split::Seen),
    )
    .map_err(|e| e.to_string())?
    .records;
    ensure(
        records
            .iter()
            .all(|r| r.gold.is_some() && r.split == Split::Seen),
        "fixture lacks seen-split gold",
    )?;
    let backend = ScriptedBackend::from_json_file(&fixture("golden_oracle.json"))
        .map_err(|e| e.to_string())?;
    let oracle = Oracle::new(Arc::new(backend));
    let ctx = Context::new(&oracle, &LexicalSimilarity);
    concept::run_batch(&ctx, &records, &SelectionConfig::default(), 4)
        .map_err(|e| e.to_string())?;
    analogy_core::inference::answer_batch(&ctx, &records, &Default::default(), false, 4)
        .map_err(|e| e.to_string())?;

    let math = QuestionRecord::new("lions", LION_Q)
        .with_dataset(Dataset::Gsm8k)
        .with_split(Split::Seen)
        .with_gold(Answer::number(100.0));
    let lion = lion_oracle("How many lions are added per month?", lion_programs(10, 0));
    let lctx = Context::new(&lion, &LexicalSimilarity);
    simplify::run_simplification(&lctx, &math, &SimplifyConfig::default())
        .map_err(|e| e.to_string())?;

    let reads: usize = records.iter().map(|r| r.gold_reads()).sum::<usize>() + math.gold_reads();
    ensure(reads == 0, format!("{reads} gold reads during extraction"))?;
    let gold = records[0].gold.as_ref().unwrap();
    let _ = gold.reveal(&Evaluator::new());
    ensure(
        records[0].gold_reads() == 1,
        "access counter does not register evaluator reads",
    )
}

const WATER_PROGRAM: &str = "def answer(animal_a: str, habitat_b: str) -> bool:
    climate = ask_llm(f\"Can {animal_a} survive the climate of {habitat_b}?\", bool)
    water = ask_llm(f\"Can {animal_a} find water in {habitat_b}?\", bool)
    return climate and water
";

/// Twelve candidates, each with the verdict named in its comment line.
fn filter_programs() -> Vec<(&'static str, String, [bool; 4], bool, bool)> {
    let two = |body: &str| {
        format!(
            "def answer(animal_a: str, habitat_b: str) -> bool:\n    climate = ask_llm(f\"Can {{animal_a}} survive the climate of {{habitat_b}}?\", bool)\n    food = ask_llm(f\"Can {{animal_a}} find food in {{habitat_b}}?\", bool)\n{body}"
        )
    };
    // (name, source, [similarity, complexity, soundness, accuracy], high, low)
    vec![
        ("sound two-call", two("    return climate and food\n"), [true, true, true, true], true, true),
        (
            "sound three-call",
            two("    water = ask_llm(f\"Can {animal_a} find water in {habitat_b}?\", bool)\n    return climate and food and (water or food)\n"),
            [true, true, true, true],
            true,
            true,
        ),
        (
            "verbatim repeat of the similar question",
            two("    direct = ask_llm(f\"Could a {animal_a} live in {habitat_b}?\", bool)\n    return direct and climate\n"),
            [false, true, true, true],
            false,
            false,
        ),
        (
            "single oracle call",
            "def answer(animal_a: str, habitat_b: str) -> bool:\n    return ask_llm(f\"Can {animal_a} survive the climate of {habitat_b}?\", bool) and always_true(animal_a, habitat_b)\n\ndef always_true(a: str, b: str) -> bool:\n    return True\n".into(),
            [true, false, true, true],
            false,
            false,
        ),
        (
            "unused parameter",
            "def answer(animal_a: str, habitat_b: str) -> bool:\n    warm = ask_llm(f\"Is {animal_a} warm-blooded?\", bool)\n    big = ask_llm(f\"Is {animal_a} large?\", bool)\n    return warm or big\n".into(),
            [true, true, false, true],
            false,
            false,
        ),
        (
            "three errors",
            two("    if habitat_b == \"the Arctic\":\n        return climate and food\n    return 1 / 0 > 0\n"),
            [true, true, false, false],
            false,
            false,
        ),
        (
            "two errors",
            two("    if habitat_b == \"Antarctica\" or habitat_b == \"a forest\":\n        return 1 / 0 > 0\n    return climate and food\n"),
            [true, true, true, true],
            false,
            true,
        ),
        ("low tier only", WATER_PROGRAM.into(), [true, true, true, true], false, true),
        ("always wrong", two("    return not (climate and food)\n"), [true, true, true, false], false, false),
        ("parse failure", "def answer(animal_a: str, habitat_b: str) -> bool\n    return True\n".into(), [true, false, false, false], false, false),
        (
            "repeats the original question",
            two("    original = ask_llm(\"Could a camel live in the Sahara desert?\", bool)\n    return climate and food and (original or True)\n"),
            [false, true, true, true],
            false,
            false,
        ),
        (
            "no oracle calls",
            "def answer(animal_a: str, habitat_b: str) -> bool:\n    return len(animal_a) > 0 and len(habitat_b) > 0\n".into(),
            [true, false, true, true],
            false,
            false,
        ),
    ]
}

fn similar(i: usize, animal: &str, place: &str, silver: bool) -> SimilarQuestion {
    let text = format!("Could a {animal} live in {place}?");
    let binding = ParameterBinding::new()
        .with("animal_a", Value::Text(animal.into()))
        .with("habitat_b", Value::Text(place.into()));
    let record = QuestionRecord::new(format!("camel#s{i:02}"), text)
        .with_mode(AnswerMode::Binary)
        .with_binding(binding.clone());
    let label = Answer::boolean(silver);
    SimilarQuestion {
        record,
        binding: Some(binding),
        gate: GateResult {
            answers: vec![label.clone(); 10],
            modal_count: 10,
            silver: Some(label),
            chosen_cot: Some("reasoning".into()),
        },
    }
}

fn criterion_9_filters() -> Check {
    // (animal, place, climate, food, water, silver)
    let world = [
        ("goat", "Antarctica", false, false, false, false),
        ("owl", "a forest", true, true, true, true),
        ("bison", "a prairie", true, true, false, true),
        ("walrus", "the Arctic", true, true, false, true),
    ];
    let mut rules = Vec::new();
    let j = |b: bool| format!("{{\"answer\": {b}}}");
    for (a, p, climate, food, water, silver) in world {
        rules.push(
            Rule::contains([format!("Can {a} survive the climate of {p}?")]).reply([j(climate)]),
        );
        rules.push(Rule::contains([format!("Can {a} find food in {p}?")]).reply([j(food)]));
        rules.push(Rule::contains([format!("Can {a} find water in {p}?")]).reply([j(water)]));
        rules.push(Rule::contains([format!("Could a {a} live in {p}?")]).reply([j(silver)]));
        rules.push(Rule::contains([format!("Is {a} warm-blooded?")]).reply([j(silver)]));
        rules.push(Rule::contains([format!("Is {a} large?")]).reply([j(false)]));
    }
    rules.push(Rule::contains(["Could a camel live in the Sahara desert?"]).reply([j(true)]));
    let oracle = Oracle::new(Arc::new(ScriptedBackend::from_rules(rules)));
    let ctx = Context::new(&oracle, &LexicalSimilarity);
    let host = ctx.host();

    let set = SimilarQuestionSet {
        abstract_question: AbstractQuestion {
            text: "Could Animal A (animal_a: str) live in Habitat B (habitat_b: str)?".into(),
            parameters: Vec::new(),
            source_question_id: "camel".into(),
            binding: ParameterBinding::new(),
        },
        similars: world
            .iter()
            .enumerate()
            .map(|(i, (a, p, .., silver))| similar(i, a, p, *silver))
            .collect(),
    };
    let programs = filter_programs();
    let mut candidates = Vec::new();
    for (i, (_, src, ..)) in programs.iter().enumerate() {
        let mut c = candidate_from_completion(src, &format!("camel#s{:02}", i % 4));
        evaluate_candidate(&ctx, &host, &mut c, &set).map_err(|e| e.to_string())?;
        candidates.push(c);
    }
    let cfg = SelectionConfig::default();
    let sel = apply_selection(
        &candidates,
        &set,
        "Could a camel live in the Sahara desert?",
        AnswerMode::Binary,
        &cfg,
        &LexicalSimilarity,
    )
    .map_err(|e| e.to_string())?;
    for (i, (name, _, flags, high, low)) in programs.iter().enumerate() {
        let v = &sel.verdicts[i];
        let got = [
            v.similarity_ok,
            v.complexity_ok,
            v.soundness_ok,
            v.accuracy_ok,
        ];
        ensure(
            got == *flags,
            format!("{name}: verdict {got:?}, expected {flags:?}"),
        )?;
        ensure(
            sel.high_pass.contains(&i) == *high,
            format!("{name}: high tier"),
        )?;
        ensure(
            sel.low_pass.contains(&i) == *low,
            format!("{name}: low tier"),
        )?;
    }
    let mut reference = survivors(&sel.verdicts, &Criterion::ALL);
    reference.sort_unstable();
    ensure(
        reference == [0, 1, 6, 7],
        format!("survivors {reference:?}"),
    )?;
    all_orders_agree(&sel.verdicts, &reference)
}

/// Checks every ordering of the criteria, generated with Heap's algorithm.
fn all_orders_agree(verdicts: &[CandidateVerdict], reference: &[usize]) -> Check {
    fn heap(
        k: usize,
        a: &mut [Criterion; 4],
        visit: &mut dyn FnMut(&[Criterion; 4]) -> Check,
    ) -> Check {
        if k == 1 {
            return visit(a);
        }
        for i in 0..k {
            heap(k - 1, a, visit)?;
            let j = if k.is_multiple_of(2) { i } else { 0 };
            a.swap(j, k - 1);
        }
        Ok(())
    }
    let mut order = Criterion::ALL;
    let mut count = 0;
    heap(4, &mut order, &mut |o| {
        count += 1;
        let mut got = survivors(verdicts, o);
        got.sort_unstable();
        ensure(got == reference, format!("order {o:?} gives {got:?}"))
    })?;
    ensure(count == 24, format!("{count} orders"))
}

fn main() {
    let criteria: [(&str, CheckFn); 9] = [
        ("1 interpreter oracle suite", criterion_1_interpreter),
        ("2 threshold law", criterion_2_threshold_law),
        ("3 confidence gate enumeration", criterion_3_confidence_gate),
        ("4 iteration statistics", criterion_4_iteration_stats),
        ("5 golden conceptualization run", criterion_5_golden_run),
        (
            "6 simplification stopping",
            criterion_6_simplification_stopping,
        ),
        ("7 retrieval second-pass gating", criterion_7_rag_gating),
        ("8 no gold leakage", criterion_8_no_gold_leakage),
        ("9 selection filters", criterion_9_filters),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(()) => println!("PASS criterion {name}"),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {name}: {e}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
