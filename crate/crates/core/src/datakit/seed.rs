//! Seed supervision fixtures: a handful of worked reference instances plus
//! deterministic synthetic stand-ins that fill the mix to its target size.

use std::sync::LazyLock;

use super::{Origin, SupervisionInstance};
use crate::oracle::{render, TaskId};
use crate::program::fixtures::CANDY_BAR;

/// Binary-question seed instances in the builtin mix.
pub const SEED_BINARY_COUNT: usize = 228;
/// Math-question seed instances in the builtin mix.
pub const SEED_MATH_COUNT: usize = 265;

/// The shipped seed file; regenerate with `ANALOGY_BLESS_SEED=1 cargo test -p analogy-core seed`.
pub const BUILTIN_SEED_JSONL: &str = include_str!("../../data/seed.jsonl");

static BUILTIN: LazyLock<Vec<SupervisionInstance>> = LazyLock::new(|| {
    BUILTIN_SEED_JSONL
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("builtin seed line parses"))
        .collect()
});

/// The shipped seed mix.
pub fn builtin_seed() -> Vec<SupervisionInstance> {
    BUILTIN.clone()
}

fn instance(
    task: TaskId,
    slots: &[(&str, &str)],
    target: String,
    id: &str,
    synthetic: bool,
) -> SupervisionInstance {
    SupervisionInstance {
        task,
        input: render(task, slots).expect("seed template renders"),
        target,
        origin: Origin::Seed,
        origin_question_id: id.to_string(),
        provenance: format!("seed:{id}:{task}"),
        synthetic,
    }
}

struct Mapping<'a> {
    original: &'a str,
    label: &'a str,
    name: &'a str,
    kind: &'a str,
}

fn abstraction_target(maps: &[Mapping], text: &str, binding: &str) -> String {
    let found = maps
        .iter()
        .map(|m| m.original)
        .collect::<Vec<_>>()
        .join(", ");
    let clauses = maps
        .iter()
        .map(|m| {
            format!(
                "\"{}\" to \"{}\" ({}: {})",
                m.original, m.label, m.name, m.kind
            )
        })
        .collect::<Vec<_>>()
        .join(" ");
    format!("Values found: {found}. Replacements: {clauses} So the question becomes {text} With parameters {binding}")
}

fn annotate(text: &str, maps: &[Mapping]) -> String {
    let mut out = text.to_string();
    for m in maps {
        out = out.replacen(m.label, &format!("{} ({}: {})", m.label, m.name, m.kind), 1);
    }
    out
}

/// Reference instances built around well-known worked examples.
pub fn reference_seed() -> Vec<SupervisionInstance> {
    let mut out = Vec::new();

    let benny = "Benny bought 2 soft drinks for $4 each and 5 candy bars. He spent a total of 28 dollars. How much did each candy bar cost?";
    let benny_maps = [
        Mapping {
            original: "2 soft drinks",
            label: "Number of Soft Drinks X",
            name: "num_soft_drinks_x",
            kind: "int",
        },
        Mapping {
            original: "$4",
            label: "Cost per Soft Drink Y",
            name: "cost_per_soft_drink_y",
            kind: "int",
        },
        Mapping {
            original: "5 candy bars",
            label: "Number of Candy Bars Z",
            name: "num_candy_bars_z",
            kind: "int",
        },
        Mapping {
            original: "28",
            label: "Total Amount Spent W",
            name: "total_spent_w",
            kind: "int",
        },
    ];
    let benny_abs = "Benny bought Number of Soft Drinks X for Cost per Soft Drink Y each and Number of Candy Bars Z. He spent a total of Total Amount Spent W dollars. How much did each candy bar cost?";
    out.push(instance(
        TaskId::Abs,
        &[("q", benny)],
        abstraction_target(
            &benny_maps,
            benny_abs,
            "num_soft_drinks_x=2, cost_per_soft_drink_y=4, num_candy_bars_z=5, total_spent_w=28",
        ),
        "ref-benny",
        false,
    ));
    out.push(instance(
        TaskId::Aq2p,
        &[("aq", &annotate(benny_abs, &benny_maps))],
        CANDY_BAR.to_string(),
        "ref-benny",
        false,
    ));
    out.push(instance(
        TaskId::MathQ2kc,
        &[("q", benny)],
        "Benny bought 2 soft drinks for $4 each.\nBenny bought 5 candy bars.\nBenny spent 28 dollars in total.".into(),
        "ref-benny",
        false,
    ));

    let books = "Jack has a stack of books that is 12 inches thick. He knows from experience that 80 pages is one inch thick. If he has 6 books, how many pages is each one on average?";
    let book_maps = [
        Mapping {
            original: "12 inches",
            label: "Number of Inches X",
            name: "num_inches_x",
            kind: "int",
        },
        Mapping {
            original: "80 pages",
            label: "Number of Pages Y",
            name: "num_pages_y",
            kind: "int",
        },
        Mapping {
            original: "one inch",
            label: "Number of Inches Z",
            name: "num_inches_z",
            kind: "int",
        },
        Mapping {
            original: "6",
            label: "Number W",
            name: "num_w",
            kind: "int",
        },
    ];
    let books_abs = "Jack has a stack of books that is Number of Inches X thick. He knows from experience that Number of Pages Y is Number of Inches Z thick. If he has Number W books, how many pages is each one on average?";
    out.push(instance(
        TaskId::Abs,
        &[("q", books)],
        abstraction_target(
            &book_maps,
            books_abs,
            "num_inches_x=12, num_pages_y=80, num_inches_z=1, num_w=6",
        ),
        "ref-books",
        false,
    ));
    out.push(instance(
        TaskId::Aq2p,
        &[("aq", &annotate(books_abs, &book_maps))],
        "def answer(num_inches_x: int, num_pages_y: int, num_inches_z: int, num_w: int) -> float:\n    pages_per_inch = num_pages_y / num_inches_z\n    total_pages = num_inches_x * pages_per_inch\n    return total_pages / num_w\n".into(),
        "ref-books",
        false,
    ));

    let lions = "There are some lions in Londolozi at first. Lion cubs are born at the rate of 5 per month and lions die at the rate of 1 per month. If there are 148 lions in Londolozi after 1 year, how many lions were there in Londolozi at first?";
    let lion_kc = "There are some lions in Londolozi at first.\nLion cubs are born at the rate of 5 per month.\nLions die at the rate of 1 per month.\nThere are 148 lions in Londolozi after 1 year.";
    out.push(instance(
        TaskId::MathQ2kc,
        &[("q", lions)],
        lion_kc.into(),
        "ref-lions",
        false,
    ));
    out.push(instance(
        TaskId::MathQ2nq,
        &[("q", lions), ("c", lion_kc)],
        "What is the net increase in the number of lions per month?".into(),
        "ref-lions",
        false,
    ));
    let lion_kc2 = format!("{lion_kc}\nThe number of lions increases by 4 every month.");
    out.push(instance(
        TaskId::MathQ2nq,
        &[("q", lions), ("c", &lion_kc2)],
        "How many new lions are there after 1 year?".into(),
        "ref-lions",
        false,
    ));
    let lion_kc3 = format!("{lion_kc2}\nThere are 48 new lions after 1 year.\nThere were 100 lions in Londolozi at first.");
    out.push(instance(
        TaskId::MathQ2nq,
        &[("q", lions), ("c", &lion_kc3)],
        "No more decomposition.".into(),
        "ref-lions",
        false,
    ));
    out.push(instance(
        TaskId::Qa2s,
        &[
            ("q", "If lion cubs are born at the rate of 5 per month and lions die at the rate of 1 per month, what is the net increase in the number of lions per month?"),
            ("a", "4"),
        ],
        "The number of lions increases by 4 every month.".into(),
        "ref-lions",
        false,
    ));

    let wickham = "Wickham is throwing a huge Christmas party. He invites 30 people. Everyone attends the party, and half of the guests bring a plus one (one other person). He plans to serve a 3-course meal for the guests. If he uses a new plate for every course, how many plates does he need in total for his guests?";
    out.push(instance(
        TaskId::MathQ2kc,
        &[("q", wickham)],
        "Wickham invites 30 people.\nHalf of the guests bring a plus one.\nWickham prepares 3 courses for each person.\nA new plate is used for each course.".into(),
        "ref-wickham",
        false,
    ));
    out.push(instance(
        TaskId::Qa2s,
        &[
            ("q", "Wickham invites 30 people to the party. Half of the guests bring a plus one. How many additional people (plus ones) are coming to the party?"),
            ("a", "15"),
        ],
        "15 additional people are coming to the party as plus ones.".into(),
        "ref-wickham",
        false,
    ));
    out.push(instance(
        TaskId::Qa2s,
        &[
            ("q", "It takes 7 years for an apple tree to bear fruit. If Lydia planted a tree when she was 4 years old, how old would she be when the tree bears fruit for the first time?"),
            ("a", "11"),
        ],
        "Lydia would be 11 years old when the tree bears fruit for the first time.".into(),
        "ref-lydia",
        false,
    ));
    out
}

const ANIMALS: [&str; 12] = [
    "camel",
    "penguin",
    "chameleon",
    "salmon",
    "owl",
    "goat",
    "otter",
    "gecko",
    "bison",
    "falcon",
    "walrus",
    "beaver",
];
const HABITATS: [&str; 6] = [
    "the Sahara desert",
    "Antarctica",
    "a freshwater lake",
    "a tropical rainforest",
    "the Arctic tundra",
    "an alpine meadow",
];
const OBJECTS: [&str; 8] = [
    "an oak log",
    "a gold ring",
    "an ice cube",
    "a steel bolt",
    "a cork stopper",
    "a granite pebble",
    "a wax candle",
    "a plastic bottle cap",
];
const LIQUIDS: [&str; 5] = ["water", "olive oil", "mercury", "seawater", "honey"];

const HABITAT_PROGRAM: &str = r#"def answer(animal_a: str, habitat_b: str) -> bool:
    temperature_ok = ask_llm(f"Can a {animal_a} tolerate the typical temperatures of {habitat_b}?", bool)
    food_ok = ask_llm(f"Can a {animal_a} find its usual food in {habitat_b}?", bool)
    water_ok = ask_llm(f"Can a {animal_a} get enough water in {habitat_b}?", bool)
    return temperature_ok and food_ok and water_ok
"#;

const FLOAT_PROGRAM: &str = r#"def answer(object_a: str, liquid_b: str) -> bool:
    object_density = ask_llm(f"What is the density of {object_a}?", float)
    liquid_density = ask_llm(f"What is the density of {liquid_b}?", float)
    return object_density < liquid_density
"#;

fn binary_instances(
    id: &str,
    question: &str,
    annotated: &str,
    names: [&str; 2],
    values: [&str; 2],
    program: &str,
) -> [SupervisionInstance; 3] {
    let binding = format!(
        "{}=\"{}\", {}=\"{}\"",
        names[0], values[0], names[1], values[1]
    );
    [
        instance(
            TaskId::Abs,
            &[("q", question)],
            format!("Values found: {}, {}. So the question becomes {annotated} With parameters {binding}", values[0], values[1]),
            id,
            true,
        ),
        instance(
            TaskId::Q2p,
            &[("q", question)],
            format!("{program}\nanswer({binding})\n"),
            id,
            true,
        ),
        instance(TaskId::Aq2p, &[("aq", annotated)], program.to_string(), id, true),
    ]
}

const ANIMAL_LABELS: [&str; 4] = ["Animal A", "Creature A", "Species A", "Beast A"];
const HABITAT_LABELS: [&str; 4] = ["Habitat B", "Place B", "Region B", "Environment B"];
const HABITAT_VERBS: [&str; 3] = ["live comfortably in", "thrive in", "survive in"];
const OBJECT_LABELS: [&str; 4] = ["Object A", "Item A", "Thing A", "Material A"];
const LIQUID_LABELS: [&str; 4] = ["Liquid B", "Fluid B", "Substance B", "Medium B"];
const FLOAT_VERBS: [&str; 3] = ["float in", "stay afloat in", "float on top of"];

/// Wording variant `i` out of `4 * 4 * 3`; distinct for every `i` below 48.
fn variant<'a>(
    i: usize,
    a: &[&'a str; 4],
    b: &[&'a str; 4],
    verbs: &[&'a str; 3],
) -> (&'a str, &'a str, &'a str) {
    (a[i % 4], b[(i / 4) % 4], verbs[(i / 16) % 3])
}

fn binary_pool() -> Vec<SupervisionInstance> {
    let mut out = Vec::new();
    let (mut a, mut f) = (0, 0);
    // Interleave the two families so truncation keeps both represented.
    while a < ANIMALS.len() * HABITATS.len() || f < OBJECTS.len() * LIQUIDS.len() {
        if a < ANIMALS.len() * HABITATS.len() {
            let (animal, habitat) = (ANIMALS[a % ANIMALS.len()], HABITATS[a / ANIMALS.len()]);
            let (al, hl, verb) = variant(a, &ANIMAL_LABELS, &HABITAT_LABELS, &HABITAT_VERBS);
            out.extend(binary_instances(
                &format!("syn-habitat-{a:03}"),
                &format!("Could a {animal} {verb} {habitat}?"),
                &format!("Could {al} (animal_a: str) {verb} {hl} (habitat_b: str)?"),
                ["animal_a", "habitat_b"],
                [animal, habitat],
                HABITAT_PROGRAM,
            ));
            a += 1;
        }
        if f < OBJECTS.len() * LIQUIDS.len() {
            let (object, liquid) = (OBJECTS[f % OBJECTS.len()], LIQUIDS[f / OBJECTS.len()]);
            let (ol, ll, verb) = variant(f, &OBJECT_LABELS, &LIQUID_LABELS, &FLOAT_VERBS);
            out.extend(binary_instances(
                &format!("syn-float-{f:03}"),
                &format!("Would {object} {verb} {liquid}?"),
                &format!("Would {ol} (object_a: str) {verb} {ll} (liquid_b: str)?"),
                ["object_a", "liquid_b"],
                [object, liquid],
                FLOAT_PROGRAM,
            ));
            f += 1;
        }
    }
    out
}

const NAMES: [&str; 10] = [
    "Avery", "Jordan", "Riley", "Casey", "Morgan", "Quinn", "Rowan", "Emerson", "Parker", "Sage",
];
const GOODS: [(&str, &str); 5] = [
    ("notebooks", "pens"),
    ("apples", "pears"),
    ("tickets", "programs"),
    ("mugs", "coasters"),
    ("candles", "matches"),
];

const BAKED: [&str; 5] = ["loaves", "muffins", "bagels", "pies", "rolls"];

const SHOPPING_PROGRAM: &str = "def answer(num_items_x: int, cost_per_item_y: int, num_extras_z: int, total_spent_w: int) -> float:\n    cost_of_items = num_items_x * cost_per_item_y\n    cost_of_extras = total_spent_w - cost_of_items\n    return cost_of_extras / num_extras_z\n";
const BAKERY_PROGRAM: &str = "def answer(made_per_day_x: int, sold_per_day_y: int, num_days_z: int, final_stock_w: int) -> int:\n    daily_gain = made_per_day_x - sold_per_day_y\n    total_gain = daily_gain * num_days_z\n    return final_stock_w - total_gain\n";

fn math_instances(i: usize) -> Vec<SupervisionInstance> {
    let j = i / 2;
    let name = NAMES[j % NAMES.len()];
    let id = format!("syn-math-{i:03}");
    if i.is_multiple_of(2) {
        let (items, extras) = GOODS[(j / NAMES.len()) % GOODS.len()];
        let x = 2 + i % 5;
        let y = 3 + (i * 7) % 6;
        let z = 2 + (i * 3) % 4;
        let unit = 1 + (i * 5) % 7;
        let w = x * y + z * unit;
        let q = format!("{name} bought {x} {items} for ${y} each and {z} {extras}. The total spent was {w} dollars. How much did each of the {extras} cost?");
        let owned = [
            (format!("{x} {items}"), "Number of Items X", "num_items_x"),
            (format!("${y}"), "Cost per Item Y", "cost_per_item_y"),
            (
                format!("{z} {extras}"),
                "Number of Extras Z",
                "num_extras_z",
            ),
            (format!("{w}"), "Total Spent W", "total_spent_w"),
        ];
        let maps: Vec<Mapping> = owned
            .iter()
            .map(|(o, l, n)| Mapping {
                original: o,
                label: l,
                name: n,
                kind: "int",
            })
            .collect();
        let abs = format!("{name} bought Number of Items X for Cost per Item Y each and Number of Extras Z. The total spent was Total Spent W dollars. How much did each of the {extras} cost?");
        let kc = format!("{name} bought {x} {items} for ${y} each.\n{name} bought {z} {extras}.\n{name} spent {w} dollars in total.");
        vec![
            instance(TaskId::Abs, &[("q", &q)], abstraction_target(&maps, &abs, &format!("num_items_x={x}, cost_per_item_y={y}, num_extras_z={z}, total_spent_w={w}")), &id, true),
            instance(TaskId::Aq2p, &[("aq", &annotate(&abs, &maps))], SHOPPING_PROGRAM.into(), &id, true),
            instance(TaskId::MathQ2kc, &[("q", &q)], kc.clone(), &id, true),
            instance(TaskId::MathQ2nq, &[("q", &q), ("c", &kc)], format!("How much did the {x} {items} cost in total?"), &id, true),
            instance(
                TaskId::Qa2s,
                &[("q", &format!("{name} bought {x} {items} for ${y} each. How much did the {items} cost in total?")), ("a", &(x * y).to_string())],
                format!("The {items} cost {} dollars in total.", x * y),
                &id,
                true,
            ),
        ]
    } else {
        let x = 20 + (i * 3) % 15;
        let y = 5 + i % 10;
        let z = 2 + i % 6;
        let start = 10 + (i * 11) % 40;
        let w = start + (x - y) * z;
        let good = BAKED[(j / NAMES.len()) % BAKED.len()];
        let q = format!("A bakery run by {name} makes {x} {good} per day and sells {y} {good} per day. After {z} days there are {w} {good} in stock. How many {good} were in stock at first?");
        let owned = [
            (
                format!("{x} {good} per day"),
                "Made per Day X",
                "made_per_day_x",
            ),
            (
                format!("{y} {good} per day"),
                "Sold per Day Y",
                "sold_per_day_y",
            ),
            (format!("{z} days"), "Number of Days Z", "num_days_z"),
            (format!("{w} {good}"), "Final Stock W", "final_stock_w"),
        ];
        let maps: Vec<Mapping> = owned
            .iter()
            .map(|(o, l, n)| Mapping {
                original: o,
                label: l,
                name: n,
                kind: "int",
            })
            .collect();
        let abs = format!("A bakery run by {name} makes Made per Day X and sells Sold per Day Y. After Number of Days Z there are Final Stock W in stock. How many {good} were in stock at first?");
        let kc = format!("The bakery makes {x} {good} per day.\nThe bakery sells {y} {good} per day.\nThere are {w} {good} in stock after {z} days.");
        let full = format!("{kc}\nThe stock grows by {} {good} every day.\nThe stock grew by {} {good} over {z} days.\nThere were {start} {good} in stock at first.", x - y, (x - y) * z);
        let next = if i.is_multiple_of(3) {
            instance(
                TaskId::MathQ2nq,
                &[("q", &q), ("c", &full)],
                "No more decomposition.".into(),
                &id,
                true,
            )
        } else {
            instance(
                TaskId::MathQ2nq,
                &[("q", &q), ("c", &kc)],
                format!("By how many {good} does the stock grow each day?"),
                &id,
                true,
            )
        };
        vec![
            instance(TaskId::Abs, &[("q", &q)], abstraction_target(&maps, &abs, &format!("made_per_day_x={x}, sold_per_day_y={y}, num_days_z={z}, final_stock_w={w}")), &id, true),
            instance(TaskId::Aq2p, &[("aq", &annotate(&abs, &maps))], BAKERY_PROGRAM.into(), &id, true),
            instance(TaskId::MathQ2kc, &[("q", &q)], kc, &id, true),
            next,
            instance(
                TaskId::Qa2s,
                &[("q", &format!("A bakery run by {name} makes {x} {good} per day and sells {y} {good} per day. By how many {good} does the stock grow each day?")), ("a", &(x - y).to_string())],
                format!("The stock grows by {} {good} every day.", x - y),
                &id,
                true,
            ),
        ]
    }
}

/// Builds the full seed mix: the reference instances first, then synthetic
/// stand-ins up to [`SEED_BINARY_COUNT`] binary and [`SEED_MATH_COUNT`] math
/// instances. Fully deterministic.
pub fn generate_seed() -> Vec<SupervisionInstance> {
    let reference = reference_seed();
    let math_needed = SEED_MATH_COUNT - reference.len();
    let mut math = Vec::new();
    let mut i = 0;
    while math.len() < math_needed {
        math.extend(math_instances(i));
        i += 1;
    }
    math.truncate(math_needed);
    let mut binary = binary_pool();
    binary.truncate(SEED_BINARY_COUNT);
    reference.into_iter().chain(binary).chain(math).collect()
}
