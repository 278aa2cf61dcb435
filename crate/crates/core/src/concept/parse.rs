//! Reading abstraction and similar-question completions.

use std::sync::LazyLock;

use regex::Regex;

use super::AbstractQuestion;
use crate::binding::parse_assignments;
use crate::program::{ParameterBinding, ValueKind};

static BECOMES: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)so\s+the\s+question\s+becomes\s*:?\s*").expect("valid regex")
});
static WITH_PARAMETERS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bwith\s+parameters?\s*:?\s*").expect("valid regex"));
static MAPPING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""([^"]+)"\s+to\s+"([^"]+)"\s*\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(int|float|str|bool)\s*\)"#)
        .expect("valid regex")
});
static ANNOTATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\(\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(int|float|str|bool)\s*\)")
        .expect("valid regex")
});
static NUMBERING: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)^\s*(?:(?:question|q)\s*\d*\s*[:.)]|\d+\s*[.):]|[-*\u{2022}])\s*")
        .expect("valid regex")
});

fn split_parameters(text: &str) -> (&str, Option<&str>) {
    match WITH_PARAMETERS.find_iter(text).last() {
        Some(m) => (&text[..m.start()], Some(&text[m.end()..])),
        None => (text, None),
    }
}

/// Parses an abstraction completion: optional mapping clauses
/// `"12 inches" to "Number of Inches X" (num_inches_x: int)`, then
/// `So the question becomes <text>`, then `With parameters a=1, ...`.
/// Labels named by mapping clauses are annotated in the text so that every
/// placeholder carries its `(name: kind)` declaration.
pub fn parse_abstraction(
    output: &str,
    source_question_id: &str,
) -> Result<AbstractQuestion, String> {
    let (preamble, body) = match BECOMES.find_iter(output).last() {
        Some(m) => (&output[..m.start()], &output[m.end()..]),
        None => ("", output),
    };
    let (text, params_text) = split_parameters(body);
    let mut text = text.trim().to_string();
    if text.is_empty() {
        return Err("abstraction has no question text".into());
    }

    for cap in MAPPING.captures_iter(preamble) {
        let (label, name, kind) = (&cap[2], &cap[3], &cap[4]);
        let annotated = format!("{label} ({name}: {kind})");
        if text.contains(&annotated) {
            continue;
        }
        if let Some(pos) = text.find(label) {
            text.replace_range(pos..pos + label.len(), &annotated);
        }
    }

    let mut parameters: Vec<(String, ValueKind)> = Vec::new();
    for cap in ANNOTATION.captures_iter(&text) {
        let kind = ValueKind::from_type_name(&cap[2]).expect("regex restricts kinds");
        if let Some((_, existing)) = parameters.iter().find(|(n, _)| n == &cap[1]) {
            if *existing != kind {
                return Err(format!("parameter `{}` declared with two kinds", &cap[1]));
            }
            continue;
        }
        parameters.push((cap[1].to_string(), kind));
    }
    if parameters.is_empty() {
        return Err("abstraction declares no parameters".into());
    }

    let raw = params_text
        .map(|p| parse_assignments(p.lines().next().unwrap_or("")))
        .unwrap_or_default();
    let mut binding = ParameterBinding::new();
    for (name, _) in &parameters {
        if let Some(v) = raw.get(name) {
            binding.insert(name.clone(), v.clone());
        }
    }
    Ok(AbstractQuestion {
        text,
        parameters,
        source_question_id: source_question_id.to_string(),
        binding,
    })
}

/// Parses a similar-question list: one question per line, numbering and
/// bullets removed, optional `With parameters` suffix, exact duplicates
/// dropped, at most `n` kept.
pub fn parse_similars(output: &str, n: usize) -> Vec<(String, Option<ParameterBinding>)> {
    let mut out: Vec<(String, Option<ParameterBinding>)> = Vec::new();
    for line in output.lines() {
        let line = NUMBERING.replace(line, "");
        let (text, params) = split_parameters(&line);
        let text = text.trim().trim_end_matches(',').trim();
        if text.is_empty() || text.ends_with(':') {
            continue;
        }
        if out.iter().any(|(t, _)| t == text) {
            continue;
        }
        let binding = params.map(parse_assignments).filter(|b| !b.is_empty());
        out.push((text.to_string(), binding));
        if out.len() == n {
            break;
        }
    }
    out
}
