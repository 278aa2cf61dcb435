//! Recovering parameter bindings from program invocations and
//! `With parameters a=1, b="x"` text.

use std::sync::LazyLock;

use regex::Regex;

use crate::program::{format_number, ParameterBinding, ProgramAst, Value, ValueKind};

static KEY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"([A-Za-z_][A-Za-z0-9_]*)\s*=\s*").expect("valid regex"));
static WITH_PARAMETERS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)with\s+parameters?\s*:?\s*").expect("valid regex"));

/// Reads one literal: quoted text, `True`/`False`, a number, or bare text.
pub fn parse_literal(raw: &str) -> Value {
    let t = raw.trim();
    let quoted = t.len() >= 2
        && ((t.starts_with('"') && t.ends_with('"')) || (t.starts_with('\'') && t.ends_with('\'')));
    if quoted {
        return Value::Text(t[1..t.len() - 1].to_string());
    }
    match t {
        "True" | "true" => return Value::Bool(true),
        "False" | "false" => return Value::Bool(false),
        _ => {}
    }
    let numeric = t.trim_start_matches('$').replace(',', "");
    match numeric.parse::<f64>() {
        Ok(n) if n.is_finite() => Value::Number(n),
        _ => Value::Text(t.to_string()),
    }
}

/// Parses `a=12, b="x y", c=True` into a binding. Values run up to the
/// next `name=` key, so bare text may contain commas.
pub fn parse_assignments(list: &str) -> ParameterBinding {
    let keys: Vec<_> = KEY
        .captures_iter(list)
        .map(|c| (c.get(0).expect("match"), c[1].to_string()))
        .collect();
    let mut binding = ParameterBinding::new();
    for (i, (m, name)) in keys.iter().enumerate() {
        let end = keys.get(i + 1).map_or(list.len(), |(next, _)| next.start());
        let mut raw = list[m.end()..end].trim().trim_end_matches(',').trim();
        if !(raw.starts_with('"') || raw.starts_with('\'')) {
            raw = raw.trim_end_matches('.');
        }
        if raw.is_empty() {
            continue;
        }
        binding.insert(name.clone(), parse_literal(raw));
    }
    binding
}

/// Finds a `With parameters ...` list and parses its first line.
pub fn parse_with_parameters(text: &str) -> Option<ParameterBinding> {
    let m = WITH_PARAMETERS.find_iter(text).last()?;
    let rest = text[m.end()..].lines().next().unwrap_or("");
    let b = parse_assignments(rest);
    (!b.is_empty()).then_some(b)
}

/// Binding implied by the program's own trailing `answer(...)` call.
pub fn from_invocation(ast: &ProgramAst) -> Option<ParameterBinding> {
    let inv = ast.invocation.as_ref()?;
    let params = ast.entry_params();
    let mut b = ParameterBinding::new();
    for (i, arg) in inv.args.iter().enumerate() {
        let name = match &arg.name {
            Some(n) => n.clone(),
            None => params.get(i)?.name.clone(),
        };
        b.insert(name, arg.value.clone());
    }
    Some(b)
}

fn fit_value(v: &Value, kind: Option<ValueKind>) -> Option<Value> {
    let Some(kind) = kind else {
        return Some(v.clone());
    };
    if v.fits(kind) {
        return Some(v.clone());
    }
    match (kind, v) {
        (ValueKind::Integer | ValueKind::Decimal, Value::Text(s)) => match parse_literal(s) {
            Value::Number(n) if kind == ValueKind::Decimal || n.fract() == 0.0 => {
                Some(Value::Number(n))
            }
            _ => None,
        },
        (ValueKind::Text, Value::Number(n)) => Some(Value::Text(format_number(*n))),
        _ => None,
    }
}

/// Restricts `raw` to the entry parameters of `ast`, coercing values whose
/// kind is recoverable. Fails naming the first unmatched parameter.
pub fn fit_binding(ast: &ProgramAst, raw: &ParameterBinding) -> Result<ParameterBinding, String> {
    let mut out = ParameterBinding::new();
    for p in ast.entry_params() {
        let v = raw
            .get(&p.name)
            .ok_or_else(|| format!("no value for parameter `{}`", p.name))?;
        let fitted = fit_value(v, p.kind).ok_or_else(|| {
            format!(
                "value {v:?} does not fit parameter `{}: {}`",
                p.name,
                p.kind.map_or("any", |k| k.type_name())
            )
        })?;
        out.insert(p.name.clone(), fitted);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{fixtures::CANDY_BAR, parse_program};

    #[test]
    fn assignments_with_mixed_literals() {
        let b = parse_assignments(r#"a=12, b="x, y", c=True, d=the Sahara desert, e=1,085."#);
        assert_eq!(b.get("a"), Some(&Value::Number(12.0)));
        assert_eq!(b.get("b"), Some(&Value::Text("x, y".into())));
        assert_eq!(b.get("c"), Some(&Value::Bool(true)));
        assert_eq!(b.get("d"), Some(&Value::Text("the Sahara desert".into())));
        assert_eq!(b.get("e"), Some(&Value::Number(1085.0)));
    }

    #[test]
    fn with_parameters_line() {
        let text =
            "So the question becomes ... With parameters num_inches_x=12, num_pages_y=80\nmore";
        let b = parse_with_parameters(text).unwrap();
        assert_eq!(b.len(), 2);
        assert!(parse_with_parameters("nothing here").is_none());
    }

    #[test]
    fn invocation_positional_and_keyword() {
        let src = format!("{CANDY_BAR}\nanswer(2, 4, num_candy_bars_z=5, total_spent_w=28)\n");
        let b = from_invocation(&parse_program(&src).unwrap()).unwrap();
        assert_eq!(b.get("num_soft_drinks_x"), Some(&Value::Number(2.0)));
        assert_eq!(b.get("total_spent_w"), Some(&Value::Number(28.0)));
    }

    #[test]
    fn fitting_restricts_and_coerces() {
        let ast = parse_program(CANDY_BAR).unwrap();
        let raw = parse_assignments("num_soft_drinks_x=2, cost_per_soft_drink_y=\"4\", num_candy_bars_z=5, total_spent_w=28, extra=1");
        let b = fit_binding(&ast, &raw).unwrap();
        assert_eq!(b.len(), 4);
        assert_eq!(b.get("cost_per_soft_drink_y"), Some(&Value::Number(4.0)));
        let missing = parse_assignments("num_soft_drinks_x=2");
        assert!(fit_binding(&ast, &missing)
            .unwrap_err()
            .contains("cost_per_soft_drink_y"));
    }
}
