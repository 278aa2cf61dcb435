use super::ast::ProgramAst;

/// Returns the program source with the trailing concrete `answer(...)`
/// invocation removed. Idempotent.
pub fn strip_answer_call(ast: &ProgramAst) -> String {
    let Some((start, end)) = ast.invocation_lines else {
        return ast.source_text.clone();
    };
    let kept: Vec<&str> = ast
        .source_text
        .lines()
        .enumerate()
        .filter(|(i, _)| {
            let line = i + 1;
            line < start || line > end
        })
        .map(|(_, l)| l)
        .collect();
    let mut out = kept.join("\n").trim_end().to_string();
    out.push('\n');
    out
}

fn starts_code_line(line: &str) -> bool {
    let t = line.trim_start();
    line.starts_with(char::is_whitespace)
        || t.starts_with("def ")
        || t.starts_with("answer(")
        || t.starts_with("print(")
        || t.starts_with('#')
        || t.starts_with('@')
}

/// Pulls program source out of a model completion: the first fenced code
/// block when present, otherwise the lines from the first `def` up to the
/// first unindented prose line.
pub fn extract_program_source(completion: &str) -> String {
    if let Some(open) = completion.find("```") {
        let after = &completion[open + 3..];
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(after.len());
        let body = &after[body_start..];
        let body = match body.find("```") {
            Some(close) => &body[..close],
            None => body,
        };
        return body.trim_matches('\n').to_string() + "\n";
    }
    let lines: Vec<&str> = completion.lines().collect();
    let Some(first) = lines
        .iter()
        .position(|l| l.trim_start().starts_with("def "))
    else {
        return completion.trim().to_string();
    };
    let mut out = Vec::new();
    for line in &lines[first..] {
        if !line.trim().is_empty() && !starts_code_line(line) {
            break;
        }
        out.push(*line);
    }
    out.join("\n").trim_end().to_string() + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{fixtures::CANDY_BAR, parse_program};

    #[test]
    fn trailer_is_removed() {
        let src = format!("{CANDY_BAR}\nanswer(2, 4, 5, 28)\n");
        let ast = parse_program(&src).unwrap();
        let stripped = strip_answer_call(&ast);
        assert_eq!(stripped, CANDY_BAR);
        let again = strip_answer_call(&parse_program(&stripped).unwrap());
        assert_eq!(again, stripped);
    }

    #[test]
    fn no_trailer_is_unchanged() {
        let ast = parse_program(CANDY_BAR).unwrap();
        assert_eq!(strip_answer_call(&ast), CANDY_BAR);
    }

    #[test]
    fn fenced_and_prose_wrapped_completions() {
        let fenced = "Here you go:\n```python\ndef answer() -> bool:\n    return True\n```\nDone.";
        assert_eq!(
            extract_program_source(fenced),
            "def answer() -> bool:\n    return True\n"
        );
        let prose =
            "Sure.\ndef answer() -> bool:\n    return True\n\nanswer()\nWith parameters none";
        assert_eq!(
            extract_program_source(prose),
            "def answer() -> bool:\n    return True\n\nanswer()\n"
        );
    }
}
