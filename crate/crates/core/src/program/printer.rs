//! Canonical source rendering. Nested compound expressions are fully
//! parenthesized so that printing and re-parsing yields the same tree.

use super::ast::*;
use super::value::{format_number, Value};

pub fn print_program(ast: &ProgramAst) -> String {
    let mut out = String::new();
    for (i, f) in ast.functions.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_function(f, &mut out);
    }
    if let Some(inv) = &ast.invocation {
        out.push('\n');
        out.push_str(&print_invocation(inv));
        out.push('\n');
    }
    out
}

pub fn print_function(f: &FunctionDef, out: &mut String) {
    let params = f
        .params
        .iter()
        .map(|p| match p.kind {
            Some(k) => format!("{}: {}", p.name, k.type_name()),
            None => p.name.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ");
    out.push_str(&format!("def {}({params})", f.name));
    if let Some(r) = f.returns {
        out.push_str(&format!(" -> {}", r.type_name()));
    }
    out.push_str(":\n");
    print_block(&f.body, 1, out);
}

pub fn print_invocation(inv: &Invocation) -> String {
    let args = inv
        .args
        .iter()
        .map(|a| match &a.name {
            Some(n) => format!("{n}={}", literal(&a.value)),
            None => literal(&a.value),
        })
        .collect::<Vec<_>>()
        .join(", ");
    if inv.printed {
        format!("print({ENTRY}({args}))")
    } else {
        format!("{ENTRY}({args})")
    }
}

fn print_block(body: &[Stmt], depth: usize, out: &mut String) {
    let pad = "    ".repeat(depth);
    for stmt in body {
        match stmt {
            Stmt::Assign {
                target,
                annotation,
                value,
            } => {
                out.push_str(&pad);
                out.push_str(target);
                if let Some(k) = annotation {
                    out.push_str(": ");
                    out.push_str(k.type_name());
                }
                out.push_str(" = ");
                out.push_str(&expr(value));
                out.push('\n');
            }
            Stmt::AugAssign { target, op, value } => {
                out.push_str(&format!("{pad}{target} {}= {}\n", op.symbol(), expr(value)));
            }
            Stmt::If { branches, orelse } => {
                for (i, (cond, block)) in branches.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "elif" };
                    out.push_str(&format!("{pad}{kw} {}:\n", expr(cond)));
                    print_block(block, depth + 1, out);
                }
                if let Some(block) = orelse {
                    out.push_str(&format!("{pad}else:\n"));
                    print_block(block, depth + 1, out);
                }
            }
            Stmt::Return(e) => out.push_str(&format!("{pad}return {}\n", expr(e))),
            Stmt::Expr(e) => out.push_str(&format!("{pad}{}\n", expr(e))),
            Stmt::Pass => out.push_str(&format!("{pad}pass\n")),
        }
    }
}

/// Renders a literal value as source.
pub fn literal(v: &Value) -> String {
    match v {
        Value::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Value::Number(n) => number(*n),
        Value::Text(s) => quote(s, '"'),
    }
}

fn number(n: f64) -> String {
    format_number(n)
}

fn quote(s: &str, q: char) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push(q);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c == q => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(q);
    out
}

pub fn expr(e: &Expr) -> String {
    render(e, '"')
}

fn is_atomic(e: &Expr) -> bool {
    match e {
        Expr::Number(n) => *n >= 0.0 && !(n.is_sign_negative()),
        Expr::Text(_)
        | Expr::Bool(_)
        | Expr::Name(_)
        | Expr::FString(_)
        | Expr::Call { .. }
        | Expr::Method { .. } => true,
        _ => false,
    }
}

fn sub(e: &Expr, q: char) -> String {
    if is_atomic(e) {
        render(e, q)
    } else {
        format!("({})", render(e, q))
    }
}

fn render(e: &Expr, q: char) -> String {
    match e {
        Expr::Number(n) => number(*n),
        Expr::Text(s) => quote(s, q),
        Expr::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        Expr::Name(n) => n.clone(),
        Expr::FString(parts) => {
            let inner_q = if q == '"' { '\'' } else { '"' };
            let mut out = format!("f{q}");
            for part in parts {
                match part {
                    FStringPart::Literal(s) => {
                        for c in s.chars() {
                            match c {
                                '{' => out.push_str("{{"),
                                '}' => out.push_str("}}"),
                                '\\' => out.push_str("\\\\"),
                                '\n' => out.push_str("\\n"),
                                c if c == q => {
                                    out.push('\\');
                                    out.push(c);
                                }
                                c => out.push(c),
                            }
                        }
                    }
                    FStringPart::Expr { expr, spec } => {
                        out.push('{');
                        out.push_str(&render(expr, inner_q));
                        if let Some(spec) = spec {
                            out.push(':');
                            out.push_str(spec);
                        }
                        out.push('}');
                    }
                }
            }
            out.push(q);
            out
        }
        Expr::Unary(op, inner) => match op {
            UnaryOp::Neg => format!("-{}", sub(inner, q)),
            UnaryOp::Pos => format!("+{}", sub(inner, q)),
            UnaryOp::Not => format!("not {}", sub(inner, q)),
        },
        Expr::Binary(op, a, b) => format!("{} {} {}", sub(a, q), op.symbol(), sub(b, q)),
        Expr::Logic(op, a, b) => {
            let kw = match op {
                LogicOp::And => "and",
                LogicOp::Or => "or",
            };
            format!("{} {kw} {}", sub(a, q), sub(b, q))
        }
        Expr::Compare(first, rest) => {
            let mut out = sub(first, q);
            for (op, e) in rest {
                out.push_str(&format!(" {} {}", op.symbol(), sub(e, q)));
            }
            out
        }
        Expr::Ternary { cond, then, orelse } => {
            format!(
                "{} if {} else {}",
                sub(then, q),
                sub(cond, q),
                sub(orelse, q)
            )
        }
        Expr::Call { func, args } => {
            let args = args
                .iter()
                .map(|a| render(a, q))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{func}({args})")
        }
        Expr::Method {
            receiver,
            method,
            args,
        } => {
            let args = args
                .iter()
                .map(|a| render(a, q))
                .collect::<Vec<_>>()
                .join(", ");
            format!("{}.{method}({args})", sub(receiver, q))
        }
    }
}
