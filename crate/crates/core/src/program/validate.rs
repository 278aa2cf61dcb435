use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::ast::{walk_block, Expr, ProgramAst, Stmt, ENTRY};
use super::parse_program;

/// Static facts about a program used by the soundness and complexity checks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub unused_params: Vec<String>,
    pub oracle_call_count: usize,
    pub parse_ok: bool,
    pub issues: Vec<String>,
}

impl ValidationReport {
    pub fn parse_failure(message: impl Into<String>) -> Self {
        Self {
            unused_params: Vec::new(),
            oracle_call_count: 0,
            parse_ok: false,
            issues: vec![message.into()],
        }
    }
}

fn names_read(body: &[Stmt]) -> HashSet<&str> {
    let mut read = HashSet::new();
    walk_block(body, &mut |e| {
        if let Expr::Name(n) = e {
            read.insert(n.as_str());
        }
    });
    fn aug_targets<'a>(body: &'a [Stmt], read: &mut HashSet<&'a str>) {
        for s in body {
            match s {
                Stmt::AugAssign { target, .. } => {
                    read.insert(target.as_str());
                }
                Stmt::If { branches, orelse } => {
                    for (_, b) in branches {
                        aug_targets(b, read);
                    }
                    if let Some(b) = orelse {
                        aug_targets(b, read);
                    }
                }
                _ => {}
            }
        }
    }
    aug_targets(body, &mut read);
    read
}

pub fn validate_program(ast: &ProgramAst) -> ValidationReport {
    let entry = ast.entry();
    let read = names_read(&entry.body);
    let unused_params = entry
        .params
        .iter()
        .filter(|p| !read.contains(p.name.as_str()))
        .map(|p| p.name.clone())
        .collect();

    let mut oracle_call_count = 0;
    for f in &ast.functions {
        walk_block(&f.body, &mut |e| {
            if e.is_oracle_call() {
                oracle_call_count += 1;
            }
        });
    }

    let mut issues = Vec::new();
    for p in &entry.params {
        if p.kind.is_none() {
            issues.push(format!("parameter `{}` has no type annotation", p.name));
        }
    }
    for f in &ast.functions {
        walk_block(&f.body, &mut |e| match e {
            Expr::Call { func, args } if e.is_oracle_call() => {
                if args.len() != 2 {
                    issues.push(format!(
                        "`{func}` expects (query, type), got {} arguments",
                        args.len()
                    ));
                }
            }
            Expr::Call { func, args } => {
                if let Some(callee) = ast.function(func) {
                    if callee.params.len() != args.len() {
                        issues.push(format!(
                            "`{func}` takes {} arguments but is called with {}",
                            callee.params.len(),
                            args.len()
                        ));
                    }
                }
            }
            _ => {}
        });
    }
    if let Some(inv) = &ast.invocation {
        if inv.args.len() != entry.params.len() {
            issues.push(format!(
                "`{ENTRY}` takes {} arguments but the invocation passes {}",
                entry.params.len(),
                inv.args.len()
            ));
        }
    }

    ValidationReport {
        unused_params,
        oracle_call_count,
        parse_ok: true,
        issues,
    }
}

/// Parses and validates in one step; parse failures yield `parse_ok = false`.
pub fn validate_source(source: &str) -> ValidationReport {
    match parse_program(source) {
        Ok(ast) => validate_program(&ast),
        Err(e) => ValidationReport::parse_failure(e.to_string()),
    }
}
