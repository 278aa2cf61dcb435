use serde::Serialize;

use super::value::{ReturnKind, Value, ValueKind};

/// Name of the entry function every program must define.
pub const ENTRY: &str = "answer";

/// Host functions that query the knowledge oracle.
pub const ORACLE_FUNCTIONS: &[&str] = &["ask_llm", "ask_gpt"];

/// Every name a program may call without defining it.
pub const HOST_FUNCTIONS: &[&str] = &[
    "ask_llm", "ask_gpt", "abs", "min", "max", "round", "int", "float", "str", "bool", "len",
    "print",
];

pub fn is_host_name(name: &str) -> bool {
    HOST_FUNCTIONS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Param {
    pub name: String,
    /// `None` for unannotated parameters; those accept any value kind.
    pub kind: Option<ValueKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    /// Annotated return type name (`int`, `float`, `bool`), if any.
    pub returns: Option<ValueKind>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Stmt {
    Assign {
        target: String,
        annotation: Option<ValueKind>,
        value: Expr,
    },
    AugAssign {
        target: String,
        op: BinOp,
        value: Expr,
    },
    If {
        branches: Vec<(Expr, Vec<Stmt>)>,
        orelse: Option<Vec<Stmt>>,
    },
    Return(Expr),
    Expr(Expr),
    Pass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LogicOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FStringPart {
    Literal(String),
    Expr { expr: Expr, spec: Option<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Expr {
    Number(f64),
    Text(String),
    Bool(bool),
    FString(Vec<FStringPart>),
    Name(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Logic(LogicOp, Box<Expr>, Box<Expr>),
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    Ternary {
        cond: Box<Expr>,
        then: Box<Expr>,
        orelse: Box<Expr>,
    },
    Call {
        func: String,
        args: Vec<Expr>,
    },
    Method {
        receiver: Box<Expr>,
        method: String,
        args: Vec<Expr>,
    },
}

impl Expr {
    /// Visits this expression and every sub-expression, pre-order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Number(_) | Expr::Text(_) | Expr::Bool(_) | Expr::Name(_) => {}
            Expr::FString(parts) => {
                for part in parts {
                    if let FStringPart::Expr { expr, .. } = part {
                        expr.walk(f);
                    }
                }
            }
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, a, b) | Expr::Logic(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Expr::Compare(first, rest) => {
                first.walk(f);
                for (_, e) in rest {
                    e.walk(f);
                }
            }
            Expr::Ternary { cond, then, orelse } => {
                cond.walk(f);
                then.walk(f);
                orelse.walk(f);
            }
            Expr::Call { args, .. } => {
                for a in args {
                    a.walk(f);
                }
            }
            Expr::Method { receiver, args, .. } => {
                receiver.walk(f);
                for a in args {
                    a.walk(f);
                }
            }
        }
    }

    pub fn is_oracle_call(&self) -> bool {
        matches!(self, Expr::Call { func, .. } if ORACLE_FUNCTIONS.contains(&func.as_str()))
    }

    /// Conservative static test for expressions that always produce a boolean.
    pub fn is_statically_boolean(&self) -> bool {
        match self {
            Expr::Bool(_) | Expr::Compare(..) | Expr::Unary(UnaryOp::Not, _) => true,
            Expr::Logic(_, a, b) => a.is_statically_boolean() && b.is_statically_boolean(),
            Expr::Ternary { then, orelse, .. } => {
                then.is_statically_boolean() && orelse.is_statically_boolean()
            }
            Expr::Call { func, args } if ORACLE_FUNCTIONS.contains(&func.as_str()) => {
                matches!(args.get(1), Some(Expr::Name(t)) if t == "bool")
            }
            Expr::Call { func, .. } => func == "bool",
            _ => false,
        }
    }
}

/// Visits every expression in a statement list, including nested blocks.
pub fn walk_block<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Expr)) {
    for stmt in body {
        match stmt {
            Stmt::Assign { value, .. } | Stmt::AugAssign { value, .. } => value.walk(f),
            Stmt::Return(e) | Stmt::Expr(e) => e.walk(f),
            Stmt::If { branches, orelse } => {
                for (cond, block) in branches {
                    cond.walk(f);
                    walk_block(block, f);
                }
                if let Some(block) = orelse {
                    walk_block(block, f);
                }
            }
            Stmt::Pass => {}
        }
    }
}

fn collect_returns<'a>(body: &'a [Stmt], out: &mut Vec<&'a Expr>) {
    for stmt in body {
        match stmt {
            Stmt::Return(e) => out.push(e),
            Stmt::If { branches, orelse } => {
                for (_, block) in branches {
                    collect_returns(block, out);
                }
                if let Some(block) = orelse {
                    collect_returns(block, out);
                }
            }
            _ => {}
        }
    }
}

/// One concrete argument of the trailing `answer(...)` invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CallArg {
    pub name: Option<String>,
    pub value: Value,
}

/// A module-level `answer(...)` or `print(answer(...))` line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invocation {
    pub args: Vec<CallArg>,
    pub printed: bool,
}

/// A parsed program. Equality is structural and ignores the source text.
#[derive(Debug, Clone, Serialize)]
pub struct ProgramAst {
    pub source_text: String,
    pub functions: Vec<FunctionDef>,
    pub invocation: Option<Invocation>,
    /// 1-based inclusive line range of the trailing invocation in `source_text`.
    #[serde(skip)]
    pub(crate) invocation_lines: Option<(usize, usize)>,
}

impl PartialEq for ProgramAst {
    fn eq(&self, other: &Self) -> bool {
        self.functions == other.functions && self.invocation == other.invocation
    }
}

impl ProgramAst {
    pub fn entry(&self) -> &FunctionDef {
        self.function(ENTRY)
            .expect("parser guarantees an entry function")
    }

    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn entry_params(&self) -> &[Param] {
        &self.entry().params
    }

    pub fn return_kind(&self) -> ReturnKind {
        let entry = self.entry();
        match entry.returns {
            Some(ValueKind::Boolean) => ReturnKind::Boolean,
            Some(_) => ReturnKind::Number,
            None => {
                let mut returns = Vec::new();
                collect_returns(&entry.body, &mut returns);
                if returns.iter().any(|e| e.is_statically_boolean()) {
                    ReturnKind::Boolean
                } else {
                    ReturnKind::Number
                }
            }
        }
    }

    /// String-literal queries passed to oracle calls, in source order.
    pub fn static_queries(&self) -> Vec<String> {
        let mut out = Vec::new();
        for func in &self.functions {
            walk_block(&func.body, &mut |e| {
                if let Expr::Call { args, .. } = e {
                    if e.is_oracle_call() {
                        if let Some(Expr::Text(q)) = args.first() {
                            out.push(q.clone());
                        }
                    }
                }
            });
        }
        out
    }
}
