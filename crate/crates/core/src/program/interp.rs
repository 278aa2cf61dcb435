//! Tree-walking interpreter with step, oracle-call and wall-clock budgets.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::ast::*;
use super::value::{format_number, ParameterBinding, Value, ValueKind};

/// Budget for one execution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Limits {
    pub max_steps: u64,
    pub max_oracle_calls: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeout: Option<Duration>,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_steps: 10_000,
            max_oracle_calls: 20,
            timeout: None,
        }
    }
}

const MAX_CALL_DEPTH: usize = 64;

/// Reply from the knowledge host for one `ask_llm` call.
#[derive(Debug, Clone, PartialEq)]
pub struct HostReply {
    /// Query as actually sent, including any appended unit instruction.
    pub sent_query: String,
    pub unit: Option<String>,
    /// `None` when the oracle answered "unknown".
    pub value: Option<Value>,
}

/// The knowledge source behind `ask_llm`. Implementations must tolerate
/// concurrent callers.
pub trait AskHost: Sync {
    fn ask(&self, query: &str, kind: ValueKind) -> Result<HostReply, String>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "lowercase")]
pub enum CallResult {
    Value(Value),
    Unknown,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCall {
    pub query: String,
    pub sent_query: String,
    pub expected_kind: ValueKind,
    pub unit: Option<String>,
    pub result: CallResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Value,
    Unknown,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error_message: Option<String>,
    pub oracle_trace: Vec<OracleCall>,
}

impl ExecutionOutcome {
    pub fn error(message: impl Into<String>) -> Self {
        Self {
            status: Status::Error,
            value: None,
            error_message: Some(message.into()),
            oracle_trace: Vec::new(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.status == Status::Error
    }

    /// Raw (pre-unit) query strings, in call order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.oracle_trace.iter().map(|c| c.query.as_str())
    }
}

enum Halt {
    Error(String),
    Unknown,
}

type Eval<T> = Result<T, Halt>;

fn fail<T>(msg: impl Into<String>) -> Eval<T> {
    Err(Halt::Error(msg.into()))
}

/// Checks that `binding` supplies exactly the entry parameters with matching kinds.
pub fn check_binding(ast: &ProgramAst, binding: &ParameterBinding) -> Result<(), String> {
    let params = ast.entry_params();
    for p in params {
        match binding.get(&p.name) {
            None => return Err(format!("missing value for parameter `{}`", p.name)),
            Some(v) => {
                if let Some(kind) = p.kind {
                    if !v.fits(kind) {
                        return Err(format!(
                            "parameter `{}` expects {} but got {v:?}",
                            p.name,
                            kind.type_name()
                        ));
                    }
                }
            }
        }
    }
    if let Some(extra) = binding
        .names()
        .find(|n| !params.iter().any(|p| p.name == *n))
    {
        return Err(format!("binding has no parameter named `{extra}`"));
    }
    Ok(())
}

/// Runs `answer` with the given binding. Never panics on program behavior;
/// every failure is reported through the outcome status.
pub fn execute_program(
    ast: &ProgramAst,
    binding: &ParameterBinding,
    host: &dyn AskHost,
    limits: &Limits,
) -> ExecutionOutcome {
    if let Err(e) = check_binding(ast, binding) {
        return ExecutionOutcome::error(e);
    }
    let mut m = Machine {
        ast,
        host,
        limits,
        steps: 0,
        depth: 0,
        started: Instant::now(),
        trace: Vec::new(),
    };
    let entry = ast.entry();
    let args = entry
        .params
        .iter()
        .map(|p| binding.get(&p.name).cloned().expect("checked"))
        .collect();
    let result = m.call(entry, args);
    let trace = std::mem::take(&mut m.trace);
    match result {
        Ok(v) => {
            let kind = ast.return_kind();
            if kind.accepts(&v) {
                ExecutionOutcome {
                    status: Status::Value,
                    value: Some(v),
                    error_message: None,
                    oracle_trace: trace,
                }
            } else {
                ExecutionOutcome {
                    status: Status::Error,
                    value: None,
                    error_message: Some(format!(
                        "answer() returned {} but must return {kind:?}",
                        v.kind_name()
                    )),
                    oracle_trace: trace,
                }
            }
        }
        Err(Halt::Unknown) => ExecutionOutcome {
            status: Status::Unknown,
            value: None,
            error_message: None,
            oracle_trace: trace,
        },
        Err(Halt::Error(msg)) => ExecutionOutcome {
            status: Status::Error,
            value: None,
            error_message: Some(msg),
            oracle_trace: trace,
        },
    }
}

struct Machine<'a> {
    ast: &'a ProgramAst,
    host: &'a dyn AskHost,
    limits: &'a Limits,
    steps: u64,
    depth: usize,
    started: Instant,
    trace: Vec<OracleCall>,
}

type Locals = HashMap<String, Value>;

impl<'a> Machine<'a> {
    fn step(&mut self) -> Eval<()> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return fail(format!(
                "step budget of {} exhausted",
                self.limits.max_steps
            ));
        }
        if let Some(t) = self.limits.timeout {
            if self.steps.is_multiple_of(64) && self.started.elapsed() > t {
                return fail("time budget exhausted");
            }
        }
        Ok(())
    }

    fn call(&mut self, f: &'a FunctionDef, args: Vec<Value>) -> Eval<Value> {
        if args.len() != f.params.len() {
            return fail(format!(
                "`{}` takes {} arguments but {} were given",
                f.name,
                f.params.len(),
                args.len()
            ));
        }
        if self.depth >= MAX_CALL_DEPTH {
            return fail("maximum call depth exceeded");
        }
        self.depth += 1;
        let mut locals: Locals = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let result = self.block(&f.body, &mut locals);
        self.depth -= 1;
        match result? {
            Some(v) => Ok(v),
            None => fail(format!("`{}` finished without returning a value", f.name)),
        }
    }

    fn block(&mut self, body: &'a [Stmt], locals: &mut Locals) -> Eval<Option<Value>> {
        for stmt in body {
            self.step()?;
            match stmt {
                Stmt::Assign { target, value, .. } => {
                    let v = self.eval(value, locals)?;
                    locals.insert(target.clone(), v);
                }
                Stmt::AugAssign { target, op, value } => {
                    let current = match locals.get(target) {
                        Some(v) => v.clone(),
                        None => return fail(format!("`{target}` used before assignment")),
                    };
                    let rhs = self.eval(value, locals)?;
                    let v = binary(*op, &current, &rhs)?;
                    locals.insert(target.clone(), v);
                }
                Stmt::If { branches, orelse } => {
                    let mut taken = None;
                    for (cond, block) in branches {
                        if self.eval(cond, locals)?.truthy() {
                            taken = Some(block);
                            break;
                        }
                    }
                    let chosen = taken.or(orelse.as_ref());
                    if let Some(block) = chosen {
                        if let Some(v) = self.block(block, locals)? {
                            return Ok(Some(v));
                        }
                    }
                }
                Stmt::Return(e) => return Ok(Some(self.eval(e, locals)?)),
                Stmt::Expr(e) => {
                    self.eval(e, locals)?;
                }
                Stmt::Pass => {}
            }
        }
        Ok(None)
    }

    fn eval(&mut self, e: &'a Expr, locals: &mut Locals) -> Eval<Value> {
        self.step()?;
        match e {
            Expr::Number(n) => Ok(Value::Number(*n)),
            Expr::Text(s) => Ok(Value::Text(s.clone())),
            Expr::Bool(b) => Ok(Value::Bool(*b)),
            Expr::Name(n) => match locals.get(n) {
                Some(v) => Ok(v.clone()),
                None if is_host_name(n) => fail(format!("`{n}` is a function, not a value")),
                None => fail(format!("`{n}` used before assignment")),
            },
            Expr::FString(parts) => {
                let mut out = String::new();
                for part in parts {
                    match part {
                        FStringPart::Literal(s) => out.push_str(s),
                        FStringPart::Expr { expr, spec } => {
                            let v = self.eval(expr, locals)?;
                            out.push_str(&apply_spec(&v, spec.as_deref()));
                        }
                    }
                }
                Ok(Value::Text(out))
            }
            Expr::Unary(op, inner) => {
                let v = self.eval(inner, locals)?;
                match op {
                    UnaryOp::Not => Ok(Value::Bool(!v.truthy())),
                    UnaryOp::Neg => match v.as_number() {
                        Some(n) => Ok(Value::Number(-n)),
                        None => fail("bad operand type for unary -: 'str'"),
                    },
                    UnaryOp::Pos => match v.as_number() {
                        Some(n) => Ok(Value::Number(n)),
                        None => fail("bad operand type for unary +: 'str'"),
                    },
                }
            }
            Expr::Binary(op, a, b) => {
                let a = self.eval(a, locals)?;
                let b = self.eval(b, locals)?;
                binary(*op, &a, &b)
            }
            Expr::Logic(op, a, b) => {
                let a = self.eval(a, locals)?;
                match (op, a.truthy()) {
                    (LogicOp::And, false) | (LogicOp::Or, true) => Ok(a),
                    _ => self.eval(b, locals),
                }
            }
            Expr::Compare(first, rest) => {
                let mut left = self.eval(first, locals)?;
                for (op, e) in rest {
                    let right = self.eval(e, locals)?;
                    if !compare(*op, &left, &right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Ok(Value::Bool(true))
            }
            Expr::Ternary { cond, then, orelse } => {
                if self.eval(cond, locals)?.truthy() {
                    self.eval(then, locals)
                } else {
                    self.eval(orelse, locals)
                }
            }
            Expr::Call { func, args } => self.call_named(func, args, locals),
            Expr::Method {
                receiver,
                method,
                args,
            } => {
                let recv = self.eval(receiver, locals)?;
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    vals.push(self.eval(a, locals)?);
                }
                call_method(&recv, method, &vals)
            }
        }
    }

    fn call_named(&mut self, func: &str, args: &'a [Expr], locals: &mut Locals) -> Eval<Value> {
        if ORACLE_FUNCTIONS.contains(&func) {
            return self.ask(func, args, locals);
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a, locals)?);
        }
        if let Some(f) = self.ast.function(func) {
            return self.call(f, vals);
        }
        builtin(func, &vals)
    }

    fn ask(&mut self, func: &str, args: &'a [Expr], locals: &mut Locals) -> Eval<Value> {
        if args.len() != 2 {
            return fail(format!("`{func}` expects (query, type)"));
        }
        let kind = match &args[1] {
            Expr::Name(t) => ValueKind::from_type_name(t),
            Expr::Text(t) => ValueKind::from_type_name(t),
            _ => None,
        };
        let Some(kind) = kind else {
            return fail(format!("`{func}` needs a type of int, float, str or bool"));
        };
        let query = match self.eval(&args[0], locals)? {
            Value::Text(s) => s,
            other => other.to_string(),
        };
        if self.trace.len() >= self.limits.max_oracle_calls {
            return fail(format!(
                "oracle call budget of {} exhausted",
                self.limits.max_oracle_calls
            ));
        }
        match self.host.ask(&query, kind) {
            Ok(reply) => {
                let result = match &reply.value {
                    Some(v) => CallResult::Value(v.clone()),
                    None => CallResult::Unknown,
                };
                self.trace.push(OracleCall {
                    query: query.clone(),
                    sent_query: reply.sent_query,
                    expected_kind: kind,
                    unit: reply.unit,
                    result,
                });
                match reply.value {
                    None => Err(Halt::Unknown),
                    Some(v) if v.fits(kind) => Ok(v),
                    Some(v) => fail(format!(
                        "type mismatch: oracle returned {v:?} for a {} query",
                        kind.type_name()
                    )),
                }
            }
            Err(msg) => {
                self.trace.push(OracleCall {
                    query: query.clone(),
                    sent_query: query,
                    expected_kind: kind,
                    unit: None,
                    result: CallResult::Failed(msg.clone()),
                });
                fail(format!("oracle failure: {msg}"))
            }
        }
    }
}

fn finite(n: f64) -> Eval<Value> {
    if n.is_finite() {
        Ok(Value::Number(n))
    } else {
        fail("numeric result is not finite")
    }
}

fn binary(op: BinOp, a: &Value, b: &Value) -> Eval<Value> {
    if op == BinOp::Add {
        if let (Value::Text(x), Value::Text(y)) = (a, b) {
            return Ok(Value::Text(format!("{x}{y}")));
        }
    }
    let (Some(x), Some(y)) = (a.as_number(), b.as_number()) else {
        return fail(format!(
            "unsupported operand types for {}: '{}' and '{}'",
            op.symbol(),
            a.kind_name(),
            b.kind_name()
        ));
    };
    match op {
        BinOp::Add => finite(x + y),
        BinOp::Sub => finite(x - y),
        BinOp::Mul => finite(x * y),
        BinOp::Div => {
            if y == 0.0 {
                fail("division by zero")
            } else {
                finite(x / y)
            }
        }
        BinOp::FloorDiv => {
            if y == 0.0 {
                fail("division by zero")
            } else {
                finite((x / y).floor())
            }
        }
        BinOp::Mod => {
            if y == 0.0 {
                fail("modulo by zero")
            } else {
                finite(x - y * (x / y).floor())
            }
        }
        BinOp::Pow => {
            if x == 0.0 && y < 0.0 {
                fail("zero cannot be raised to a negative power")
            } else if x < 0.0 && y.fract() != 0.0 {
                fail("negative number raised to a fractional power")
            } else {
                finite(x.powf(y))
            }
        }
    }
}

fn compare(op: CmpOp, a: &Value, b: &Value) -> Eval<bool> {
    let ordering = match (a, b) {
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        (Value::Text(_), _) | (_, Value::Text(_)) => None,
        _ => {
            let (x, y) = (a.as_number().unwrap_or(0.0), b.as_number().unwrap_or(0.0));
            x.partial_cmp(&y)
        }
    };
    use std::cmp::Ordering::*;
    match (op, ordering) {
        (CmpOp::Eq, o) => Ok(o == Some(Equal)),
        (CmpOp::Ne, o) => Ok(o != Some(Equal)),
        (_, None) => fail(format!(
            "'{}' not supported between '{}' and '{}'",
            op.symbol(),
            a.kind_name(),
            b.kind_name()
        )),
        (CmpOp::Lt, Some(o)) => Ok(o == Less),
        (CmpOp::Le, Some(o)) => Ok(o != Greater),
        (CmpOp::Gt, Some(o)) => Ok(o == Greater),
        (CmpOp::Ge, Some(o)) => Ok(o != Less),
    }
}

fn numbers(func: &str, args: &[Value]) -> Eval<Vec<f64>> {
    args.iter()
        .map(|v| match v.as_number() {
            Some(n) => Ok(n),
            None => fail(format!("`{func}` expects numbers")),
        })
        .collect()
}

fn parse_number_text(s: &str) -> Option<f64> {
    s.trim()
        .replace(',', "")
        .parse::<f64>()
        .ok()
        .filter(|n| n.is_finite())
}

fn builtin(func: &str, args: &[Value]) -> Eval<Value> {
    let arity = |n: usize| -> Eval<()> {
        if args.len() == n {
            Ok(())
        } else {
            fail(format!("`{func}` takes {n} argument(s)"))
        }
    };
    match func {
        "abs" => {
            arity(1)?;
            Ok(Value::Number(numbers(func, args)?[0].abs()))
        }
        "min" | "max" => {
            if args.is_empty() {
                return fail(format!("`{func}` needs at least one argument"));
            }
            let ns = numbers(func, args)?;
            let pick = if func == "min" {
                ns.iter().cloned().fold(f64::INFINITY, f64::min)
            } else {
                ns.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            Ok(Value::Number(pick))
        }
        "round" => {
            let ns = numbers(func, args)?;
            match ns.as_slice() {
                [x] => Ok(Value::Number(x.round_ties_even())),
                [x, digits] => {
                    let scale = 10f64.powi(*digits as i32);
                    finite((x * scale).round_ties_even() / scale)
                }
                _ => fail("`round` takes 1 or 2 arguments"),
            }
        }
        "int" => {
            arity(1)?;
            match &args[0] {
                Value::Text(s) => match parse_number_text(s) {
                    Some(n) if n.fract() == 0.0 => Ok(Value::Number(n)),
                    _ => fail(format!("invalid literal for int(): {s:?}")),
                },
                v => Ok(Value::Number(v.as_number().expect("non-text").trunc())),
            }
        }
        "float" => {
            arity(1)?;
            match &args[0] {
                Value::Text(s) => match parse_number_text(s) {
                    Some(n) => Ok(Value::Number(n)),
                    None => fail(format!("could not convert string to float: {s:?}")),
                },
                v => Ok(Value::Number(v.as_number().expect("non-text"))),
            }
        }
        "str" => {
            arity(1)?;
            Ok(Value::Text(args[0].to_string()))
        }
        "bool" => {
            arity(1)?;
            Ok(Value::Bool(args[0].truthy()))
        }
        "len" => {
            arity(1)?;
            match &args[0] {
                Value::Text(s) => Ok(Value::Number(s.chars().count() as f64)),
                v => fail(format!("object of type '{}' has no len()", v.kind_name())),
            }
        }
        "print" => Ok(Value::Text(String::new())),
        other => fail(format!("unknown function `{other}`")),
    }
}

fn call_method(recv: &Value, method: &str, args: &[Value]) -> Eval<Value> {
    let Value::Text(s) = recv else {
        return fail(format!("'{}' has no method `{method}`", recv.kind_name()));
    };
    let text_arg = |i: usize| -> Eval<&str> {
        match args.get(i) {
            Some(Value::Text(t)) => Ok(t.as_str()),
            _ => fail(format!("`{method}` expects a string argument")),
        }
    };
    match method {
        "lower" => Ok(Value::Text(s.to_lowercase())),
        "upper" => Ok(Value::Text(s.to_uppercase())),
        "strip" => Ok(Value::Text(s.trim().to_string())),
        "startswith" => Ok(Value::Bool(s.starts_with(text_arg(0)?))),
        "endswith" => Ok(Value::Bool(s.ends_with(text_arg(0)?))),
        "replace" => Ok(Value::Text(s.replace(text_arg(0)?, text_arg(1)?))),
        "format" => format_positional(s, args),
        other => fail(format!("'str' has no method `{other}`")),
    }
}

/// `"...{}...{1}...".format(a, b)` with positional placeholders only.
fn format_positional(template: &str, args: &[Value]) -> Eval<Value> {
    let mut out = String::new();
    let mut chars = template.chars().peekable();
    let mut next_auto = 0usize;
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let mut field = String::new();
                for d in chars.by_ref() {
                    if d == '}' {
                        break;
                    }
                    field.push(d);
                }
                let (index, spec) = match field.split_once(':') {
                    Some((i, s)) => (i.to_string(), Some(s.to_string())),
                    None => (field, None),
                };
                let i = if index.is_empty() {
                    next_auto += 1;
                    next_auto - 1
                } else {
                    match index.parse::<usize>() {
                        Ok(i) => i,
                        Err(_) => return fail("named format fields are outside the grammar"),
                    }
                };
                match args.get(i) {
                    Some(v) => out.push_str(&apply_spec(v, spec.as_deref())),
                    None => return fail("format index out of range"),
                }
            }
            c => out.push(c),
        }
    }
    Ok(Value::Text(out))
}

fn group_thousands(digits: &str) -> String {
    let (sign, digits) = match digits.strip_prefix('-') {
        Some(d) => ("-", d),
        None => ("", digits),
    };
    let (int, frac) = match digits.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (digits, None),
    };
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    match frac {
        Some(f) => format!("{sign}{grouped}.{f}"),
        None => format!("{sign}{grouped}"),
    }
}

/// Applies the common numeric format specs (`.2f`, `,`, `,.2f`, `d`);
/// anything else falls back to plain display.
fn apply_spec(v: &Value, spec: Option<&str>) -> String {
    let (Some(spec), Value::Number(n)) = (spec, v) else {
        return v.to_string();
    };
    let (comma, rest) = match spec.strip_prefix(',') {
        Some(r) => (true, r),
        None => (false, spec),
    };
    let body = if let Some(p) = rest.strip_prefix('.').and_then(|r| r.strip_suffix('f')) {
        match p.parse::<usize>() {
            Ok(p) => format!("{n:.p$}"),
            Err(_) => return v.to_string(),
        }
    } else if rest == "d" || rest.is_empty() {
        format_number(if rest == "d" { n.trunc() } else { *n })
    } else {
        return v.to_string();
    };
    if comma {
        group_thousands(&body)
    } else {
        body
    }
}
