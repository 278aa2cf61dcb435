use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::value::{Value, ValueKind};
use super::ParseError;

/// Parses program source into an AST, rejecting anything outside the grammar.
///
/// Besides syntax, this checks that `answer` is defined exactly once and that
/// every identifier read in a function body is a parameter, an earlier
/// assignment target, a defined function, or a host function.
pub fn parse_program(source: &str) -> Result<ProgramAst, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError::new(1, 1, "empty program"));
    }
    let tokens = tokenize(source)?;
    let function_names = declared_functions(&tokens);
    let mut parser = Parser {
        tokens,
        pos: 0,
        functions: function_names,
        scope: HashSet::new(),
    };
    let (functions, invocation, invocation_lines) = parser.module()?;

    let entries = functions.iter().filter(|f| f.name == ENTRY).count();
    if entries == 0 {
        return Err(ParseError::new(1, 1, "no `answer` function defined"));
    }
    let mut seen = HashSet::new();
    for f in &functions {
        if !seen.insert(f.name.as_str()) {
            return Err(ParseError::new(
                1,
                1,
                format!("function `{}` defined twice", f.name),
            ));
        }
    }
    let entry = functions
        .iter()
        .find(|f| f.name == ENTRY)
        .expect("counted above");
    if entry.returns == Some(ValueKind::Text) {
        return Err(ParseError::new(
            1,
            1,
            "`answer` must return bool, int or float",
        ));
    }

    Ok(ProgramAst {
        source_text: source.to_string(),
        functions,
        invocation,
        invocation_lines,
    })
}

fn declared_functions(tokens: &[Token]) -> HashSet<String> {
    tokens
        .windows(2)
        .filter_map(|w| match (&w[0].tok, &w[1].tok) {
            (Tok::Name(d), Tok::Name(n)) if d == "def" => Some(n.clone()),
            _ => None,
        })
        .collect()
}

const KEYWORDS: &[&str] = &[
    "def", "return", "if", "elif", "else", "and", "or", "not", "True", "False", "pass",
];

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    functions: HashSet<String>,
    scope: HashSet<String>,
}

type Module = (Vec<FunctionDef>, Option<Invocation>, Option<(usize, usize)>);

impl Parser {
    fn tok(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_tok(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::new(line, col, msg))
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.tok(), Tok::Op(o) if *o == op)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.tok(), Tok::Name(n) if n == kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat_op(op) {
            Ok(())
        } else {
            self.err(format!("expected '{op}', found {}", describe(self.tok())))
        }
    }

    fn expect_name(&mut self) -> Result<String, ParseError> {
        match self.tok().clone() {
            Tok::Name(n) if !KEYWORDS.contains(&n.as_str()) => {
                self.advance();
                Ok(n)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        match self.tok() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            other => self.err(format!("expected end of line, found {}", describe(other))),
        }
    }

    fn module(&mut self) -> Result<Module, ParseError> {
        let mut functions = Vec::new();
        let mut invocation = None;
        let mut lines = None;
        loop {
            match self.tok().clone() {
                Tok::Eof => break,
                Tok::Newline => {
                    self.advance();
                }
                Tok::Name(n) if n == "def" => {
                    if invocation.is_some() {
                        return self.err("definitions must precede the `answer(...)` call");
                    }
                    functions.push(self.function()?);
                }
                Tok::Name(n) if n == ENTRY || n == "print" => {
                    if invocation.is_some() {
                        return self.err("only one module-level `answer(...)` call is allowed");
                    }
                    let start = self.here().0;
                    invocation = Some(self.invocation()?);
                    let end = self.tokens[self.pos.saturating_sub(1)].line;
                    lines = Some((start, end));
                    self.expect_newline()?;
                }
                Tok::Str(_) if invocation.is_none() => {
                    // module docstring
                    self.advance();
                    self.expect_newline()?;
                }
                other => {
                    return self.err(format!(
                        "{} is outside the program grammar at module level",
                        describe(&other)
                    ))
                }
            }
        }
        Ok((functions, invocation, lines))
    }

    fn function(&mut self) -> Result<FunctionDef, ParseError> {
        self.advance(); // def
        let name = self.expect_name()?;
        if is_host_name(&name) {
            return self.err(format!("`{name}` shadows a host function"));
        }
        self.expect_op("(")?;
        let mut params = Vec::new();
        let mut names = HashSet::new();
        while !self.is_op(")") {
            let pname = self.expect_name()?;
            if !names.insert(pname.clone()) {
                return self.err(format!("duplicate parameter `{pname}`"));
            }
            let kind = if self.eat_op(":") {
                Some(self.type_name()?)
            } else {
                None
            };
            params.push(Param { name: pname, kind });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.type_name()?)
        } else {
            None
        };
        self.expect_op(":")?;
        self.scope = names;
        let body = self.block()?;
        Ok(FunctionDef {
            name,
            params,
            returns,
            body,
        })
    }

    fn type_name(&mut self) -> Result<ValueKind, ParseError> {
        match self.tok().clone() {
            Tok::Name(n) => match ValueKind::from_type_name(&n) {
                Some(k) => {
                    self.advance();
                    Ok(k)
                }
                None => self.err(format!("unsupported type `{n}`")),
            },
            other => self.err(format!("expected a type, found {}", describe(&other))),
        }
    }

    /// Parses the block after a ':', either an indented suite or one simple
    /// statement on the same line.
    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if matches!(self.tok(), Tok::Newline) {
            self.advance();
            if !matches!(self.tok(), Tok::Indent) {
                return self.err("expected an indented block");
            }
            self.advance();
            let mut body = Vec::new();
            loop {
                match self.tok() {
                    Tok::Dedent => {
                        self.advance();
                        break;
                    }
                    Tok::Eof => break,
                    Tok::Newline => {
                        self.advance();
                    }
                    _ => body.push(self.statement()?),
                }
            }
            if body.is_empty() {
                return self.err("empty block");
            }
            Ok(body)
        } else {
            let stmt = self.simple_statement()?;
            self.expect_newline()?;
            Ok(vec![stmt])
        }
    }

    fn statement(&mut self) -> Result<Stmt, ParseError> {
        if self.is_kw("if") {
            return self.if_statement();
        }
        if self.is_kw("def") {
            return self.err("nested function definitions are outside the grammar");
        }
        let stmt = self.simple_statement()?;
        self.expect_newline()?;
        Ok(stmt)
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        self.advance(); // if
        let mut branches = Vec::new();
        let cond = self.expr()?;
        self.expect_op(":")?;
        branches.push((cond, self.block()?));
        let mut orelse = None;
        loop {
            if self.eat_kw("elif") {
                let cond = self.expr()?;
                self.expect_op(":")?;
                branches.push((cond, self.block()?));
            } else if self.eat_kw("else") {
                self.expect_op(":")?;
                orelse = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt::If { branches, orelse })
    }

    fn simple_statement(&mut self) -> Result<Stmt, ParseError> {
        if self.eat_kw("return") {
            if matches!(self.tok(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                return self.err("bare `return` is outside the grammar");
            }
            return Ok(Stmt::Return(self.expr()?));
        }
        if self.eat_kw("pass") {
            return Ok(Stmt::Pass);
        }
        if let Tok::Name(name) = self.tok().clone() {
            if !KEYWORDS.contains(&name.as_str()) {
                let aug = match self.peek_tok(1) {
                    Tok::Op("+=") => Some(BinOp::Add),
                    Tok::Op("-=") => Some(BinOp::Sub),
                    Tok::Op("*=") => Some(BinOp::Mul),
                    Tok::Op("/=") => Some(BinOp::Div),
                    Tok::Op("//=") => Some(BinOp::FloorDiv),
                    Tok::Op("%=") => Some(BinOp::Mod),
                    Tok::Op("**=") => Some(BinOp::Pow),
                    _ => None,
                };
                if let Some(op) = aug {
                    if !self.scope.contains(&name) {
                        return self.err(format!("undefined identifier `{name}`"));
                    }
                    self.advance();
                    self.advance();
                    let value = self.expr()?;
                    return Ok(Stmt::AugAssign {
                        target: name,
                        op,
                        value,
                    });
                }
                let annotated = matches!(self.peek_tok(1), Tok::Op(":"));
                if annotated || matches!(self.peek_tok(1), Tok::Op("=")) {
                    if is_host_name(&name) || self.functions.contains(&name) {
                        return self.err(format!("cannot assign to function name `{name}`"));
                    }
                    self.advance();
                    let annotation = if annotated {
                        self.advance();
                        Some(self.type_name()?)
                    } else {
                        None
                    };
                    self.expect_op("=")?;
                    let value = self.expr()?;
                    self.scope.insert(name.clone());
                    return Ok(Stmt::Assign {
                        target: name,
                        annotation,
                        value,
                    });
                }
            }
        }
        Ok(Stmt::Expr(self.expr()?))
    }

    fn invocation(&mut self) -> Result<Invocation, ParseError> {
        let printed = self.eat_kw("print");
        if printed {
            self.expect_op("(")?;
        }
        if !self.eat_kw(ENTRY) {
            return self.err("expected `answer(...)`");
        }
        self.expect_op("(")?;
        let mut args = Vec::new();
        while !self.is_op(")") {
            let name = match (self.tok().clone(), self.peek_tok(1)) {
                (Tok::Name(n), Tok::Op("=")) if !KEYWORDS.contains(&n.as_str()) => {
                    self.advance();
                    self.advance();
                    Some(n)
                }
                _ => None,
            };
            let value = self.literal()?;
            args.push(CallArg { name, value });
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if printed {
            self.expect_op(")")?;
        }
        Ok(Invocation { args, printed })
    }

    fn literal(&mut self) -> Result<Value, ParseError> {
        let negative = self.eat_op("-");
        match self.tok().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Value::Number(if negative { -n } else { n }))
            }
            Tok::Str(s) if !negative => {
                self.advance();
                Ok(Value::Text(s))
            }
            Tok::Name(n) if !negative && (n == "True" || n == "False") => {
                self.advance();
                Ok(Value::Bool(n == "True"))
            }
            other => self.err(format!(
                "invocation arguments must be literals, found {}",
                describe(&other)
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let value = self.or_expr()?;
        if self.is_kw("if") {
            self.advance();
            let cond = self.or_expr()?;
            if !self.eat_kw("else") {
                return self.err("expected `else` in conditional expression");
            }
            let orelse = self.expr()?;
            return Ok(Expr::Ternary {
                cond: Box::new(cond),
                then: Box::new(value),
                orelse: Box::new(orelse),
            });
        }
        Ok(value)
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::Logic(LogicOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::Logic(LogicOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat_kw("not") {
            let inner = self.not_expr()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.tok() {
                Tok::Op("==") => CmpOp::Eq,
                Tok::Op("!=") => CmpOp::Ne,
                Tok::Op("<") => CmpOp::Lt,
                Tok::Op("<=") => CmpOp::Le,
                Tok::Op(">") => CmpOp::Gt,
                Tok::Op(">=") => CmpOp::Ge,
                _ => break,
            };
            self.advance();
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.tok() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.tok() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("//") => BinOp::FloorDiv,
                Tok::Op("%") => BinOp::Mod,
                _ => break,
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            let inner = self.unary()?;
            return Ok(match inner {
                Expr::Number(n) => Expr::Number(-n),
                other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
            });
        }
        if self.eat_op("+") {
            let inner = self.unary()?;
            return Ok(Expr::Unary(UnaryOp::Pos, Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            let exp = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.is_op(".") {
            self.advance();
            let method = self.expect_name()?;
            self.expect_op("(")?;
            let args = self.call_args()?;
            e = Expr::Method {
                receiver: Box::new(e),
                method,
                args,
            };
        }
        Ok(e)
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        while !self.is_op(")") {
            if matches!((self.tok(), self.peek_tok(1)), (Tok::Name(_), Tok::Op("="))) {
                return self.err("keyword arguments are outside the grammar");
            }
            args.push(self.expr()?);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (line, col) = self.here();
        match self.tok().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Expr::Number(n))
            }
            Tok::Str(s) => {
                self.advance();
                let mut s = s;
                // implicit concatenation of adjacent literals
                while let Tok::Str(next) = self.tok().clone() {
                    self.advance();
                    s.push_str(&next);
                }
                Ok(Expr::Text(s))
            }
            Tok::FStr(body) => {
                self.advance();
                let parts = self.fstring(&body, line, col)?;
                Ok(Expr::FString(parts))
            }
            Tok::Op("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Name(n) if n == "True" || n == "False" => {
                self.advance();
                Ok(Expr::Bool(n == "True"))
            }
            Tok::Name(n) if KEYWORDS.contains(&n.as_str()) => {
                self.err(format!("unexpected keyword `{n}`"))
            }
            Tok::Name(n) => {
                self.advance();
                if self.is_op("(") {
                    if !(is_host_name(&n) || self.functions.contains(&n)) {
                        return Err(ParseError::new(
                            line,
                            col,
                            format!("undefined function `{n}`"),
                        ));
                    }
                    self.advance();
                    let args = self.call_args()?;
                    return Ok(Expr::Call { func: n, args });
                }
                if !(self.scope.contains(&n) || is_host_name(&n)) {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!("undefined identifier `{n}`"),
                    ));
                }
                Ok(Expr::Name(n))
            }
            other => self.err(format!("unexpected {}", describe(&other))),
        }
    }

    fn fstring(
        &mut self,
        body: &str,
        line: usize,
        col: usize,
    ) -> Result<Vec<FStringPart>, ParseError> {
        let chars: Vec<char> = body.chars().collect();
        let mut parts = Vec::new();
        let mut lit = String::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c == '{' && chars.get(i + 1) == Some(&'{') {
                lit.push('{');
                i += 2;
                continue;
            }
            if c == '}' && chars.get(i + 1) == Some(&'}') {
                lit.push('}');
                i += 2;
                continue;
            }
            if c == '}' {
                return Err(ParseError::new(line, col, "single '}' in f-string"));
            }
            if c != '{' {
                lit.push(c);
                i += 1;
                continue;
            }
            // placeholder: find the matching close brace outside quotes
            let start = i + 1;
            let mut depth = 0usize;
            let mut quote: Option<char> = None;
            let mut j = start;
            let mut spec_at = None;
            while j < chars.len() {
                let d = chars[j];
                match quote {
                    Some(q) if d == q => quote = None,
                    Some(_) => {}
                    None => match d {
                        '\'' | '"' => quote = Some(d),
                        '(' | '[' | '{' => depth += 1,
                        ')' | ']' => depth = depth.saturating_sub(1),
                        '}' if depth == 0 => break,
                        '}' => depth -= 1,
                        ':' if depth == 0 && spec_at.is_none() => spec_at = Some(j),
                        _ => {}
                    },
                }
                j += 1;
            }
            if j >= chars.len() {
                return Err(ParseError::new(
                    line,
                    col,
                    "unterminated f-string placeholder",
                ));
            }
            let expr_end = spec_at.unwrap_or(j);
            let mut expr_text: String = chars[start..expr_end].iter().collect();
            if let Some(stripped) = expr_text
                .strip_suffix("!r")
                .or_else(|| expr_text.strip_suffix("!s"))
            {
                expr_text = stripped.to_string();
            }
            let spec = spec_at.map(|s| chars[s + 1..j].iter().collect::<String>());
            if !lit.is_empty() {
                parts.push(FStringPart::Literal(std::mem::take(&mut lit)));
            }
            let expr = self.sub_expression(&expr_text, line, col)?;
            parts.push(FStringPart::Expr { expr, spec });
            i = j + 1;
        }
        if !lit.is_empty() {
            parts.push(FStringPart::Literal(lit));
        }
        Ok(parts)
    }

    fn sub_expression(&mut self, text: &str, line: usize, col: usize) -> Result<Expr, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::new(line, col, "empty f-string placeholder"));
        }
        let relocate = |e: ParseError| ParseError::new(line, col, e.message);
        let tokens = tokenize(text.trim()).map_err(relocate)?;
        let saved_tokens = std::mem::replace(&mut self.tokens, tokens);
        let saved_pos = std::mem::replace(&mut self.pos, 0);
        let result = (|| {
            let e = self.expr()?;
            match self.tok() {
                Tok::Newline | Tok::Eof => Ok(e),
                other => self.err(format!("unexpected {} in f-string", describe(other))),
            }
        })();
        self.tokens = saved_tokens;
        self.pos = saved_pos;
        result.map_err(relocate)
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(_) | Tok::FStr(_) => "string literal".to_string(),
        Tok::Op(o) => format!("'{o}'"),
        Tok::Newline => "end of line".to_string(),
        Tok::Indent => "indent".to_string(),
        Tok::Dedent => "dedent".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}
