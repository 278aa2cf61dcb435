//! Tokenizer for the program space. Produces Python-style `Indent`/`Dedent`
//! tokens from leading whitespace; newlines inside brackets are ignored.

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Number(f64),
    Str(String),
    /// Raw body of an f-string; placeholders are parsed later.
    FStr(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPS: &[&str] = &[
    "**=", "//=", "->", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "+", "-",
    "*", "/", "%", "<", ">", "=", "(", ")", ",", ":", ".",
];

const TAB_STOP: usize = 8;

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    Lexer::new(src).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    depth: usize,
    indents: Vec<usize>,
    out: Vec<Token>,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            depth: 0,
            indents: vec![0],
            out: Vec::new(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.chars.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(self.line, self.col, msg)
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    fn run(mut self) -> Result<Vec<Token>, ParseError> {
        let mut at_line_start = true;
        loop {
            if at_line_start && self.depth == 0 {
                if !self.handle_indentation()? {
                    break;
                }
                at_line_start = false;
            }
            let Some(c) = self.peek() else { break };
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.push(Tok::Newline, line, col);
                        at_line_start = true;
                    }
                }
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '"' | '\'' => {
                    let s = self.string(false, false)?;
                    self.push(Tok::Str(s), line, col);
                }
                c if (c == 'f' || c == 'F' || c == 'r' || c == 'R')
                    && matches!(self.peek_at(1), Some('"') | Some('\'')) =>
                {
                    self.bump();
                    let raw = c == 'r' || c == 'R';
                    let s = self.string(raw, !raw)?;
                    if raw {
                        self.push(Tok::Str(s), line, col);
                    } else {
                        self.push(Tok::FStr(s), line, col);
                    }
                }
                c if c.is_ascii_digit()
                    || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) =>
                {
                    let n = self.number()?;
                    self.push(Tok::Number(n), line, col);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.push(Tok::Name(name), line, col);
                }
                _ => {
                    let op = OPS
                        .iter()
                        .find(|op| {
                            op.chars()
                                .enumerate()
                                .all(|(i, oc)| self.peek_at(i) == Some(oc))
                        })
                        .copied()
                        .ok_or_else(|| self.err(format!("unexpected character {c:?}")))?;
                    for _ in 0..op.chars().count() {
                        self.bump();
                    }
                    match op {
                        "(" => self.depth += 1,
                        ")" => {
                            self.depth = self
                                .depth
                                .checked_sub(1)
                                .ok_or_else(|| ParseError::new(line, col, "unbalanced ')'"))?
                        }
                        _ => {}
                    }
                    self.push(Tok::Op(op), line, col);
                }
            }
        }
        if self.depth != 0 {
            return Err(self.err("unclosed '('"));
        }
        let (line, col) = (self.line, self.col);
        if !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.push(Tok::Newline, line, col);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(Tok::Dedent, line, col);
        }
        self.push(Tok::Eof, line, col);
        Ok(self.out)
    }

    /// Consumes leading whitespace of logical lines, skipping blank and
    /// comment-only lines. Returns false at end of input.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        loop {
            let mut width = 0usize;
            while let Some(c) = self.peek() {
                match c {
                    ' ' => width += 1,
                    '\t' => width = (width / TAB_STOP + 1) * TAB_STOP,
                    '\r' | '\x0c' => {}
                    _ => break,
                }
                self.bump();
            }
            match self.peek() {
                None => return Ok(false),
                Some('\n') => {
                    self.bump();
                    continue;
                }
                Some('#') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                    continue;
                }
                Some(_) => {}
            }
            let (line, col) = (self.line, self.col);
            let current = *self.indents.last().unwrap_or(&0);
            if width > current {
                self.indents.push(width);
                self.push(Tok::Indent, line, col);
            } else if width < current {
                while width < *self.indents.last().unwrap_or(&0) {
                    self.indents.pop();
                    self.push(Tok::Dedent, line, col);
                }
                if width != *self.indents.last().unwrap_or(&0) {
                    return Err(ParseError::new(line, col, "inconsistent dedent"));
                }
            }
            return Ok(true);
        }
    }

    fn string(&mut self, raw: bool, fstring: bool) -> Result<String, ParseError> {
        let (line, col) = (self.line, self.col);
        let quote = self.bump().expect("caller checked quote");
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        let mut braces = 0usize;
        loop {
            let Some(c) = self.bump() else {
                return Err(ParseError::new(line, col, "unterminated string"));
            };
            if c == quote && braces == 0 {
                if !triple {
                    break;
                }
                if self.peek() == Some(quote) && self.peek_at(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    break;
                }
                out.push(c);
                continue;
            }
            match c {
                '\n' if !triple => {
                    return Err(ParseError::new(line, col, "unterminated string"));
                }
                '\\' if !raw => {
                    let Some(e) = self.bump() else {
                        return Err(ParseError::new(line, col, "unterminated string"));
                    };
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        '0' => out.push('\0'),
                        '\\' => out.push('\\'),
                        '\'' => out.push('\''),
                        '"' => out.push('"'),
                        '\n' => {}
                        other => {
                            out.push('\\');
                            out.push(other);
                        }
                    }
                }
                // Track placeholder depth so quotes inside `{...}` of an
                // f-string do not terminate it. Doubled braces are literal.
                '{' if fstring => {
                    if self.peek() == Some('{') && braces == 0 {
                        out.push('{');
                        out.push(self.bump().unwrap_or('{'));
                    } else {
                        braces += 1;
                        out.push('{');
                    }
                }
                '}' if fstring => {
                    if braces > 0 {
                        braces -= 1;
                    } else if self.peek() == Some('}') {
                        out.push('}');
                        self.bump();
                    }
                    out.push('}');
                }
                other => out.push(other),
            }
        }
        Ok(out)
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        let mut seen_dot = false;
        let mut seen_exp = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() {
                text.push(c);
            } else if c == '_' {
            } else if c == '.' && !seen_dot && !seen_exp {
                seen_dot = true;
                text.push(c);
            } else if (c == 'e' || c == 'E') && !seen_exp {
                let next = self.peek_at(1);
                let next2 = self.peek_at(2);
                let ok = next.is_some_and(|d| d.is_ascii_digit())
                    || (matches!(next, Some('+') | Some('-'))
                        && next2.is_some_and(|d| d.is_ascii_digit()));
                if !ok {
                    break;
                }
                seen_exp = true;
                text.push('e');
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    text.push(sign);
                    self.bump();
                }
                continue;
            } else {
                break;
            }
            self.bump();
        }
        text.parse::<f64>()
            .map_err(|_| ParseError::new(line, col, format!("invalid number {text:?}")))
    }
}
