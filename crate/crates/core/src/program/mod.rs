//! The restricted symbolic program space: a typed `answer` entry function
//! with assignments, arithmetic, comparisons, boolean logic, conditionals,
//! returns and oracle calls. See `docs/grammar.md` for the EBNF.

mod ast;
mod compare;
pub mod fixtures;
mod host;
mod interp;
mod lexer;
mod parser;
mod printer;
mod strip;
mod validate;
mod value;

use std::fmt;

pub use ast::*;
pub use compare::{numbers_close, soft_equal, soft_equal_with, TextJudge, RELATIVE_TOLERANCE};
pub use host::{
    ask_value, coerce_answer, extract_json_answer, resolve_unit, ExtractError, LlmHost,
};
pub use interp::{
    check_binding, execute_program, AskHost, CallResult, ExecutionOutcome, HostReply, Limits,
    OracleCall, Status,
};
pub use parser::parse_program;
pub use printer::{literal, print_program};
pub use strip::{extract_program_source, strip_answer_call};
pub use validate::{validate_program, validate_source, ValidationReport};
pub use value::{format_number, ParameterBinding, ReturnKind, Value, ValueKind};

/// A source position and message for text outside the program grammar.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}
