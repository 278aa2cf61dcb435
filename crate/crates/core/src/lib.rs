//! Analogical program synthesis over a restricted Python subset.
//!
//! The crate extracts programs from an oracle, executes them with budgets,
//! votes over their outcomes and turns the survivors into supervision data.

pub mod binding;
pub mod concept;
pub mod config;
pub mod context;
pub mod datakit;
pub mod error;
pub mod inference;
pub mod journal;
pub mod oracle;
pub mod program;
pub mod simplify;
pub mod vote;

pub use config::{InferenceConfig, RunConfig, SelectionConfig, SimplifyConfig};
pub use context::Context;
pub use datakit::{Dataset, Evaluator, Gold, QuestionRecord, Split, SupervisionInstance};
pub use error::{Error, Result};
pub use oracle::{Answer, AnswerMode, Oracle, OracleError, TaskId};
pub use program::{
    ExecutionOutcome, Limits, ParameterBinding, ProgramAst, Status, Value, ValueKind,
};
