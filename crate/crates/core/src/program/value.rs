use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Runtime value of the program space. All numbers are decimal floating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl Value {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Value::Bool(_) => "bool",
            Value::Number(_) => "number",
            Value::Text(_) => "str",
        }
    }

    pub fn truthy(&self) -> bool {
        match self {
            Value::Bool(b) => *b,
            Value::Number(n) => *n != 0.0,
            Value::Text(s) => !s.is_empty(),
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Value::Number(n) => Some(*n),
            Value::Bool(b) => Some(if *b { 1.0 } else { 0.0 }),
            Value::Text(_) => None,
        }
    }

    /// Whether this value is acceptable for a parameter declared with `kind`.
    pub fn fits(&self, kind: ValueKind) -> bool {
        match (kind, self) {
            (ValueKind::Integer, Value::Number(n)) => n.is_finite() && n.fract() == 0.0,
            (ValueKind::Decimal, Value::Number(n)) => n.is_finite(),
            (ValueKind::Text, Value::Text(_)) => true,
            (ValueKind::Boolean, Value::Bool(_)) => true,
            _ => false,
        }
    }
}

/// Formats a number the way grade-school answers are written: integral values
/// without a fractional part.
pub fn format_number(n: f64) -> String {
    if n.is_finite() && n.fract() == 0.0 && n.abs() < 1e16 {
        format!("{}", n as i64)
    } else {
        format!("{n}")
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(true) => f.write_str("True"),
            Value::Bool(false) => f.write_str("False"),
            Value::Number(n) => f.write_str(&format_number(*n)),
            Value::Text(s) => f.write_str(s),
        }
    }
}

/// Declared kind of a parameter or an oracle query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Integer,
    Decimal,
    Text,
    Boolean,
}

impl ValueKind {
    pub fn from_type_name(name: &str) -> Option<Self> {
        match name {
            "int" => Some(ValueKind::Integer),
            "float" => Some(ValueKind::Decimal),
            "str" => Some(ValueKind::Text),
            "bool" => Some(ValueKind::Boolean),
            _ => None,
        }
    }

    /// The host-language type name, as written in annotations and oracle prompts.
    pub fn type_name(self) -> &'static str {
        match self {
            ValueKind::Integer => "int",
            ValueKind::Decimal => "float",
            ValueKind::Text => "str",
            ValueKind::Boolean => "bool",
        }
    }
}

/// What `answer()` returns: yes/no for general questions, a number for math.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnKind {
    Boolean,
    Number,
}

impl ReturnKind {
    pub fn accepts(self, value: &Value) -> bool {
        matches!(
            (self, value),
            (ReturnKind::Boolean, Value::Bool(_)) | (ReturnKind::Number, Value::Number(_))
        )
    }
}

/// Concrete values for the entry parameters of a program.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterBinding(pub BTreeMap<String, Value>);

impl ParameterBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: Value) -> Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Value) {
        self.0.insert(name.into(), value);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    /// Renders the binding as keyword arguments, e.g. `a=1, b="x"`.
    pub fn render_kwargs(&self) -> String {
        self.0
            .iter()
            .map(|(k, v)| format!("{k}={}", super::printer::literal(v)))
            .collect::<Vec<_>>()
            .join(", ")
    }
}
