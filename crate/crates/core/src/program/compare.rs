//! Soft value comparison used for silver-label matching and vote clustering.

use super::value::Value;

/// Relative tolerance for non-integral numbers.
pub const RELATIVE_TOLERANCE: f64 = 1e-6;

/// Semantic text equality, typically oracle-backed. `None` means the judge
/// could not decide.
pub trait TextJudge: Sync {
    fn same_meaning(&self, a: &str, b: &str) -> Option<bool>;
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

pub fn numbers_close(a: f64, b: f64) -> bool {
    if a == b {
        return true;
    }
    if a.fract() == 0.0 && b.fract() == 0.0 {
        return false;
    }
    (a - b).abs() <= RELATIVE_TOLERANCE * a.abs().max(b.abs())
}

/// Lexical soft equality: numbers within [`RELATIVE_TOLERANCE`] (exact when
/// both are integral), booleans exactly, text after trimming and lowercasing.
pub fn soft_equal(a: &Value, b: &Value) -> bool {
    soft_equal_with(a, b, None)
}

pub fn soft_equal_with(a: &Value, b: &Value, judge: Option<&dyn TextJudge>) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => numbers_close(*x, *y),
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Text(x), Value::Text(y)) => {
            if normalize(x) == normalize(y) {
                return true;
            }
            judge.and_then(|j| j.same_meaning(x, y)).unwrap_or(false)
        }
        _ => {
            tracing::debug!(
                left = a.kind_name(),
                right = b.kind_name(),
                "soft_equal on incomparable kinds"
            );
            false
        }
    }
}
