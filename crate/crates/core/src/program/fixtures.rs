//! Reference programs from worked grade-school math examples. Shared by the
//! unit tests, the acceptance suite and the benchmarks.

use super::value::{ParameterBinding, Value};

pub const CANDY_BAR: &str = "def answer(num_soft_drinks_x: int, cost_per_soft_drink_y: int, num_candy_bars_z: int, total_spent_w: int) -> float:
\ttotal_cost_soft_drinks = num_soft_drinks_x * cost_per_soft_drink_y
\ttotal_cost_candy_bars = total_spent_w - total_cost_soft_drinks
\tcost_candy_bar = total_cost_candy_bars / num_candy_bars_z
\treturn cost_candy_bar
";

pub const LIONS: &str = "def answer(births_per_month_x: int, deaths_per_month_y: int, final_count_z: int, num_months_w: int) -> int:
    net_per_month = births_per_month_x - deaths_per_month_y
    total_new = net_per_month * num_months_w
    return final_count_z - total_new
";

pub const BOOK_STACK: &str =
    "def answer(num_inches_x: int, num_pages_y: int, num_inches_z: int, num_w: int) -> float:
    pages_per_inch = num_pages_y / num_inches_z
    total_pages = num_inches_x * pages_per_inch
    return total_pages / num_w
";

fn bind(pairs: &[(&str, f64)]) -> ParameterBinding {
    pairs.iter().fold(ParameterBinding::new(), |b, (k, v)| {
        b.with(*k, Value::Number(*v))
    })
}

pub fn candy_bar_binding() -> ParameterBinding {
    bind(&[
        ("num_soft_drinks_x", 2.0),
        ("cost_per_soft_drink_y", 4.0),
        ("num_candy_bars_z", 5.0),
        ("total_spent_w", 28.0),
    ])
}

/// Births 5/month, deaths 1/month, 148 lions after 12 months.
pub fn lions_binding() -> ParameterBinding {
    bind(&[
        ("births_per_month_x", 5.0),
        ("deaths_per_month_y", 1.0),
        ("final_count_z", 148.0),
        ("num_months_w", 12.0),
    ])
}

/// 12 inches thick, 80 pages per inch, 6 books.
pub fn book_stack_binding() -> ParameterBinding {
    bind(&[
        ("num_inches_x", 12.0),
        ("num_pages_y", 80.0),
        ("num_inches_z", 1.0),
        ("num_w", 6.0),
    ])
}
