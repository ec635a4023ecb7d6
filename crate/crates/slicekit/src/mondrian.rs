//! Median splits shared by the tuple partitioner, the baselines and column
//! generalization.
//!
//! Split attribute choice is the classic multidimensional heuristic: widest
//! normalized range over the bucket (categorical range = distinct present
//! values / domain size, continuous = present span / domain span), ties going
//! to the lower attribute index. The cut is at the lower median value of the
//! bucket and rows equal to it go to the lower half; when that would leave
//! the upper half empty the cut drops to just below the maximum, so an
//! attribute with two present values always separates them.

use crate::table::{Domain, Table, Value};

/// One applied cut: rows with `value <= split_value` on `attr` form `lower`.
#[derive(Debug, Clone)]
pub(crate) struct Split {
    pub attr: usize,
    pub split_value: Value,
    pub lower: Vec<usize>,
    pub upper: Vec<usize>,
}

/// Normalized range of `attr` over the given rows; 0 when the attribute
/// cannot distinguish any of them.
pub(crate) fn normalized_range(table: &Table, rows: &[usize], attr: usize) -> f64 {
    match &table.schema().attr(attr).domain {
        Domain::Categorical(values) => {
            if values.is_empty() {
                return 0.0;
            }
            let mut seen = vec![false; values.len()];
            let mut distinct = 0usize;
            for &r in rows {
                if let Value::Cat(i) = table.value(r, attr) {
                    if !seen[i as usize] {
                        seen[i as usize] = true;
                        distinct += 1;
                    }
                }
            }
            distinct as f64 / values.len() as f64
        }
        Domain::Continuous { min, max } => {
            let span = max - min;
            if span <= 0.0 {
                return 0.0;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &r in rows {
                if let Value::Num(x) = table.value(r, attr) {
                    lo = lo.min(x.0);
                    hi = hi.max(x.0);
                }
            }
            if hi > lo {
                (hi - lo) / span
            } else {
                0.0
            }
        }
    }
}

/// Candidate attributes ordered for splitting: widest normalized range first,
/// index as the tie-break.
pub(crate) fn split_order(table: &Table, rows: &[usize], candidates: &[usize]) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = candidates
        .iter()
        .map(|&a| (normalized_range(table, rows, a), a))
        .collect();
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap().then(x.1.cmp(&y.1)));
    order.into_iter().map(|(_, a)| a).collect()
}

/// Cut `rows` on `attr` at the lower median value, ties to the lower half.
/// When more than half the rows sit at the attribute's maximum the median cut
/// would leave the upper side empty, so the cut moves just below the maximum
/// instead; the attribute is unsplittable (None) only when all its values are
/// equal.
pub(crate) fn median_split(table: &Table, rows: &[usize], attr: usize) -> Option<Split> {
    let mut values: Vec<Value> = rows.iter().map(|&r| table.value(r, attr)).collect();
    values.sort_unstable();
    let mut split_value = values[(values.len() - 1) / 2];
    let max = *values.last().unwrap();
    if split_value == max {
        split_value = *values.iter().rev().find(|&&v| v < max)?;
    }

    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &r in rows {
        if table.value(r, attr) <= split_value {
            lower.push(r);
        } else {
            upper.push(r);
        }
    }
    if lower.is_empty() || upper.is_empty() {
        return None;
    }
    Some(Split {
        attr,
        split_value,
        lower,
        upper,
    })
}

/// First workable cut in range order, requiring both halves to hold at least
/// `min_side` rows.
pub(crate) fn choose_split(
    table: &Table,
    rows: &[usize],
    candidates: &[usize],
    min_side: usize,
) -> Option<Split> {
    for attr in split_order(table, rows, candidates) {
        if let Some(split) = median_split(table, rows, attr) {
            if split.lower.len() >= min_side && split.upper.len() >= min_side {
                return Some(split);
            }
        }
    }
    None
}
