//! Exact set match, correction accuracy and end-to-end accuracy.
//!
//! Exact set match compares queries component by component:
//!
//! | component            | comparison                                   |
//! |----------------------|----------------------------------------------|
//! | select items         | multiset of `(agg, column, distinct)`        |
//! | `SELECT DISTINCT`    | equal flag                                   |
//! | from tables, joins   | multisets (join sides orientation-free)      |
//! | where / having       | multiset of top-level conjuncts; OR subtrees ordered |
//! | group by             | multiset                                     |
//! | order by             | ordered list including direction             |
//! | limit                | equal value                                  |
//! | compound             | equal operator, right side recursively       |
//!
//! Nested queries are compared with the same rules. Literal values must be
//! identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sql::{Condition, Operand, Query, TableRef};

/// Returns the order-insensitive normal form used by [`exact_set_match`].
pub fn canonicalize(query: &Query) -> Query {
    let mut q = query.clone();
    q.select.sort();
    for t in &mut q.from.tables {
        if let TableRef::Derived { query, .. } = t {
            **query = canonicalize(query);
        }
    }
    q.from.tables.sort();
    q.from.joins = q.from.joins.iter().map(|j| j.normalized()).collect();
    q.from.joins.sort();
    q.where_clause = q.where_clause.as_ref().map(canonical_top);
    q.group_by.sort();
    q.having = q.having.as_ref().map(canonical_top);
    if let Some((_, rhs)) = &mut q.compound {
        **rhs = canonicalize(rhs);
    }
    q
}

fn canonical_top(c: &Condition) -> Condition {
    match c {
        Condition::And(parts) => {
            let mut parts: Vec<Condition> = parts.iter().map(canonical_nested).collect();
            parts.sort();
            Condition::And(parts)
        }
        other => canonical_nested(other),
    }
}

fn canonical_nested(c: &Condition) -> Condition {
    match c {
        Condition::Atom(p) => {
            let mut p = p.clone();
            if let Operand::Subquery(q) = &mut p.right {
                **q = canonicalize(q);
            }
            Condition::Atom(p)
        }
        Condition::And(parts) => Condition::And(parts.iter().map(canonical_nested).collect()),
        Condition::Or(parts) => Condition::Or(parts.iter().map(canonical_nested).collect()),
    }
}

/// Component-wise set equality of two queries over the same database.
pub fn exact_set_match(pred: &Query, gold: &Query) -> Result<bool> {
    if pred.db_id != gold.db_id {
        return Err(Error::SchemaMismatch(pred.db_id.clone(), gold.db_id.clone()));
    }
    Ok(canonicalize(pred) == canonicalize(gold))
}

/// Per-example match flags and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub matches: Vec<bool>,
    pub correction_accuracy: f64,
}

impl EvalOutcome {
    pub fn from_flags(matches: Vec<bool>) -> Self {
        let correction_accuracy = if matches.is_empty() {
            0.0
        } else {
            matches.iter().filter(|m| **m).count() as f64 / matches.len() as f64
        };
        EvalOutcome {
            matches,
            correction_accuracy,
        }
    }
}

pub fn evaluate(predictions: &[Query], golds: &[Query]) -> Result<EvalOutcome> {
    if predictions.len() != golds.len() {
        return Err(Error::LengthMismatch(predictions.len(), golds.len()));
    }
    let flags = predictions
        .iter()
        .zip(golds)
        .map(|(p, g)| exact_set_match(p, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalOutcome::from_flags(flags))
}

/// Fraction of predictions that exactly set-match their gold query.
pub fn correction_accuracy(predictions: &[Query], golds: &[Query]) -> Result<f64> {
    Ok(evaluate(predictions, golds)?.correction_accuracy)
}

/// Two-turn accuracy in percent: examples the parser already got right plus
/// the corrected share of the supported remainder, over all examples.
///
/// `correction_pct` is the correction accuracy in percent.
pub fn end_to_end_accuracy(base_correct: u64, supported: u64, total: u64, correction_pct: f64) -> Result<f64> {
    if total == 0 {
        return Err(Error::InvalidArgument("total must be positive".into()));
    }
    if base_correct + supported > total {
        return Err(Error::InvalidArgument(format!(
            "base_correct ({base_correct}) + supported ({supported}) exceeds total ({total})"
        )));
    }
    if !(0.0..=100.0).contains(&correction_pct) {
        return Err(Error::InvalidArgument(format!(
            "correction accuracy {correction_pct} is outside [0, 100]"
        )));
    }
    Ok(100.0 * (base_correct as f64 + supported as f64 * correction_pct / 100.0) / total as f64)
}
