//! Edit segments between predicted and gold parses, edit classification and
//! corpus-level error reports.
//!
//! Both queries are rendered to canonical SQL and tokenized in SQL mode
//! before diffing, so the two sides always share one normalization.

mod report;
mod script;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use report::{error_report, ErrorReport, KindCounts, Rollup};
pub use script::{apply_script, merge_segments, token_edit_script, EditKind, EditSegment, TokenEdit};

use crate::sql::{render_sql, tokenize, Query, Schema, TokenizeMode};

/// Keywords counted in keyword histograms and used for classification.
pub const SQL_KEYWORDS: [&str; 27] = [
    "select",
    "from",
    "join",
    "on",
    "where",
    "group",
    "by",
    "having",
    "order",
    "limit",
    "distinct",
    "count",
    "sum",
    "avg",
    "min",
    "max",
    "and",
    "or",
    "not",
    "in",
    "like",
    "between",
    "intersect",
    "union",
    "except",
    "asc",
    "desc",
];

const OPERATORS: [&str; 10] = ["=", "!=", "<>", "<", "<=", ">", ">=", "+", "-", "/"];

pub fn is_sql_keyword(token: &str) -> bool {
    SQL_KEYWORDS.contains(&token)
}

/// Canonical SQL tokens of a query.
pub fn query_tokens(query: &Query) -> Vec<String> {
    tokenize(&render_sql(query), TokenizeMode::Sql).expect("rendered SQL always lexes")
}

/// Edit segments turning `pred` into `gold`.
pub fn query_segments(pred: &Query, gold: &Query) -> Vec<EditSegment> {
    merge_segments(&token_edit_script(&query_tokens(pred), &query_tokens(gold)))
}

/// Number of edit segments between two queries.
pub fn edit_distance(pred: &Query, gold: &Query) -> usize {
    query_segments(pred, gold).len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EditCategory {
    SchemaItem,
    SqlKeyword,
    Operator,
    Number,
    Other,
}

impl EditCategory {
    pub const ALL: [EditCategory; 5] = [
        EditCategory::SchemaItem,
        EditCategory::SqlKeyword,
        EditCategory::Operator,
        EditCategory::Number,
        EditCategory::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EditCategory::SchemaItem => "schema_item",
            EditCategory::SqlKeyword => "sql_keyword",
            EditCategory::Operator => "operator",
            EditCategory::Number => "number",
            EditCategory::Other => "other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditClass {
    pub category: EditCategory,
}

fn token_category(token: &str, schema_names: &std::collections::HashSet<String>) -> EditCategory {
    if schema_names.contains(token) {
        EditCategory::SchemaItem
    } else if is_sql_keyword(token) {
        EditCategory::SqlKeyword
    } else if OPERATORS.contains(&token) {
        EditCategory::Operator
    } else if token.trim_start_matches('-').parse::<f64>().is_ok() {
        EditCategory::Number
    } else {
        EditCategory::Other
    }
}

/// Classifies a single-token segment; multi-token segments are `Other`.
///
/// When a replace touches tokens of two categories the earlier category in
/// [`EditCategory::ALL`] wins.
pub fn classify_edit(segment: &EditSegment, schema: &Schema) -> EditClass {
    if !segment.is_single_token() {
        return EditClass {
            category: EditCategory::Other,
        };
    }
    let names = schema.item_names();
    let category = segment
        .tokens()
        .map(|t| token_category(t, &names))
        .min()
        .unwrap_or(EditCategory::Other);
    EditClass { category }
}

/// Schema items that appear in exactly one of the two queries.
pub fn diff_schema_items(a: &Query, b: &Query) -> BTreeSet<String> {
    let left = a.schema_items();
    let right = b.schema_items();
    left.symmetric_difference(&right).cloned().collect()
}
