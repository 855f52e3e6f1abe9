//! Schemas, canonical queries, tokenization and template abstraction.

mod ast;
mod lexer;
mod parser;
mod render;
mod schema;

pub use ast::*;
pub use lexer::{feedback_tokens, lex, tokenize, Token, TokenKind, TokenizeMode};
pub use parser::parse_sql;
pub use render::{abstract_template, placeholder_counts, render_sql, QueryTemplate, SlotKind, SlotValue};
pub use schema::{Column, Schema, SchemaSet, Table};

use std::collections::BTreeSet;

/// All table and column names referenced anywhere in `query`.
pub fn schema_items(query: &Query) -> BTreeSet<String> {
    query.schema_items()
}
