//! Token diff between a predicted and a gold parse: edit segments, their
//! categories and the schema items that appear in only one of them.
//!
//! ```text
//! cargo run --example diff_pair
//! ```

use std::path::PathBuf;

use splashkit::diff::{classify_edit, diff_schema_items, query_segments};
use splashkit::sql::{parse_sql, render_sql, SchemaSet};

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let schema = schemas.require("school_records")?;

    let pred = parse_sql("select first_name, last_name from students", schema)?;
    let gold = parse_sql("select first_name from teachers", schema)?;
    println!("pred: {}", render_sql(&pred));
    println!("gold: {}", render_sql(&gold));

    for seg in query_segments(&pred, &gold) {
        let class = classify_edit(&seg, schema);
        println!(
            "{:>7} at {}: [{}] -> [{}] ({})",
            seg.kind.name(),
            seg.position,
            seg.removed.join(" "),
            seg.added.join(" "),
            class.category.name()
        );
    }
    let items: Vec<String> = diff_schema_items(&pred, &gold).into_iter().collect();
    println!("schema items: {{{}}}", items.join(", "));
    Ok(())
}
