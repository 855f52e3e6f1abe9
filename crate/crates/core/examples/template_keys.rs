//! Prints the template key of every query body in a JSONL query file, and
//! whether the given template library covers it.
//!
//! ```text
//! cargo run --example template_keys -- data/explain/queries.jsonl data/templates/starter.tpl
//! ```

use std::path::PathBuf;

use serde::Deserialize;
use splashkit::explain::{body_keys, load_library, TemplateLibrary};
use splashkit::sql::{parse_sql, SchemaSet};

#[derive(Deserialize)]
struct Entry {
    id: String,
    db_id: String,
    sql: String,
}

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let queries = args
        .next()
        .map(PathBuf::from)
        .unwrap_or(root.join("data/explain/queries.jsonl"));
    let library = match args.next() {
        Some(p) => load_library(p)?,
        None => TemplateLibrary::default(),
    };
    let schemas = SchemaSet::load(root.join("data/schemas"))?;

    let text = std::fs::read_to_string(&queries).expect("readable query file");
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let e: Entry = serde_json::from_str(line)?;
        let q = parse_sql(&e.sql, schemas.require(&e.db_id)?)?;
        for key in body_keys(&q) {
            let mark = if library.get(&key).is_some() { "+" } else { "-" };
            println!("{mark} {}\t{key}", e.id);
        }
    }
    Ok(())
}
