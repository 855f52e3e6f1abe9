//! Explains one query as numbered steps.
//!
//! ```text
//! cargo run --example explain_query -- school_records "SELECT first_name FROM teachers ORDER BY salary DESC LIMIT 1"
//! ```

use std::path::PathBuf;

use splashkit::explain::{explain, load_library};
use splashkit::sql::{parse_sql, SchemaSet};

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let db = args.next().unwrap_or_else(|| "school_finance".into());
    let sql = args
        .next()
        .unwrap_or_else(|| "SELECT Type FROM school GROUP BY Type HAVING count(*) >= 2".into());

    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let library = load_library(root.join("data/templates/starter.tpl"))?;
    let schema = schemas.require(&db)?;
    let query = parse_sql(&sql, schema)?;
    let e = explain(&query, schema, &library)?;

    for line in e.numbered() {
        println!("{line}");
    }
    for key in &e.fallbacks {
        println!("(no template for `{key}`)");
    }
    Ok(())
}
