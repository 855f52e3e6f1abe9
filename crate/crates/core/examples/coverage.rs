//! How many predicted parses of a dataset the template library explains
//! without falling back to the phrasebook, and which shapes are missing.
//!
//! ```text
//! cargo run --example coverage
//! ```

use std::path::PathBuf;

use splashkit::dataset::{load_dataset, Strictness};
use splashkit::explain::{coverage, load_library};
use splashkit::sql::SchemaSet;

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let library = load_library(root.join("data/templates/starter.tpl"))?;
    let dataset = load_dataset(
        root.join("data/sample/splash_sample.jsonl"),
        &schemas,
        Strictness::Strict,
    )?;

    let predicted: Vec<_> = dataset.examples.iter().map(|e| e.predicted.clone()).collect();
    let golds: Vec<_> = dataset.examples.iter().map(|e| e.gold.clone()).collect();
    for (name, queries) in [("predicted", &predicted), ("gold", &golds)] {
        let report = coverage(queries, &library);
        println!(
            "{name}: {}/{} covered ({:.1}%), {} templates in the library",
            report.matched,
            report.total,
            100.0 * report.fraction,
            library.len()
        );
        for (key, n) in &report.unmatched {
            println!("  {n} x {key}");
        }
    }
    Ok(())
}
