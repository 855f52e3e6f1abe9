//! Corpus-level error report over the wrong parses of a dataset: distance
//! histogram, edit-operation mix and keyword counts.
//!
//! ```text
//! cargo run --example error_report -- data/sample/splash_sample.jsonl
//! ```

use std::path::PathBuf;

use splashkit::dataset::{load_dataset, Strictness};
use splashkit::diff::{error_report, Rollup};
use splashkit::sql::SchemaSet;

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let data = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or(root.join("data/sample/splash_sample.jsonl"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let dataset = load_dataset(data, &schemas, Strictness::Strict)?;

    let pairs: Vec<_> = dataset
        .examples
        .iter()
        .map(|e| (e.predicted.clone(), e.gold.clone()))
        .collect();
    let report = error_report(&pairs, &schemas, &Rollup::default())?;

    println!("{} pairs, {} segments", report.pairs, report.segments);
    for (d, n) in &report.distance_histogram {
        println!("distance {d}: {n}");
    }
    println!("within 3: {:.1}%", 100.0 * report.fraction_within(3));
    for (kind, share) in &report.op_distribution {
        println!("{:>7}: {:.1}%", kind.name(), 100.0 * share);
    }
    for (cat, counts) in &report.rollup {
        println!("{cat:>12}: {} edits", counts.total());
    }
    Ok(())
}
