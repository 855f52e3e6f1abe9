//! Correction accuracy of a set of corrected parses, and the two-turn
//! accuracy it implies when the first parser was right on `base_correct`
//! of `total` examples and feedback was collected for `supported` more.
//!
//! ```text
//! cargo run --example end_to_end
//! ```

use std::path::PathBuf;

use splashkit::dataset::{load_dataset, Strictness};
use splashkit::metrics::{end_to_end_accuracy, evaluate};
use splashkit::sql::{parse_sql, SchemaSet};

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let dataset = load_dataset(
        root.join("data/sample/splash_sample.jsonl"),
        &schemas,
        Strictness::Strict,
    )?;

    // Pretend the correction model fixed every third example and left the
    // rest untouched.
    let mut corrected = Vec::new();
    let mut golds = Vec::new();
    for (i, ex) in dataset.examples.iter().enumerate() {
        let fixed = if i % 3 == 0 {
            &ex.record.gold_sql
        } else {
            &ex.record.predicted_sql
        };
        corrected.push(parse_sql(fixed, schemas.require(&ex.record.db_id)?)?);
        golds.push(ex.gold.clone());
    }
    let outcome = evaluate(&corrected, &golds)?;
    let x = 100.0 * outcome.correction_accuracy;
    println!("correction accuracy: {x:.2}");

    println!(
        "end-to-end (427 + 511 supported of 1034): {:.2}",
        end_to_end_accuracy(427, 511, 1034, x)?
    );
    for x in [2.39, 25.16, 81.50] {
        println!("  X = {x:>5.2} -> {:.2}", end_to_end_accuracy(427, 511, 1034, x)?);
    }
    Ok(())
}
