//! Loads a dataset, prints per-split summary statistics, and makes a fresh
//! train/dev split that keeps each database on one side.
//!
//! ```text
//! cargo run --example dataset_stats
//! cargo run --example dataset_stats -- data/import/external.json data/import/splash_layout.toml
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use splashkit::dataset::{load_dataset, split_by_database, summary_stats, ImportConfig, Split, Strictness};
use splashkit::sql::SchemaSet;

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let mut args = std::env::args().skip(1);

    let records = match (args.next(), args.next()) {
        (Some(file), Some(config)) => {
            let mut cfg = ImportConfig::load(config)?;
            cfg.split.get_or_insert(Split::Train);
            let records = cfg.import(file)?;
            let valid = records.iter().filter(|r| r.validate(&schemas).is_ok()).count();
            println!("imported {} records, {valid} valid", records.len());
            records
        }
        _ => load_dataset(
            root.join("data/sample/splash_sample.jsonl"),
            &schemas,
            Strictness::Strict,
        )?
        .records(),
    };

    let summary = summary_stats(&records);
    for split in Split::ALL {
        let s = summary.get(split);
        println!(
            "{:<5} {:>4} examples over {:>2} databases, {:.2} feedback tokens on average",
            split.name(),
            s.examples,
            s.databases,
            s.avg_feedback_tokens
        );
    }

    let (train, dev) = split_by_database(&records, 0.2, 42)?;
    let dbs = |xs: &[splashkit::dataset::SplashExample]| xs.iter().map(|e| e.db_id.clone()).collect::<BTreeSet<_>>();
    println!("resplit: {} train / {} dev", train.len(), dev.len());
    println!("  train dbs: {:?}", dbs(&train));
    println!("  dev dbs:   {:?}", dbs(&dev));
    Ok(())
}
