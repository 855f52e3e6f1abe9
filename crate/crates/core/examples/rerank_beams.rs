//! Re-ranks the sample beams with every method and reports how often each
//! recovers the gold parse.
//!
//! ```text
//! cargo run --example rerank_beams -- 7
//! ```

use std::collections::HashMap;
use std::path::PathBuf;

use splashkit::dataset::{load_dataset, Strictness};
use splashkit::metrics::exact_set_match;
use splashkit::rerank::{load_beams, near_miss_filter, rerank, RerankMethod};
use splashkit::sql::SchemaSet;

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let dataset = load_dataset(
        root.join("data/sample/splash_sample.jsonl"),
        &schemas,
        Strictness::Strict,
    )?;
    let beams: HashMap<String, _> = load_beams(root.join("data/sample/beams.jsonl"))?
        .into_iter()
        .map(|b| (b.id.clone(), b))
        .collect();

    let mut near_misses = 0;
    for method in RerankMethod::ALL {
        let mut hits = 0;
        for (i, ex) in dataset.examples.iter().enumerate() {
            let schema = schemas.require(&ex.record.db_id)?;
            let id = ex.record.beam.as_deref().expect("sample examples name their beam");
            let beam = beams[id].parse(schema)?;
            if method == RerankMethod::Uniform && near_miss_filter(&beam)?.is_some() {
                near_misses += 1;
            }
            let choice = rerank(
                method,
                &beam,
                &ex.predicted,
                &ex.record.feedback,
                seed.wrapping_add(i as u64),
            )?;
            if exact_set_match(&choice.chosen.query, &ex.gold)? {
                hits += 1;
            }
        }
        println!(
            "{:>12}: {hits}/{} ({:.2}%)",
            method.name(),
            dataset.examples.len(),
            100.0 * hits as f64 / dataset.examples.len() as f64
        );
    }
    println!("beams whose runner-up is a near miss: {near_misses}");
    Ok(())
}
