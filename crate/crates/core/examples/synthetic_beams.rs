//! Builds a synthetic beam for every example of a dataset and writes them as
//! a beam file. Each example's `beam` field names its record.
//!
//! ```text
//! cargo run --example synthetic_beams -- data/sample/splash_sample.jsonl /tmp/beams.jsonl
//! ```

use std::io::Write;
use std::path::PathBuf;

use splashkit::dataset::{load_dataset, Strictness};
use splashkit::rerank::{synthetic_beam, BeamRecord};
use splashkit::sql::SchemaSet;

const BEAM_SIZE: usize = 8;

fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let data = args
        .next()
        .map(PathBuf::from)
        .unwrap_or(root.join("data/sample/splash_sample.jsonl"));
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or(root.join("data/sample/beams.jsonl"));

    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let dataset = load_dataset(&data, &schemas, Strictness::Strict)?;

    let mut file = std::fs::File::create(&out).expect("writable output");
    for (i, ex) in dataset.examples.iter().enumerate() {
        let schema = schemas.require(&ex.record.db_id)?;
        let beam = synthetic_beam(&ex.predicted, &ex.gold, schema, BEAM_SIZE, i as u64)?;
        let id = ex.record.beam.clone().unwrap_or_else(|| format!("b{:02}", i + 1));
        let line = serde_json::to_string(&BeamRecord::from_beam(id, &beam))?;
        writeln!(file, "{line}").expect("write beam");
    }
    println!("wrote {} beams to {}", dataset.examples.len(), out.display());
    Ok(())
}
