#![allow(dead_code)]

pub mod esm;
pub mod oracle;
pub mod service;

use std::path::PathBuf;

use serde::Deserialize;
use splashkit::explain::{load_library, TemplateLibrary};
use splashkit::sql::SchemaSet;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub fn schemas() -> SchemaSet {
    SchemaSet::load(data("schemas")).unwrap()
}

pub fn starter() -> TemplateLibrary {
    load_library(data("templates/starter.tpl")).unwrap()
}

#[derive(Debug, Deserialize)]
pub struct ExplainCase {
    pub id: String,
    pub db_id: String,
    pub sql: String,
}

pub fn explain_cases() -> Vec<ExplainCase> {
    std::fs::read_to_string(data("explain/queries.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn golden_path(id: &str) -> PathBuf {
    data("explain/golden").join(format!("{id}.txt"))
}

/// Numbered steps, one per line, with a trailing newline.
pub fn render_explanation(case: &ExplainCase, schemas: &SchemaSet, lib: &TemplateLibrary) -> String {
    let schema = schemas.require(&case.db_id).unwrap();
    let q = splashkit::sql::parse_sql(&case.sql, schema).unwrap();
    let e = splashkit::explain::explain(&q, schema, lib).unwrap();
    let mut out = e.numbered().join("\n");
    out.push('\n');
    out
}

pub fn sample() -> splashkit::dataset::LoadedDataset {
    splashkit::dataset::load_dataset(
        data("sample/splash_sample.jsonl"),
        &schemas(),
        splashkit::dataset::Strictness::Strict,
    )
    .unwrap()
}

/// Accuracy of `method` over the sample fixture and its beams.
pub fn sample_rerank_accuracy(method: splashkit::rerank::RerankMethod, seed: u64) -> f64 {
    use std::collections::HashMap;
    let schemas = schemas();
    let data = sample();
    let beams: HashMap<String, splashkit::rerank::BeamRecord> = splashkit::rerank::load_beams(data_path_beams())
        .unwrap()
        .into_iter()
        .map(|b| (b.id.clone(), b))
        .collect();
    let mut hits = 0;
    for (i, ex) in data.examples.iter().enumerate() {
        let schema = schemas.require(&ex.record.db_id).unwrap();
        let beam = beams[ex.record.beam.as_deref().unwrap()].parse(schema).unwrap();
        let c = splashkit::rerank::rerank(
            method,
            &beam,
            &ex.predicted,
            &ex.record.feedback,
            seed.wrapping_add(i as u64),
        )
        .unwrap();
        if splashkit::metrics::exact_set_match(&c.chosen.query, &ex.gold).unwrap() {
            hits += 1;
        }
    }
    hits as f64 / data.examples.len() as f64
}

fn data_path_beams() -> PathBuf {
    data("sample/beams.jsonl")
}

/// Compares every fixture query against its golden file and checks the
/// fixture spans the shapes it is meant to.
pub fn check_explain_goldens() -> Result<usize, String> {
    let schemas = schemas();
    let lib = starter();
    let cases = explain_cases();
    let mut rendered = Vec::new();
    for case in &cases {
        let got = render_explanation(case, &schemas, &lib);
        let want = std::fs::read_to_string(golden_path(&case.id)).map_err(|e| format!("{}: {e}", case.id))?;
        if got != want {
            return Err(format!("{} differs:\n--- want\n{want}--- got\n{got}", case.id));
        }
        rendered.push((case.sql.to_uppercase(), got));
    }
    let has = |needle: &str| rendered.iter().any(|(sql, _)| sql.contains(needle));
    for shape in [
        " JOIN ",
        "GROUP BY",
        "INTERSECT",
        "UNION",
        "EXCEPT",
        "DISTINCT",
        "LIMIT 3",
        "LIMIT 1",
    ] {
        if !has(shape) {
            return Err(format!("fixture has no `{shape}` query"));
        }
    }
    let extreme = |dir: &str, word: &str| {
        rendered
            .iter()
            .any(|(sql, text)| sql.contains(&format!("{dir} LIMIT 1")) && text.contains(word))
    };
    if !extreme("DESC", "largest") || !extreme("ASC", "smallest") {
        return Err("order + limit 1 is not compressed to largest/smallest".into());
    }
    Ok(cases.len())
}
