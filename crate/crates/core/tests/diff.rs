mod common;

use std::collections::BTreeMap;

use common::oracle::min_edits_then_segments;
use common::*;
use splashkit::diff::*;
use splashkit::sql::{parse_sql, schema_items, Query};

fn school(sql: &str) -> Query {
    parse_sql(sql, schemas().require("school_records").unwrap()).unwrap()
}

fn set(items: &[&str]) -> std::collections::BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

#[test]
fn schema_items_of_a_query() {
    assert_eq!(
        schema_items(&school("select first_name, last_name from students")),
        set(&["first_name", "last_name", "students"])
    );
    assert_eq!(
        schema_items(&school("select first_name from teachers")),
        set(&["first_name", "teachers"])
    );
}

#[test]
fn items_in_only_one_query() {
    let a = school("select first_name, last_name from students");
    let b = school("select first_name from teachers");
    assert_eq!(diff_schema_items(&a, &b), set(&["last_name", "students", "teachers"]));
    assert_eq!(diff_schema_items(&b, &a), diff_schema_items(&a, &b));
    assert!(diff_schema_items(&a, &a).is_empty());
}

#[test]
fn sample_segments_agree_with_the_oracle() {
    let data = sample();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for ex in &data.examples {
        let p = query_tokens(&ex.predicted);
        let g = query_tokens(&ex.gold);
        let pr: Vec<&str> = p.iter().map(String::as_str).collect();
        let gr: Vec<&str> = g.iter().map(String::as_str).collect();
        let (edits, segs) = min_edits_then_segments(&pr, &gr);
        let script = token_edit_script(&p, &g);
        assert_eq!(script.len() as u32, edits);
        let segments = query_segments(&ex.predicted, &ex.gold);
        assert_eq!(segments.len() as u32, segs, "{}", ex.record.predicted_sql);
        assert_eq!(edit_distance(&ex.predicted, &ex.gold), segments.len());
        *histogram.entry(segments.len()).or_default() += 1;
    }
    let report = error_report(
        &data
            .examples
            .iter()
            .map(|e| (e.predicted.clone(), e.gold.clone()))
            .collect::<Vec<_>>(),
        &schemas(),
        &Rollup::default(),
    )
    .unwrap();
    assert_eq!(report.distance_histogram, histogram);
    assert_eq!(report.pairs, 50);
    assert_eq!(report.segments, histogram.iter().map(|(d, n)| d * n).sum::<usize>());
    let shares: f64 = report.op_distribution.values().sum();
    assert!((shares - 1.0).abs() < 1e-9);
}

#[test]
fn keyword_counts_are_per_segment() {
    let pairs = vec![(
        school("select age from students where age > 3"),
        school("select count(*) from students"),
    )];
    let report = error_report(&pairs, &schemas(), &Rollup::default()).unwrap();
    let total: usize = report.keyword_histogram.values().map(KindCounts::total).sum();
    assert!(total >= 2);
    assert!(report.keyword_histogram.contains_key("where"));
    assert!(report.keyword_histogram.contains_key("count"));
    let table = report.to_table();
    assert!(table.starts_with("section\tbucket\tkind\tvalue\n"));
    assert!(table.lines().all(|l| l.split('\t').count() == 4));
}

#[test]
fn single_token_edits_are_classified() {
    let s = schemas();
    let schema = s.require("school_records").unwrap();
    let seg = |a: &str, b: &str| {
        let segs = query_segments(&school(a), &school(b));
        assert_eq!(segs.len(), 1, "{a} / {b}");
        classify_edit(&segs[0], schema).category
    };
    assert_eq!(
        seg(
            "select age from students where age > 3",
            "select age from students where age < 3"
        ),
        EditCategory::Operator
    );
    assert_eq!(
        seg(
            "select age from students where age > 3",
            "select age from students where age > 4"
        ),
        EditCategory::Number
    );
    assert_eq!(
        seg("select age from students", "select id from students"),
        EditCategory::SchemaItem
    );
    assert_eq!(
        seg(
            "select age from students order by age asc",
            "select age from students order by age desc"
        ),
        EditCategory::SqlKeyword
    );
}
