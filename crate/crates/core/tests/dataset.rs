mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use splashkit::dataset::*;

// Token totals per split, counted with a lowercase alphanumeric-run
// tokenizer outside this crate and frozen here.
const FEEDBACK_TOKENS: [(Split, usize, usize); 3] =
    [(Split::Train, 247, 33), (Split::Dev, 53, 7), (Split::Test, 82, 10)];

#[test]
fn sample_loads_strictly() {
    let data = sample();
    assert_eq!(data.examples.len(), 50);
    assert!(data.rejected.is_empty());
    let sources: BTreeSet<_> = data.examples.iter().filter_map(|e| e.record.source).collect();
    assert_eq!(sources.len(), 3);
}

#[test]
fn sample_summary() {
    let s = summary_stats(&sample().records());
    for (split, tokens, n) in FEEDBACK_TOKENS {
        let got = s.get(split);
        assert_eq!(got.examples, n);
        assert_eq!(got.unique_questions, n);
        assert_eq!(got.unique_feedbacks, n);
        assert!(
            (got.avg_feedback_tokens - tokens as f64 / n as f64).abs() < 1e-12,
            "{split:?}"
        );
    }
    assert_eq!(
        [Split::Train, Split::Dev, Split::Test].map(|sp| s.get(sp).databases),
        [4, 1, 2]
    );
}

#[test]
fn sample_splits_do_not_share_databases() {
    let records = sample().records();
    let dbs = |split| {
        records
            .iter()
            .filter(|r| r.split == split)
            .map(|r| r.db_id.clone())
            .collect::<BTreeSet<_>>()
    };
    let (train, dev, test) = (dbs(Split::Train), dbs(Split::Dev), dbs(Split::Test));
    assert!(train.is_disjoint(&dev) && train.is_disjoint(&test) && dev.is_disjoint(&test));
}

#[test]
fn lenient_skips_and_strict_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.jsonl");
    let mut records = sample().records()[..3].to_vec();
    let mut same = records[0].clone();
    same.gold_sql = same.predicted_sql.clone();
    let mut empty = records[1].clone();
    empty.feedback = "  ".into();
    let mut broken = records[2].clone();
    broken.gold_sql = "SELECT FROM".into();
    records.extend([same, empty, broken]);
    write_records(&path, &records).unwrap();
    std::fs::write(&path, std::fs::read_to_string(&path).unwrap() + "{not json\n").unwrap();

    let schemas = schemas();
    let loaded = load_dataset(&path, &schemas, Strictness::Lenient).unwrap();
    assert_eq!(loaded.examples.len(), 3);
    let lines: Vec<usize> = loaded.rejected.iter().map(|r| r.line).collect();
    assert_eq!(lines, [4, 5, 6, 7]);
    assert_eq!(loaded.rejected[0].reason, "predicted_sql matches gold_sql");
    assert_eq!(loaded.rejected[1].reason, "feedback is empty");

    let err = load_dataset(&path, &schemas, Strictness::Strict).unwrap_err();
    assert!(err.to_string().contains(":4"), "{err}");
}

#[test]
fn unknown_database_is_always_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.jsonl");
    let mut r = sample().records()[0].clone();
    r.db_id = "nowhere".into();
    write_records(&path, &[r]).unwrap();
    assert!(load_dataset(&path, &schemas(), Strictness::Lenient).is_err());
}

#[test]
fn write_then_read_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("copy.jsonl");
    let records = sample().records();
    write_records(&path, &records).unwrap();
    let back = load_dataset(&path, &schemas(), Strictness::Strict).unwrap().records();
    assert_eq!(back, records);
}

#[test]
fn import_maps_external_field_names() {
    let mut cfg = ImportConfig::load(data("import/splash_layout.toml")).unwrap();
    cfg.split = Some(Split::Dev);
    let records = cfg.import(data("import/external.json")).unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.split == Split::Dev));
    assert_eq!(
        records[1].gold_sql,
        "SELECT name FROM races WHERE year BETWEEN 2009 AND 2011"
    );
    let schemas = schemas();
    assert!(records.iter().all(|r| r.validate(&schemas).is_ok()));
}

#[test]
fn import_config_rejects_unknown_targets() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[fields]\nanswer = \"x\"\n").unwrap();
    assert!(ImportConfig::load(&path).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn database_split_is_a_partition(fraction in 0.05f64..0.95, seed in any::<u64>()) {
        let records = sample().records();
        let (train, dev) = split_by_database(&records, fraction, seed).unwrap();
        prop_assert_eq!(train.len() + dev.len(), records.len());
        prop_assert!(!train.is_empty() && !dev.is_empty());
        let a: BTreeSet<_> = train.iter().map(|r| &r.db_id).collect();
        let b: BTreeSet<_> = dev.iter().map(|r| &r.db_id).collect();
        prop_assert!(a.is_disjoint(&b));
        prop_assert_eq!((train.clone(), dev.clone()), split_by_database(&records, fraction, seed).unwrap());
    }
}
