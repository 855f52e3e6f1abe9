mod common;

use common::*;
use proptest::prelude::*;
use splashkit::metrics::*;
use splashkit::sql::parse_sql;

#[test]
fn end_to_end_rejects_bad_counts() {
    assert!(end_to_end_accuracy(1, 1, 0, 50.0).is_err());
    assert!(end_to_end_accuracy(600, 500, 1034, 50.0).is_err());
    assert!(end_to_end_accuracy(427, 511, 1034, 100.5).is_err());
    assert!(end_to_end_accuracy(427, 511, 1034, -0.1).is_err());
}

#[test]
fn correction_accuracy_on_the_sample() {
    let data = sample();
    let schemas = schemas();
    let golds: Vec<_> = data.examples.iter().map(|e| e.gold.clone()).collect();
    let predicted: Vec<_> = data.examples.iter().map(|e| e.predicted.clone()).collect();
    assert_eq!(correction_accuracy(&predicted, &golds).unwrap(), 0.0);
    assert_eq!(correction_accuracy(&golds, &golds).unwrap(), 1.0);
    let requoted: Vec<_> = data
        .examples
        .iter()
        .map(|e| {
            parse_sql(
                &e.record.gold_sql.to_lowercase().replace('\'', "\""),
                schemas.require(&e.record.db_id).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let outcome = evaluate(&requoted, &golds).unwrap();
    // Lowercasing changes string literals, which must count as a mismatch.
    let quoted_upper = |sql: &str| sql.split('\'').skip(1).step_by(2).any(|lit| lit != lit.to_lowercase());
    let changed = data
        .examples
        .iter()
        .filter(|e| quoted_upper(&e.record.gold_sql))
        .count();
    assert!(changed > 0);
    assert_eq!(outcome.matches.iter().filter(|m| !**m).count(), changed);
    assert!(evaluate(&golds[..2], &golds[..3]).is_err());
}

proptest! {
    #[test]
    fn end_to_end_is_affine_and_increasing(
        total in 1u64..5000,
        a in 0.0f64..1.0,
        b in 0.0f64..1.0,
        x in 0.0f64..100.0,
        y in 0.0f64..100.0,
    ) {
        let base = (a * total as f64) as u64;
        let supported = ((total - base) as f64 * b) as u64;
        let f = |x| end_to_end_accuracy(base, supported, total, x).unwrap();
        let expected = 100.0 * (base as f64 + supported as f64 * x / 100.0) / total as f64;
        prop_assert!((f(x) - expected).abs() < 1e-9);
        prop_assert!((f(100.0) - 100.0 * (base + supported) as f64 / total as f64).abs() < 1e-9);
        prop_assert!((f((x + y) / 2.0) - (f(x) + f(y)) / 2.0).abs() < 1e-9);
        if supported > 0 && x < y {
            prop_assert!(f(x) < f(y));
        }
    }
}
