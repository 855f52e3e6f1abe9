//! Generated queries for exact-set-match properties.

use std::sync::atomic::{AtomicUsize, Ordering};

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use splashkit::metrics::exact_set_match;
use splashkit::sql::{parse_sql, Schema};

const TABLES: [(&str, &[&str]); 4] = [
    (
        "students",
        &["id", "first_name", "last_name", "age", "major", "advisor_id"],
    ),
    ("teachers", &["id", "first_name", "last_name", "salary", "department"]),
    ("courses", &["course_id", "title", "teacher_id", "credits"]),
    ("enrollments", &["student_id", "course_id", "grade"]),
];
const AGGS: [&str; 6] = ["", "", "count", "max", "min", "avg"];
const OPS: [&str; 6] = ["=", "!=", "<", ">", "<=", ">="];

#[derive(Debug, Clone)]
pub struct GenQuery {
    pub table: &'static str,
    pub select: Vec<String>,
    pub conds: Vec<(String, &'static str, i64)>,
}

impl GenQuery {
    pub fn sql(&self) -> String {
        let mut s = format!("SELECT {} FROM {}", self.select.join(", "), self.table);
        if !self.conds.is_empty() {
            let parts: Vec<String> = self.conds.iter().map(|(c, op, v)| format!("{c} {op} {v}")).collect();
            s.push_str(" WHERE ");
            s.push_str(&parts.join(" AND "));
        }
        s
    }
}

pub fn gen_query() -> impl Strategy<Value = GenQuery> {
    (0..TABLES.len()).prop_flat_map(|t| {
        let (table, cols) = TABLES[t];
        let item = (0..cols.len(), 0..AGGS.len()).prop_map(move |(c, a)| match AGGS[a] {
            "" => cols[c].to_string(),
            agg => format!("{agg}({})", cols[c]),
        });
        let cond =
            (0..cols.len(), 0..OPS.len(), -50i64..1000).prop_map(move |(c, o, v)| (cols[c].to_string(), OPS[o], v));
        (prop::collection::vec(item, 1..4), prop::collection::vec(cond, 0..4))
            .prop_map(move |(select, conds)| GenQuery { table, select, conds })
    })
}

fn esm(schema: &Schema, a: &str, b: &str) -> Result<bool, TestCaseError> {
    let pa = parse_sql(a, schema).map_err(|e| TestCaseError::fail(format!("{a}: {e}")))?;
    let pb = parse_sql(b, schema).map_err(|e| TestCaseError::fail(format!("{b}: {e}")))?;
    exact_set_match(&pa, &pb).map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Reflexivity, select and conjunct reorder invariance, and literal-change
/// sensitivity over `cases` generated queries.
/// Returns how many queries were checked.
pub fn run_esm_properties(schema: &Schema, cases: u32) -> Result<usize, String> {
    let checked = AtomicUsize::new(0);
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (gen_query(), any::<prop::sample::Index>(), any::<prop::sample::Index>());
    runner
        .run(&strategy, |(q, rot_sel, pick)| {
            checked.fetch_add(1, Ordering::Relaxed);
            let sql = q.sql();
            prop_assert!(esm(schema, &sql, &sql)?, "not reflexive: {sql}");

            let mut sel = q.clone();
            let k = rot_sel.index(sel.select.len());
            sel.select.rotate_left(k);
            sel.select.reverse();
            prop_assert!(
                esm(schema, &sql, &sel.sql())?,
                "select order matters: {sql} vs {}",
                sel.sql()
            );

            if !q.conds.is_empty() {
                let mut conj = q.clone();
                conj.conds.reverse();
                let k = pick.index(conj.conds.len());
                conj.conds.rotate_left(k);
                prop_assert!(
                    esm(schema, &sql, &conj.sql())?,
                    "conjunct order matters: {sql} vs {}",
                    conj.sql()
                );

                let mut lit = q.clone();
                let i = pick.index(lit.conds.len());
                lit.conds[i].2 += 1;
                prop_assert!(
                    !esm(schema, &sql, &lit.sql())?,
                    "literal change ignored: {sql} vs {}",
                    lit.sql()
                );
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(checked.into_inner())
}

/// The between-versus-inequalities pair is a non-match.
pub fn between_is_not_inequalities(schema: &Schema) -> bool {
    let a = parse_sql("SELECT first_name FROM teachers WHERE salary BETWEEN 10 AND 20", schema).unwrap();
    let b = parse_sql(
        "SELECT first_name FROM teachers WHERE salary >= 10 AND salary <= 20",
        schema,
    )
    .unwrap();
    !exact_set_match(&a, &b).unwrap()
}
