use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{classify_edit, is_sql_keyword, query_segments, EditCategory, EditKind};
use crate::error::Result;
use crate::sql::{Query, SchemaSet};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub replace: usize,
    pub insert: usize,
    pub delete: usize,
}

impl KindCounts {
    fn bump(&mut self, kind: EditKind) {
        match kind {
            EditKind::Replace => self.replace += 1,
            EditKind::Insert => self.insert += 1,
            EditKind::Delete => self.delete += 1,
        }
    }

    pub fn get(&self, kind: EditKind) -> usize {
        match kind {
            EditKind::Replace => self.replace,
            EditKind::Insert => self.insert,
            EditKind::Delete => self.delete,
        }
    }

    pub fn total(&self) -> usize {
        self.replace + self.insert + self.delete
    }
}

/// Maps SQL keywords to coarser reporting categories.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rollup {
    pub categories: BTreeMap<String, String>,
}

impl Default for Rollup {
    fn default() -> Self {
        let pairs = [
            ("join", "join"),
            ("on", "join"),
            ("where", "where"),
            ("group", "aggregation"),
            ("having", "aggregation"),
            ("sum", "aggregation"),
            ("avg", "aggregation"),
            ("min", "aggregation"),
            ("max", "aggregation"),
            ("count", "count"),
            ("distinct", "distinct"),
            ("order", "order"),
            ("asc", "order"),
            ("desc", "order"),
            ("limit", "limit"),
            ("and", "logic"),
            ("or", "logic"),
            ("not", "logic"),
            ("in", "nested"),
            ("like", "condition"),
            ("between", "condition"),
            ("intersect", "compound"),
            ("union", "compound"),
            ("except", "compound"),
            ("select", "select"),
            ("from", "from"),
        ];
        Rollup {
            categories: pairs.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

/// Corpus-level characterization of the edits between predicted and gold
/// parses.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub pairs: usize,
    pub segments: usize,
    /// Edit distance (segment count) -> number of pairs.
    pub distance_histogram: BTreeMap<usize, usize>,
    pub op_counts: KindCounts,
    pub op_distribution: BTreeMap<EditKind, f64>,
    pub single_token_segments: usize,
    pub single_token_fraction: f64,
    pub single_token_class_distribution: BTreeMap<EditCategory, f64>,
    pub keyword_histogram: BTreeMap<String, KindCounts>,
    pub rollup: BTreeMap<String, KindCounts>,
}

impl ErrorReport {
    /// Fraction of pairs with distance at most `d`.
    pub fn fraction_within(&self, d: usize) -> f64 {
        if self.pairs == 0 {
            return 0.0;
        }
        let n: usize = self.distance_histogram.range(..=d).map(|(_, c)| c).sum();
        n as f64 / self.pairs as f64
    }

    /// Tab-separated rows `section bucket kind value`, one per histogram
    /// bucket, for external plotting.
    pub fn to_table(&self) -> String {
        let mut out = String::from("section\tbucket\tkind\tvalue\n");
        let mut row = |s: &str, b: &str, k: &str, v: String| {
            let _ = writeln!(out, "{s}\t{b}\t{k}\t{v}");
        };
        row("summary", "pairs", "-", self.pairs.to_string());
        row("summary", "segments", "-", self.segments.to_string());
        row(
            "summary",
            "single_token_fraction",
            "-",
            format!("{:.6}", self.single_token_fraction),
        );
        for (d, c) in &self.distance_histogram {
            row("distance", &d.to_string(), "-", c.to_string());
        }
        for (k, f) in &self.op_distribution {
            row("op", k.name(), "-", format!("{f:.6}"));
        }
        for (c, f) in &self.single_token_class_distribution {
            row("single_token_class", c.name(), "-", format!("{f:.6}"));
        }
        for (kw, counts) in &self.keyword_histogram {
            for kind in EditKind::ALL {
                row("keyword", kw, kind.name(), counts.get(kind).to_string());
            }
        }
        for (cat, counts) in &self.rollup {
            for kind in EditKind::ALL {
                row("rollup", cat, kind.name(), counts.get(kind).to_string());
            }
        }
        out
    }
}

/// Builds the error report for `(predicted, gold)` pairs.
///
/// Every keyword inside a segment counts once for that segment's kind.
/// Schemas are looked up by the queries' `db_id` for classification.
pub fn error_report(pairs: &[(Query, Query)], schemas: &SchemaSet, rollup: &Rollup) -> Result<ErrorReport> {
    let mut report = ErrorReport {
        pairs: pairs.len(),
        ..ErrorReport::default()
    };
    let mut class_counts: BTreeMap<EditCategory, usize> = BTreeMap::new();
    for (pred, gold) in pairs {
        let schema = schemas.require(&gold.db_id)?;
        let segments = query_segments(pred, gold);
        *report.distance_histogram.entry(segments.len()).or_default() += 1;
        for seg in &segments {
            report.segments += 1;
            report.op_counts.bump(seg.kind);
            if seg.is_single_token() {
                report.single_token_segments += 1;
                *class_counts.entry(classify_edit(seg, schema).category).or_default() += 1;
            }
            let keywords: BTreeSet<&str> = seg.tokens().map(String::as_str).filter(|t| is_sql_keyword(t)).collect();
            let mut rolled: BTreeSet<&str> = BTreeSet::new();
            for kw in keywords {
                report
                    .keyword_histogram
                    .entry(kw.to_string())
                    .or_default()
                    .bump(seg.kind);
                if let Some(cat) = rollup.categories.get(kw) {
                    rolled.insert(cat);
                }
            }
            for cat in rolled {
                report.rollup.entry(cat.to_string()).or_default().bump(seg.kind);
            }
        }
    }
    if report.segments > 0 {
        let total = report.segments as f64;
        for kind in EditKind::ALL {
            report
                .op_distribution
                .insert(kind, report.op_counts.get(kind) as f64 / total);
        }
        report.single_token_fraction = report.single_token_segments as f64 / total;
    }
    if report.single_token_segments > 0 {
        let total = report.single_token_segments as f64;
        report.single_token_class_distribution = class_counts.into_iter().map(|(c, n)| (c, n as f64 / total)).collect();
    }
    Ok(report)
}
