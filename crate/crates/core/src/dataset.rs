//! Correction records: loading, validation, import from other layouts,
//! summary statistics and database-level splits.
//!
//! The native file format has one JSON record per line:
//!
//! ```json
//! {"db_id": "school", "question": "...", "predicted_sql": "...",
//!  "gold_sql": "...", "feedback": "...", "split": "train",
//!  "beam": "ex-17", "source": "top1"}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::exact_set_match;
use crate::sql::{feedback_tokens, parse_sql, Query, SchemaSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

/// How a wrong parse was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Top1,
    NearMiss,
    Paraphrase,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplashExample {
    pub db_id: String,
    pub question: String,
    pub predicted_sql: String,
    pub gold_sql: String,
    pub feedback: String,
    pub split: Split,
    /// Id of this example's beam in a beam file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beam: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
}

/// A record whose SQL has been parsed against its schema.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedExample {
    pub record: SplashExample,
    pub predicted: Query,
    pub gold: Query,
}

impl SplashExample {
    /// Checks the record invariants and parses both queries.
    pub fn validate(&self, schemas: &SchemaSet) -> Result<ValidatedExample, String> {
        for (name, value) in [
            ("question", &self.question),
            ("predicted_sql", &self.predicted_sql),
            ("gold_sql", &self.gold_sql),
            ("feedback", &self.feedback),
        ] {
            if value.trim().is_empty() {
                return Err(format!("{name} is empty"));
            }
        }
        let schema = schemas
            .get(&self.db_id)
            .ok_or_else(|| format!("unknown database `{}`", self.db_id))?;
        let predicted = parse_sql(&self.predicted_sql, schema).map_err(|e| format!("predicted_sql: {e}"))?;
        let gold = parse_sql(&self.gold_sql, schema).map_err(|e| format!("gold_sql: {e}"))?;
        if exact_set_match(&predicted, &gold).map_err(|e| e.to_string())? {
            return Err("predicted_sql matches gold_sql".into());
        }
        Ok(ValidatedExample {
            record: self.clone(),
            predicted,
            gold,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// The first invalid record fails the load.
    #[default]
    Strict,
    /// Invalid records are skipped and reported.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadedDataset {
    pub examples: Vec<ValidatedExample>,
    pub rejected: Vec<Rejection>,
}

impl LoadedDataset {
    pub fn records(&self) -> Vec<SplashExample> {
        self.examples.iter().map(|e| e.record.clone()).collect()
    }
}

/// Reads records, one JSON object per line.
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<(usize, Result<SplashExample, String>)>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, serde_json::from_str(&line).map_err(|e| e.to_string())));
    }
    Ok(out)
}

/// Loads and validates a dataset file.
///
/// A record naming a database missing from `schemas` is always an error;
/// other invalid records fail the load or are skipped per `strictness`.
pub fn load_dataset(path: impl AsRef<Path>, schemas: &SchemaSet, strictness: Strictness) -> Result<LoadedDataset> {
    let path = path.as_ref();
    let mut out = LoadedDataset::default();
    for (line, rec) in read_records(path)? {
        let checked = rec.and_then(|r| {
            if schemas.get(&r.db_id).is_none() {
                return Err(format!("unknown database `{}`", r.db_id));
            }
            r.validate(schemas)
        });
        let fail = |reason: String| Error::InvalidRecord {
            record: format!("{}:{line}", path.display()),
            reason,
        };
        match checked {
            Ok(ex) => out.examples.push(ex),
            Err(reason) if reason.starts_with("unknown database") => return Err(fail(reason)),
            Err(reason) if strictness == Strictness::Strict => return Err(fail(reason)),
            Err(reason) => out.rejected.push(Rejection { line, reason }),
        }
    }
    Ok(out)
}

pub fn write_records(path: impl AsRef<Path>, records: &[SplashExample]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r)?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Field mapping for importing records from another layout.
///
/// ```toml
/// split = "train"
/// [fields]
/// predicted_sql = "predicted_parse"
/// gold_sql = "gold_parse"
/// ```
///
/// Unmapped fields keep their canonical names. A fixed `split` applies to
/// records that lack one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImportConfig {
    #[serde(default)]
    pub fields: BTreeMap<String, String>,
    #[serde(default)]
    pub split: Option<Split>,
}

const CANONICAL_FIELDS: [&str; 8] = [
    "db_id",
    "question",
    "predicted_sql",
    "gold_sql",
    "feedback",
    "split",
    "beam",
    "source",
];

impl ImportConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ImportConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        for k in cfg.fields.keys() {
            if !CANONICAL_FIELDS.contains(&k.as_str()) {
                return Err(Error::InvalidArgument(format!(
                    "{}: unknown field `{k}`",
                    path.display()
                )));
            }
        }
        Ok(cfg)
    }

    /// Converts one external record.
    pub fn convert(&self, value: &serde_json::Value) -> Result<SplashExample, String> {
        let obj = value.as_object().ok_or("record is not an object")?;
        let mut out = serde_json::Map::new();
        for field in CANONICAL_FIELDS {
            let external = self.fields.get(field).map(String::as_str).unwrap_or(field);
            if let Some(v) = obj.get(external) {
                if !v.is_null() {
                    out.insert(field.to_string(), v.clone());
                }
            }
        }
        if !out.contains_key("split") {
            if let Some(s) = self.split {
                out.insert("split".into(), serde_json::Value::String(s.name().into()));
            }
        }
        serde_json::from_value(serde_json::Value::Object(out)).map_err(|e| e.to_string())
    }

    /// Imports a JSON array or a JSON-lines file.
    pub fn import(&self, path: impl AsRef<Path>) -> Result<Vec<SplashExample>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let values: Vec<serde_json::Value> = if text.trim_start().starts_with('[') {
            serde_json::from_str(&text)?
        } else {
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(serde_json::from_str)
                .collect::<std::result::Result<_, _>>()?
        };
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                self.convert(v).map_err(|reason| Error::InvalidRecord {
                    record: format!("{}#{}", path.display(), i + 1),
                    reason,
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub examples: usize,
    pub databases: usize,
    pub unique_questions: usize,
    pub unique_wrong_parses: usize,
    pub unique_gold_parses: usize,
    pub unique_feedbacks: usize,
    pub avg_feedback_tokens: f64,
}

/// Per-split counts; every split is present, empty ones as zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub splits: BTreeMap<Split, SplitSummary>,
}

impl DatasetSummary {
    pub fn get(&self, split: Split) -> &SplitSummary {
        &self.splits[&split]
    }
}

/// Whitespace- and case-insensitive form used for uniqueness counts.
fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

pub fn summary_stats(examples: &[SplashExample]) -> DatasetSummary {
    let mut splits = BTreeMap::new();
    for split in Split::ALL {
        let part: Vec<&SplashExample> = examples.iter().filter(|e| e.split == split).collect();
        let uniq = |f: fn(&SplashExample) -> &str| part.iter().map(|e| normalized(f(e))).collect::<HashSet<_>>().len();
        let tokens: usize = part.iter().map(|e| feedback_tokens(&e.feedback).len()).sum();
        splits.insert(
            split,
            SplitSummary {
                examples: part.len(),
                databases: part.iter().map(|e| e.db_id.as_str()).collect::<HashSet<_>>().len(),
                unique_questions: uniq(|e| &e.question),
                unique_wrong_parses: uniq(|e| &e.predicted_sql),
                unique_gold_parses: uniq(|e| &e.gold_sql),
                unique_feedbacks: uniq(|e| &e.feedback),
                avg_feedback_tokens: if part.is_empty() {
                    0.0
                } else {
                    tokens as f64 / part.len() as f64
                },
            },
        );
    }
    DatasetSummary { splits }
}

/// Partitions examples by database.
///
/// Databases are shuffled with `seed`; the held-out side takes the shuffled
/// prefix whose share of examples is closest to `holdout_fraction`, with at
/// least one database on each side.
pub fn split_by_database(
    examples: &[SplashExample],
    holdout_fraction: f64,
    seed: u64,
) -> Result<(Vec<SplashExample>, Vec<SplashExample>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {holdout_fraction} is outside (0, 1)"
        )));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for e in examples {
        *counts.entry(&e.db_id).or_default() += 1;
    }
    if counts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 databases to split, found {}",
            counts.len()
        )));
    }
    let mut dbs: Vec<&str> = counts.keys().copied().collect();
    dbs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let total = examples.len() as f64;
    let mut best = (f64::INFINITY, 1);
    let mut taken = 0;
    for k in 1..dbs.len() {
        taken += counts[dbs[k - 1]];
        let err = (taken as f64 / total - holdout_fraction).abs();
        if err < best.0 {
            best = (err, k);
        }
    }
    let held: BTreeSet<&str> = dbs[..best.1].iter().copied().collect();
    let (dev, train): (Vec<SplashExample>, Vec<SplashExample>) =
        examples.iter().cloned().partition(|e| held.contains(e.db_id.as_str()));
    Ok((train, dev))
}
