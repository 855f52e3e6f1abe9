//! Beam re-ranking baselines and the near-miss rule for harvesting extra
//! erroneous parses.
//!
//! A beam is the parser's ranked candidate list; rank 0 is the parser's own
//! (mispredicted) choice. The sampling baselines never return rank 0.

use std::collections::BTreeSet;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::diff::diff_schema_items;
use crate::error::{Error, Result};
use crate::metrics::canonicalize;
use crate::sql::{
    feedback_tokens, parse_sql, render_sql, Aggregate, CmpOp, ColumnRef, Direction, Literal, Operand, Query, Schema,
    TableRef,
};

/// Largest score gap between the top two candidates for the runner-up to
/// count as a near miss.
pub const NEAR_MISS_GAP: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamCandidate {
    pub query: Query,
    /// Parser probability.
    pub score: f64,
    pub rank: usize,
}

/// Checks ranks are `0..n` in order and scores in `[0, 1]`, non-increasing.
pub fn validate_beam(beam: &[BeamCandidate]) -> Result<()> {
    for (i, c) in beam.iter().enumerate() {
        if c.rank != i {
            return Err(Error::InvalidBeam(format!("candidate {i} has rank {}", c.rank)));
        }
        if !(0.0..=1.0).contains(&c.score) {
            return Err(Error::InvalidBeam(format!(
                "candidate {i} has score {} outside [0, 1]",
                c.score
            )));
        }
        if i > 0 && c.score > beam[i - 1].score {
            return Err(Error::InvalidBeam(format!("score rises at rank {i}")));
        }
    }
    Ok(())
}

/// Builds a beam from `(query, score)` pairs in rank order.
pub fn beam_from(candidates: impl IntoIterator<Item = (Query, f64)>) -> Result<Vec<BeamCandidate>> {
    let beam: Vec<BeamCandidate> = candidates
        .into_iter()
        .enumerate()
        .map(|(rank, (query, score))| BeamCandidate { query, score, rank })
        .collect();
    validate_beam(&beam)?;
    Ok(beam)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankMethod {
    Uniform,
    Score,
    SecondBest,
    Handcrafted,
}

impl RerankMethod {
    pub const ALL: [RerankMethod; 4] = [
        RerankMethod::Uniform,
        RerankMethod::Score,
        RerankMethod::SecondBest,
        RerankMethod::Handcrafted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RerankMethod::Uniform => "uniform",
            RerankMethod::Score => "score",
            RerankMethod::SecondBest => "second_best",
            RerankMethod::Handcrafted => "handcrafted",
        }
    }
}

impl fmt::Display for RerankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RerankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(RerankMethod::Uniform),
            "score" => Ok(RerankMethod::Score),
            "second" | "second_best" => Ok(RerankMethod::SecondBest),
            "handcrafted" => Ok(RerankMethod::Handcrafted),
            other => Err(Error::InvalidArgument(format!(
                "unknown re-ranking method `{other}` (expected uniform, score, second or handcrafted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankChoice {
    pub chosen: BeamCandidate,
    pub method: RerankMethod,
    /// Feedback match score of every candidate, for `handcrafted`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<usize>>,
}

fn require(beam: &[BeamCandidate], needed: usize) -> Result<()> {
    if beam.len() < needed {
        return Err(Error::BeamTooSmall {
            found: beam.len(),
            needed,
        });
    }
    validate_beam(beam)
}

fn choice(beam: &[BeamCandidate], i: usize, method: RerankMethod) -> RerankChoice {
    RerankChoice {
        chosen: beam[i].clone(),
        method,
        scores: None,
    }
}

/// Uniform draw among all candidates but the top one.
pub fn rerank_uniform(beam: &[BeamCandidate], seed: u64) -> Result<RerankChoice> {
    require(beam, 2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = rng.random_range(1..beam.len());
    Ok(choice(beam, i, RerankMethod::Uniform))
}

/// Draw among all candidates but the top one, proportional to parser score.
pub fn rerank_score(beam: &[BeamCandidate], seed: u64) -> Result<RerankChoice> {
    require(beam, 2)?;
    let dist = WeightedIndex::new(beam[1..].iter().map(|c| c.score))
        .map_err(|_| Error::InvalidBeam("all scores below the top candidate are zero".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = 1 + dist.sample(&mut rng);
    Ok(choice(beam, i, RerankMethod::Score))
}

pub fn rerank_second(beam: &[BeamCandidate]) -> Result<RerankChoice> {
    require(beam, 2)?;
    Ok(choice(beam, 1, RerankMethod::SecondBest))
}

/// Number of schema items differing between `candidate` and `mispredicted`
/// whose tokens all occur in the feedback.
pub fn feedback_match_score(candidate: &Query, mispredicted: &Query, feedback: &str) -> usize {
    let words: BTreeSet<String> = feedback_tokens(feedback).into_iter().collect();
    diff_schema_items(candidate, mispredicted)
        .iter()
        .filter(|item| {
            let toks = feedback_tokens(item);
            !toks.is_empty() && toks.iter().all(|t| words.contains(t))
        })
        .count()
}

/// Candidate with the highest feedback match score; ties go to the lowest
/// rank. The mispredicted parse stays in the pool.
pub fn rerank_handcrafted(beam: &[BeamCandidate], mispredicted: &Query, feedback: &str) -> Result<RerankChoice> {
    require(beam, 1)?;
    let scores: Vec<usize> = beam
        .iter()
        .map(|c| feedback_match_score(&c.query, mispredicted, feedback))
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    Ok(RerankChoice {
        chosen: beam[best].clone(),
        method: RerankMethod::Handcrafted,
        scores: Some(scores),
    })
}

pub fn rerank(
    method: RerankMethod,
    beam: &[BeamCandidate],
    mispredicted: &Query,
    feedback: &str,
    seed: u64,
) -> Result<RerankChoice> {
    match method {
        RerankMethod::Uniform => rerank_uniform(beam, seed),
        RerankMethod::Score => rerank_score(beam, seed),
        RerankMethod::SecondBest => rerank_second(beam),
        RerankMethod::Handcrafted => rerank_handcrafted(beam, mispredicted, feedback),
    }
}

/// The runner-up if its score is strictly within [`NEAR_MISS_GAP`] of the top.
pub fn near_miss_filter(beam: &[BeamCandidate]) -> Result<Option<BeamCandidate>> {
    require(beam, 2)?;
    // a small slack keeps a gap that is 0.2 up to float error on the "no" side
    let gap = beam[0].score - beam[1].score;
    Ok((gap < NEAR_MISS_GAP - 1e-9).then(|| beam[1].clone()))
}

/// One line of a beam file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamRecord {
    pub id: String,
    pub candidates: Vec<RawCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawCandidate {
    pub sql: String,
    pub score: f64,
}

impl BeamRecord {
    pub fn parse(&self, schema: &Schema) -> Result<Vec<BeamCandidate>> {
        let queries = self
            .candidates
            .iter()
            .map(|c| Ok((parse_sql(&c.sql, schema)?, c.score)))
            .collect::<Result<Vec<_>>>()?;
        beam_from(queries).map_err(|e| Error::InvalidRecord {
            record: self.id.clone(),
            reason: e.to_string(),
        })
    }

    pub fn from_beam(id: impl Into<String>, beam: &[BeamCandidate]) -> Self {
        BeamRecord {
            id: id.into(),
            candidates: beam
                .iter()
                .map(|c| RawCandidate {
                    sql: render_sql(&c.query),
                    score: c.score,
                })
                .collect(),
        }
    }
}

/// Reads a beam file, one JSON record per line.
pub fn load_beams(path: impl AsRef<Path>) -> Result<Vec<BeamRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BeamRecord = serde_json::from_str(&line).map_err(|e| Error::InvalidRecord {
            record: format!("{}:{}", path.display(), i + 1),
            reason: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Builds a synthetic beam of `size` candidates for a wrong parse.
///
/// Rank 0 is `predicted` and the gold parse sits at a seeded rank from 2
/// on, so the second-best baseline never finds it. The other candidates are
/// single edits of `predicted` that are set-distinct from every other
/// candidate. Scores are seeded and non-increasing.
pub fn synthetic_beam(
    predicted: &Query,
    gold: &Query,
    schema: &Schema,
    size: usize,
    seed: u64,
) -> Result<Vec<BeamCandidate>> {
    if size < 3 {
        return Err(Error::InvalidArgument(
            "synthetic beams need at least 3 candidates".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<Query> = [canonicalize(predicted), canonicalize(gold)].into_iter().collect();
    let mut pool = mutations(predicted, schema);
    pool.shuffle(&mut rng);
    let mut fillers: Vec<Query> = Vec::new();
    for m in pool {
        if fillers.len() + 2 == size {
            break;
        }
        if seen.insert(canonicalize(&m)) {
            fillers.push(m);
        }
    }
    if fillers.is_empty() {
        return Err(Error::InvalidArgument(
            "no distinct variants of the predicted parse".into(),
        ));
    }
    let gold_rank = rng.random_range(2..=fillers.len() + 1);
    let mut queries = vec![predicted.clone()];
    queries.extend(fillers);
    queries.insert(gold_rank, gold.clone());

    let mut scores: Vec<f64> = (0..queries.len()).map(|_| rng.random_range(0.0..1.0)).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    let total: f64 = scores.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    beam_from(queries.into_iter().zip(scores.into_iter().map(|s| s / total)))
}

/// Single-edit variants of a query.
fn mutations(q: &Query, schema: &Schema) -> Vec<Query> {
    let mut out = Vec::new();
    let named: Vec<&str> = q
        .from
        .tables
        .iter()
        .filter_map(|t| match t {
            TableRef::Named(n) => Some(n.as_str()),
            TableRef::Derived { .. } => None,
        })
        .collect();
    for (i, item) in q.select.iter().enumerate() {
        if let ColumnRef::Column(col) = &item.column {
            if let Some(table) = schema.table(&col.table) {
                for c in &table.columns {
                    if c.name != col.column {
                        let mut m = q.clone();
                        m.select[i].column = ColumnRef::new(col.table.clone(), c.name.clone());
                        out.push(m);
                    }
                }
            }
        }
        for agg in [Aggregate::Count, Aggregate::Max, Aggregate::Min] {
            if agg != item.agg && !(item.column == ColumnRef::Star && agg != Aggregate::Count) {
                let mut m = q.clone();
                m.select[i].agg = agg;
                out.push(m);
            }
        }
    }
    let mut m = q.clone();
    m.distinct = !m.distinct;
    out.push(m);
    if let Some(table) = named.first().and_then(|t| schema.table(t)) {
        if let Some(c) = table.columns.first() {
            let mut m = q.clone();
            m.select.push(crate::sql::ValueExpr::column(ColumnRef::new(
                table.name.clone(),
                c.name.clone(),
            )));
            out.push(m);
        }
    }
    if q.select.len() > 1 {
        let mut m = q.clone();
        m.select.pop();
        out.push(m);
    }
    if let Some(cond) = &q.where_clause {
        let atoms = cond.atoms().len();
        for a in 0..atoms {
            for op in [CmpOp::Eq, CmpOp::Ne, CmpOp::Gt, CmpOp::Lt, CmpOp::Ge, CmpOp::Le] {
                let mut m = q.clone();
                let p = &mut m.where_clause.as_mut().expect("cloned").atoms_mut()[a];
                if p.op.is_comparison() && p.op != op && !matches!(p.right, Operand::Subquery(_)) {
                    p.op = op;
                    out.push(m);
                }
            }
            let mut m = q.clone();
            let p = &mut m.where_clause.as_mut().expect("cloned").atoms_mut()[a];
            if let Operand::Literal(Literal::Number(n)) = &p.right {
                if let Ok(v) = n.parse::<i64>() {
                    p.right = Operand::Literal(Literal::Number((v + 1).to_string()));
                    out.push(m);
                }
            }
        }
        let mut m = q.clone();
        m.where_clause = None;
        out.push(m);
    }
    for (i, o) in q.order_by.iter().enumerate() {
        let mut m = q.clone();
        m.order_by[i].direction = match o.direction {
            Direction::Asc => Direction::Desc,
            Direction::Desc => Direction::Asc,
        };
        out.push(m);
    }
    if let Some(n) = q.limit {
        let mut m = q.clone();
        m.limit = Some(n + 1);
        out.push(m);
    }
    out
}
