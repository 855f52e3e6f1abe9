//! Natural-language explanations of queries as numbered steps.
//!
//! A query is split at its set operator and trailing `LIMIT`; each part has
//! its `ORDER BY` removed and its body looked up by template key. Bodies
//! without a template are composed clause by clause from the phrasebook.
//! Ordering, limits and set operators become steps of their own, and an
//! ordering on one key followed by `LIMIT 1` is compressed into a single
//! "row with the largest/smallest" step.

mod library;
mod plan;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use library::{load_library, ExplanationTemplate, Phrasebook, Rewrite, TemplateLibrary};
pub use plan::{compress_steps, step_ref, PlanStep, StepPlan};

use crate::error::{Error, Result};
use crate::sql::{
    abstract_template, Aggregate, CmpOp, ColumnRef, Condition, Literal, Operand, Predicate, Query, Schema, SetOperator,
    SlotKind, SlotValue, TableRef, ValueExpr,
};

/// Numbered explanation of one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationSteps {
    pub steps: Vec<String>,
    /// Template keys used, in step order.
    pub templates: Vec<String>,
    /// Keys of bodies explained by the phrasebook instead.
    pub fallbacks: Vec<String>,
}

impl ExplanationSteps {
    /// Lines of the form `1. find ...`.
    pub fn numbered(&self) -> Vec<String> {
        self.steps
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {s}", i + 1))
            .collect()
    }
}

/// A query cut at its top-level set operator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompoundSplit {
    /// One part for a plain query, two for a compound one. The right part
    /// may itself be compound.
    pub parts: Vec<Query>,
    pub combiner: Option<SetOperator>,
    /// The trailing `LIMIT`, removed from the last part.
    pub limit: Option<u64>,
}

pub fn split_compound(query: &Query) -> CompoundSplit {
    let mut q = query.clone();
    match q.compound.take() {
        None => {
            let limit = q.limit.take();
            CompoundSplit {
                parts: vec![q],
                combiner: None,
                limit,
            }
        }
        Some((op, rhs)) => {
            let mut rhs = *rhs;
            let limit = take_last_limit(&mut rhs);
            CompoundSplit {
                parts: vec![q, rhs],
                combiner: Some(op),
                limit,
            }
        }
    }
}

fn take_last_limit(q: &mut Query) -> Option<u64> {
    match &mut q.compound {
        Some((_, rhs)) => take_last_limit(rhs),
        None => q.limit.take(),
    }
}

/// Explains `query`, which must only join tables on key relationships.
pub fn explain(query: &Query, schema: &Schema, library: &TemplateLibrary) -> Result<ExplanationSteps> {
    check_joins(query, schema)?;
    let mut cx = Composer {
        library,
        plan: StepPlan::default(),
        templates: Vec::new(),
        fallbacks: Vec::new(),
    };
    cx.query(query);
    let plan = compress_steps(cx.plan);
    Ok(ExplanationSteps {
        steps: plan.render(library),
        templates: cx.templates,
        fallbacks: cx.fallbacks,
    })
}

fn check_joins(query: &Query, schema: &Schema) -> Result<()> {
    for j in &query.from.joins {
        if !schema.is_key_join(&j.left, &j.right) {
            return Err(Error::NotExplainable(j.to_string()));
        }
    }
    for sub in query.subqueries() {
        check_joins(sub, schema)?;
    }
    Ok(())
}

/// Template keys of the parts of a query, as looked up by [`explain`].
pub fn body_keys(query: &Query) -> Vec<String> {
    let split = split_compound(query);
    let mut keys = Vec::new();
    for part in &split.parts {
        if part.compound.is_some() || part.limit.is_some() {
            keys.extend(body_keys(part));
        } else {
            let mut body = part.clone();
            body.order_by.clear();
            keys.push(abstract_template(&body).key);
        }
    }
    keys
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub total: usize,
    /// Queries whose every part has a template.
    pub matched: usize,
    pub fraction: f64,
    /// Keys without a template, most frequent first.
    pub unmatched: Vec<(String, usize)>,
}

pub fn coverage(queries: &[Query], library: &TemplateLibrary) -> CoverageReport {
    let mut matched = 0;
    let mut missing: BTreeMap<String, usize> = BTreeMap::new();
    for q in queries {
        let mut all = true;
        for key in body_keys(q) {
            if library.get(&key).is_none() {
                all = false;
                *missing.entry(key).or_default() += 1;
            }
        }
        if all {
            matched += 1;
        }
    }
    let mut unmatched: Vec<(String, usize)> = missing.into_iter().collect();
    unmatched.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    CoverageReport {
        total: queries.len(),
        matched,
        fraction: if queries.is_empty() {
            0.0
        } else {
            matched as f64 / queries.len() as f64
        },
        unmatched,
    }
}

fn aggregate_word(agg: Aggregate) -> &'static str {
    match agg {
        Aggregate::None => "",
        Aggregate::Count => "number",
        Aggregate::Sum => "total",
        Aggregate::Avg => "average",
        Aggregate::Min => "minimum",
        Aggregate::Max => "maximum",
    }
}

fn operator_words(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "equals",
        CmpOp::Ne => "not equals",
        CmpOp::Lt => "less than",
        CmpOp::Le => "less than or equals",
        CmpOp::Gt => "greater than",
        CmpOp::Ge => "greater than or equals",
        CmpOp::Like => "like",
        CmpOp::NotLike => "not like",
        CmpOp::Between => "between",
        CmpOp::In => "is in",
        CmpOp::NotIn => "is not in",
    }
}

fn column_words(c: &ColumnRef) -> String {
    match c {
        ColumnRef::Star => "rows".into(),
        ColumnRef::Column(c) => c.column.clone(),
    }
}

/// `salary`, `average salary`, `number of rows`, `number of different name`.
fn value_words(e: &ValueExpr) -> String {
    let col = column_words(&e.column);
    match (e.agg, e.distinct) {
        (Aggregate::None, _) if e.column == ColumnRef::Star => "all the columns".into(),
        (Aggregate::None, _) => col,
        (Aggregate::Count, true) => format!("number of different {col}"),
        (Aggregate::Count, false) => format!("number of {col}"),
        (agg, true) => format!("{} of different {col}", aggregate_word(agg)),
        (agg, false) => format!("{} {col}", aggregate_word(agg)),
    }
}

fn item_words(e: &ValueExpr) -> String {
    if e.agg == Aggregate::None {
        value_words(e)
    } else {
        format!("the {}", value_words(e))
    }
}

fn list_words(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn slot_words(v: &SlotValue) -> String {
    match v {
        SlotValue::Table(t) => t.clone(),
        SlotValue::Column(c) => c.column.clone(),
        SlotValue::Aggregate(a) => aggregate_word(*a).into(),
        SlotValue::Operator(op) => operator_words(*op).into(),
        SlotValue::Literal(l) => l.to_string(),
        SlotValue::Limit(n) => n.to_string(),
    }
}

enum Source {
    Table(String),
    Step(usize),
}

struct Composer<'a> {
    library: &'a TemplateLibrary,
    plan: StepPlan,
    templates: Vec<String>,
    fallbacks: Vec<String>,
}

impl Composer<'_> {
    fn push_text(&mut self, text: String) -> usize {
        self.plan.push(PlanStep::Text(text))
    }

    fn phrase(&self, name: &str, slots: &[(&str, &str)]) -> String {
        self.library.phrasebook.render(name, slots)
    }

    fn source_words(&self, s: &Source) -> String {
        match s {
            Source::Table(t) => self.phrase("table", &[("TABLE", t)]),
            Source::Step(i) => self.phrase("results", &[("STEP", &step_ref(*i))]),
        }
    }

    /// Adds the steps for `q` and returns the index of its final step.
    fn query(&mut self, q: &Query) -> usize {
        let split = split_compound(q);
        let ends: Vec<usize> = split
            .parts
            .iter()
            .map(|p| {
                if p.compound.is_some() || p.limit.is_some() {
                    self.query(p)
                } else {
                    self.part(p)
                }
            })
            .collect();
        let mut last = *ends.last().expect("at least one part");
        if let Some(op) = split.combiner {
            last = self.plan.push(PlanStep::Combine {
                op,
                left: ends[0],
                right: ends[1],
            });
        }
        if let Some(n) = split.limit {
            last = self.plan.push(PlanStep::Limit { source: last, n });
        }
        last
    }

    fn part(&mut self, q: &Query) -> usize {
        let mut body = q.clone();
        body.order_by.clear();
        let template = abstract_template(&body);
        let mut last = match self.library.get(&template.key) {
            Some(t) => {
                self.templates.push(template.key.clone());
                let offset = self.plan.len();
                let mut idx = offset;
                for pattern in &t.steps {
                    let text = library::fill(pattern, |name| {
                        let split = name.find(|c: char| c.is_ascii_digit())?;
                        let (kind, n) = name.split_at(split);
                        let n: usize = n.parse().ok()?;
                        if kind == "STEP" {
                            return Some(step_ref(offset + n - 1));
                        }
                        let kind = SlotKind::from_placeholder(kind)?;
                        template.values_of(kind).get(n - 1).map(|v| slot_words(v))
                    });
                    idx = self.push_text(text);
                }
                idx
            }
            None => {
                self.fallbacks.push(template.key);
                self.compose(&body)
            }
        };
        if !q.order_by.is_empty() {
            last = self.plan.push(PlanStep::Order {
                source: last,
                keys: q.order_by.iter().map(|o| (value_words(&o.expr), o.direction)).collect(),
            });
        }
        last
    }

    fn compose(&mut self, q: &Query) -> usize {
        let mut sources = Vec::new();
        for t in &q.from.tables {
            sources.push(match t {
                TableRef::Named(name) => Source::Table(name.clone()),
                TableRef::Derived { query, .. } => Source::Step(self.query(query)),
            });
        }
        let mut sources = sources.into_iter();
        let mut source = sources.next().expect("FROM has a table");
        for next in sources {
            let text = self.phrase(
                "join",
                &[
                    ("LEFT", &self.source_words(&source)),
                    ("RIGHT", &self.source_words(&next)),
                ],
            );
            source = Source::Step(self.push_text(text));
        }

        let items: Vec<String> = q.select.iter().map(item_words).collect();
        let items = list_words(&items);
        let mut selection = if q.group_by.is_empty() {
            let mut text = self.phrase("select", &[("ITEMS", &items), ("SOURCE", &self.source_words(&source))]);
            if let Some(c) = &q.where_clause {
                let cond = self.condition(c);
                text = format!("{text} {}", self.phrase("condition", &[("COND", &cond)]));
            }
            text
        } else {
            if let Some(c) = &q.where_clause {
                let cond = self.condition(c);
                let text = self.phrase("filter", &[("SOURCE", &self.source_words(&source)), ("COND", &cond)]);
                source = Source::Step(self.push_text(text));
            }
            let group: Vec<String> = q.group_by.iter().map(|g| g.column.clone()).collect();
            let group = list_words(&group);
            let aggs = aggregates_of(q);
            let text = if aggs.is_empty() {
                self.phrase(
                    "grouping",
                    &[("GROUP", &group), ("SOURCE", &self.source_words(&source))],
                )
            } else {
                let aggs: Vec<String> = aggs.iter().map(|e| item_words(e)).collect();
                self.phrase(
                    "aggregation",
                    &[
                        ("GROUP", &group),
                        ("SOURCE", &self.source_words(&source)),
                        ("AGGS", &list_words(&aggs)),
                    ],
                )
            };
            source = Source::Step(self.push_text(text));
            if let Some(c) = &q.having {
                let cond = self.condition(c);
                let text = self.phrase("having", &[("SOURCE", &self.source_words(&source)), ("COND", &cond)]);
                source = Source::Step(self.push_text(text));
            }
            self.phrase("select", &[("ITEMS", &items), ("SOURCE", &self.source_words(&source))])
        };
        if q.distinct {
            selection = format!("{selection} {}", self.phrase("distinct", &[]));
        }
        self.push_text(selection)
    }

    fn condition(&mut self, c: &Condition) -> String {
        match c {
            Condition::Atom(p) => self.predicate(p),
            Condition::And(parts) => parts
                .iter()
                .map(|p| match p {
                    Condition::Or(_) => format!("({})", self.condition(p)),
                    _ => self.condition(p),
                })
                .collect::<Vec<_>>()
                .join(" and "),
            Condition::Or(parts) => parts.iter().map(|p| self.condition(p)).collect::<Vec<_>>().join(" or "),
        }
    }

    fn predicate(&mut self, p: &Predicate) -> String {
        let left = value_words(&p.left);
        let right = match &p.right {
            Operand::Literal(l) => literal_words(l),
            Operand::Column(c) => column_words(c),
            Operand::Subquery(q) => {
                let i = self.query(q);
                self.source_words(&Source::Step(i))
            }
            Operand::Range(lo, hi) => format!("{} and {}", literal_words(lo), literal_words(hi)),
        };
        format!("{left} {} {right}", operator_words(p.op))
    }
}

fn literal_words(l: &Literal) -> String {
    l.to_string()
}

/// Aggregates used in the select list, having and order by, first use first.
fn aggregates_of(q: &Query) -> Vec<&ValueExpr> {
    let mut out: Vec<&ValueExpr> = Vec::new();
    let having = q.having.iter().flat_map(|c| c.atoms()).map(|a| &a.left);
    let exprs = q.select.iter().chain(having).chain(q.order_by.iter().map(|o| &o.expr));
    for e in exprs {
        if e.agg != Aggregate::None && !out.contains(&e) {
            out.push(e);
        }
    }
    out
}
