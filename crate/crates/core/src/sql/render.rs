//! Deterministic SQL text for canonical queries, and the placeholder
//! skeleton used as a template key.

use serde::{Deserialize, Serialize};

use super::ast::*;

/// Renders the canonical SQL text of `query`.
///
/// Keywords are upper case, aggregates lower case, every column is
/// table-qualified and string literals are double-quoted.
pub fn render_sql(query: &Query) -> String {
    let mut w = Writer::concrete();
    w.query(query);
    w.out
}

/// Kind of an abstracted element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SlotKind {
    Tab,
    Col,
    Agg,
    Op,
    Lit,
}

impl SlotKind {
    pub const ALL: [SlotKind; 5] = [SlotKind::Tab, SlotKind::Col, SlotKind::Agg, SlotKind::Op, SlotKind::Lit];

    pub fn placeholder(self) -> &'static str {
        match self {
            SlotKind::Tab => "TAB",
            SlotKind::Col => "COL",
            SlotKind::Agg => "AGG",
            SlotKind::Op => "OP",
            SlotKind::Lit => "LIT",
        }
    }

    pub fn from_placeholder(s: &str) -> Option<SlotKind> {
        SlotKind::ALL.into_iter().find(|k| k.placeholder() == s)
    }
}

/// The concrete value a placeholder replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotValue {
    Table(String),
    Column(QualifiedColumn),
    Aggregate(Aggregate),
    Operator(CmpOp),
    Literal(Literal),
    Limit(u64),
}

impl SlotValue {
    pub fn kind(&self) -> SlotKind {
        match self {
            SlotValue::Table(_) => SlotKind::Tab,
            SlotValue::Column(_) => SlotKind::Col,
            SlotValue::Aggregate(_) => SlotKind::Agg,
            SlotValue::Operator(_) => SlotKind::Op,
            SlotValue::Literal(_) | SlotValue::Limit(_) => SlotKind::Lit,
        }
    }
}

/// A query skeleton with literals, table and column names, aggregators and
/// comparison operators replaced by typed placeholders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTemplate {
    /// Stable serialized form, e.g. `SELECT COL FROM TAB WHERE COL OP LIT`.
    pub key: String,
    /// Replaced values in key order.
    pub slots: Vec<SlotValue>,
}

impl QueryTemplate {
    /// Values of one kind, in key order; index 0 binds `{KIND1}`.
    pub fn values_of(&self, kind: SlotKind) -> Vec<&SlotValue> {
        self.slots.iter().filter(|s| s.kind() == kind).collect()
    }
}

pub fn abstract_template(query: &Query) -> QueryTemplate {
    let mut w = Writer::abstracted();
    w.query(query);
    QueryTemplate {
        key: w.out,
        slots: w.slots,
    }
}

/// Number of placeholders of each kind appearing in a template key.
pub fn placeholder_counts(key: &str) -> [usize; 5] {
    let mut counts = [0; 5];
    for word in key.split(|c: char| !c.is_ascii_alphanumeric()) {
        if let Some(kind) = SlotKind::from_placeholder(word) {
            counts[kind as usize] += 1;
        }
    }
    counts
}

struct Writer {
    out: String,
    abstracted: bool,
    slots: Vec<SlotValue>,
}

impl Writer {
    fn concrete() -> Self {
        Writer {
            out: String::new(),
            abstracted: false,
            slots: Vec::new(),
        }
    }

    fn abstracted() -> Self {
        Writer {
            out: String::new(),
            abstracted: true,
            slots: Vec::new(),
        }
    }

    fn push(&mut self, s: &str) {
        self.out.push_str(s);
    }

    fn slot(&mut self, value: SlotValue, concrete: &str) {
        if self.abstracted {
            let ph = value.kind().placeholder();
            self.out.push_str(ph);
            self.slots.push(value);
        } else {
            self.out.push_str(concrete);
        }
    }

    fn query(&mut self, q: &Query) {
        self.push("SELECT ");
        if q.distinct {
            self.push("DISTINCT ");
        }
        for (i, e) in q.select.iter().enumerate() {
            if i > 0 {
                self.push(", ");
            }
            self.value_expr(e);
        }
        self.push(" FROM ");
        self.from(&q.from);
        if let Some(c) = &q.where_clause {
            self.push(" WHERE ");
            self.condition(c);
        }
        if !q.group_by.is_empty() {
            self.push(" GROUP BY ");
            for (i, g) in q.group_by.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.column(g);
            }
        }
        if let Some(c) = &q.having {
            self.push(" HAVING ");
            self.condition(c);
        }
        if !q.order_by.is_empty() {
            self.push(" ORDER BY ");
            for (i, o) in q.order_by.iter().enumerate() {
                if i > 0 {
                    self.push(", ");
                }
                self.value_expr(&o.expr);
                self.push(match o.direction {
                    Direction::Asc => " ASC",
                    Direction::Desc => " DESC",
                });
            }
        }
        if let Some(n) = q.limit {
            self.push(" LIMIT ");
            self.slot(SlotValue::Limit(n), &n.to_string());
        }
        if let Some((op, rhs)) = &q.compound {
            self.push(" ");
            self.push(op.keyword());
            self.push(" ");
            self.query(rhs);
        }
    }

    fn from(&mut self, from: &FromClause) {
        let mut joins = from.joins.iter();
        let n = from.tables.len();
        for (i, t) in from.tables.iter().enumerate() {
            if i > 0 {
                self.push(" JOIN ");
            }
            match t {
                TableRef::Named(name) => self.slot(SlotValue::Table(name.clone()), name),
                TableRef::Derived { name, query } => {
                    self.push("(");
                    self.query(query);
                    self.push(")");
                    if !self.abstracted {
                        self.push(" AS ");
                        self.push(name);
                    }
                }
            }
            if i > 0 {
                // one condition per join, any surplus on the last one
                let take = if i + 1 == n { usize::MAX } else { 1 };
                let mut first = true;
                for j in joins.by_ref().take(take) {
                    self.push(if first { " ON " } else { " AND " });
                    first = false;
                    self.column(&j.left);
                    self.push(" = ");
                    self.column(&j.right);
                }
            }
        }
    }

    fn column(&mut self, c: &QualifiedColumn) {
        let text = format!("{}.{}", c.table, c.column);
        self.slot(SlotValue::Column(c.clone()), &text);
    }

    fn column_ref(&mut self, c: &ColumnRef) {
        match c {
            ColumnRef::Star => self.push("*"),
            ColumnRef::Column(c) => self.column(c),
        }
    }

    fn value_expr(&mut self, e: &ValueExpr) {
        if e.agg == Aggregate::None {
            self.column_ref(&e.column);
            return;
        }
        self.slot(SlotValue::Aggregate(e.agg), e.agg.keyword());
        self.push("(");
        if e.distinct {
            self.push("DISTINCT ");
        }
        self.column_ref(&e.column);
        self.push(")");
    }

    fn literal(&mut self, l: &Literal) {
        let text = match l {
            Literal::Number(n) => n.clone(),
            Literal::Text(s) => format!("\"{}\"", s.replace('"', "\"\"")),
        };
        self.slot(SlotValue::Literal(l.clone()), &text);
    }

    fn condition(&mut self, c: &Condition) {
        match c {
            Condition::Atom(p) => self.predicate(p),
            Condition::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        self.push(" AND ");
                    }
                    let paren = matches!(p, Condition::Or(_));
                    if paren {
                        self.push("(");
                    }
                    self.condition(p);
                    if paren {
                        self.push(")");
                    }
                }
            }
            Condition::Or(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        self.push(" OR ");
                    }
                    self.condition(p);
                }
            }
        }
    }

    fn predicate(&mut self, p: &Predicate) {
        self.value_expr(&p.left);
        self.push(" ");
        if p.op.is_comparison() {
            self.slot(SlotValue::Operator(p.op), p.op.sql());
        } else {
            self.push(p.op.sql());
        }
        self.push(" ");
        match &p.right {
            Operand::Literal(l) => self.literal(l),
            Operand::Column(c) => self.column_ref(c),
            Operand::Subquery(q) => {
                self.push("(");
                self.query(q);
                self.push(")");
            }
            Operand::Range(lo, hi) => {
                self.literal(lo);
                self.push(" AND ");
                self.literal(hi);
            }
        }
    }
}
