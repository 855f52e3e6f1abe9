//! Canonical structural form of a SQL query.
//!
//! Every column reference is table-qualified with the schema-declared
//! casing; aliases never survive parsing. Tables introduced by a `FROM`
//! subquery are named `derived1`, `derived2`, ... in order of appearance.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use super::schema::QualifiedColumn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    None,
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl Aggregate {
    pub const ALL: [Aggregate; 6] = [
        Aggregate::None,
        Aggregate::Count,
        Aggregate::Sum,
        Aggregate::Avg,
        Aggregate::Min,
        Aggregate::Max,
    ];

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_lowercase().as_str() {
            "count" => Some(Aggregate::Count),
            "sum" => Some(Aggregate::Sum),
            "avg" => Some(Aggregate::Avg),
            "min" => Some(Aggregate::Min),
            "max" => Some(Aggregate::Max),
            _ => None,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Aggregate::None => "",
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
            Aggregate::Avg => "avg",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        }
    }
}

/// A column of some table in scope, or `*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ColumnRef {
    Star,
    Column(QualifiedColumn),
}

impl ColumnRef {
    pub fn new(table: impl Into<String>, column: impl Into<String>) -> Self {
        ColumnRef::Column(QualifiedColumn {
            table: table.into(),
            column: column.into(),
        })
    }

    pub fn as_column(&self) -> Option<&QualifiedColumn> {
        match self {
            ColumnRef::Star => None,
            ColumnRef::Column(c) => Some(c),
        }
    }
}

/// `agg(DISTINCT col)`, `agg(col)` or a bare column.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ValueExpr {
    pub agg: Aggregate,
    pub column: ColumnRef,
    /// `DISTINCT` inside an aggregate call. Always false when `agg` is `None`.
    pub distinct: bool,
}

impl ValueExpr {
    pub fn column(col: ColumnRef) -> Self {
        ValueExpr {
            agg: Aggregate::None,
            column: col,
            distinct: false,
        }
    }

    pub fn aggregate(agg: Aggregate, col: ColumnRef) -> Self {
        ValueExpr {
            agg,
            column: col,
            distinct: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Like,
    NotLike,
    Between,
    In,
    NotIn,
}

impl CmpOp {
    /// Plain comparisons, the ones abstracted to an `OP` placeholder.
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            CmpOp::Eq | CmpOp::Ne | CmpOp::Lt | CmpOp::Le | CmpOp::Gt | CmpOp::Ge
        )
    }

    pub fn sql(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Like => "LIKE",
            CmpOp::NotLike => "NOT LIKE",
            CmpOp::Between => "BETWEEN",
            CmpOp::In => "IN",
            CmpOp::NotIn => "NOT IN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Literal {
    /// Numeric literal, kept as written (`2`, `-3.5`).
    Number(String),
    /// String literal with quotes removed.
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => f.write_str(n),
            Literal::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Operand {
    Literal(Literal),
    Column(ColumnRef),
    Subquery(Box<Query>),
    /// The two bounds of `BETWEEN`.
    Range(Literal, Literal),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Predicate {
    pub left: ValueExpr,
    pub op: CmpOp,
    pub right: Operand,
}

/// AND/OR tree. `And` and `Or` nodes always hold at least two children and
/// never a direct child of their own kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Condition {
    Atom(Predicate),
    And(Vec<Condition>),
    Or(Vec<Condition>),
}

impl Condition {
    pub fn and(parts: Vec<Condition>) -> Condition {
        Self::join(parts, true)
    }

    pub fn or(parts: Vec<Condition>) -> Condition {
        Self::join(parts, false)
    }

    fn join(parts: Vec<Condition>, conj: bool) -> Condition {
        let mut flat = Vec::with_capacity(parts.len());
        for p in parts {
            match (p, conj) {
                (Condition::And(inner), true) | (Condition::Or(inner), false) => flat.extend(inner),
                (other, _) => flat.push(other),
            }
        }
        if flat.len() == 1 {
            return flat.pop().expect("one element");
        }
        if conj {
            Condition::And(flat)
        } else {
            Condition::Or(flat)
        }
    }

    /// Top-level conjuncts (a non-AND condition is its own single conjunct).
    pub fn conjuncts(&self) -> &[Condition] {
        match self {
            Condition::And(parts) => parts,
            other => std::slice::from_ref(other),
        }
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Condition::Atom(p) => out.push(p),
            Condition::And(parts) | Condition::Or(parts) => {
                for p in parts {
                    p.collect_atoms(out);
                }
            }
        }
    }

    pub(crate) fn atoms_mut(&mut self) -> Vec<&mut Predicate> {
        let mut out = Vec::new();
        self.collect_atoms_mut(&mut out);
        out
    }

    fn collect_atoms_mut<'a>(&'a mut self, out: &mut Vec<&'a mut Predicate>) {
        match self {
            Condition::Atom(p) => out.push(p),
            Condition::And(parts) | Condition::Or(parts) => {
                for p in parts {
                    p.collect_atoms_mut(out);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableRef {
    Named(String),
    Derived { name: String, query: Box<Query> },
}

impl TableRef {
    pub fn name(&self) -> &str {
        match self {
            TableRef::Named(n) => n,
            TableRef::Derived { name, .. } => name,
        }
    }
}

/// Inner-join equality between two columns.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JoinCondition {
    pub left: QualifiedColumn,
    pub right: QualifiedColumn,
}

impl JoinCondition {
    /// Orientation-free form, used for set comparison.
    pub fn normalized(&self) -> JoinCondition {
        if self.left <= self.right {
            self.clone()
        } else {
            JoinCondition {
                left: self.right.clone(),
                right: self.left.clone(),
            }
        }
    }
}

impl fmt::Display for JoinCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.left, self.right)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FromClause {
    pub tables: Vec<TableRef>,
    pub joins: Vec<JoinCondition>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderItem {
    pub expr: ValueExpr,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOperator {
    Intersect,
    Union,
    Except,
}

impl SetOperator {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOperator::Intersect => "INTERSECT",
            SetOperator::Union => "UNION",
            SetOperator::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub db_id: String,
    /// `SELECT DISTINCT`.
    pub distinct: bool,
    pub select: Vec<ValueExpr>,
    pub from: FromClause,
    pub where_clause: Option<Condition>,
    pub group_by: Vec<QualifiedColumn>,
    pub having: Option<Condition>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub compound: Option<(SetOperator, Box<Query>)>,
}

impl Query {
    /// A bare `SELECT ... FROM table` skeleton, handy for building queries in code.
    pub fn simple(db_id: impl Into<String>, table: impl Into<String>, select: Vec<ValueExpr>) -> Query {
        Query {
            db_id: db_id.into(),
            distinct: false,
            select,
            from: FromClause {
                tables: vec![TableRef::Named(table.into())],
                joins: Vec::new(),
            },
            where_clause: None,
            group_by: Vec::new(),
            having: None,
            order_by: Vec::new(),
            limit: None,
            compound: None,
        }
    }

    /// Direct subqueries: derived tables, then condition operands, then the
    /// compound right-hand side.
    pub fn subqueries(&self) -> Vec<&Query> {
        let mut out = Vec::new();
        for t in &self.from.tables {
            if let TableRef::Derived { query, .. } = t {
                out.push(query.as_ref());
            }
        }
        for cond in [&self.where_clause, &self.having].into_iter().flatten() {
            for atom in cond.atoms() {
                if let Operand::Subquery(q) = &atom.right {
                    out.push(q.as_ref());
                }
            }
        }
        if let Some((_, rhs)) = &self.compound {
            out.push(rhs.as_ref());
        }
        out
    }

    /// Every column reference at this level (not descending into subqueries).
    pub fn column_refs(&self) -> Vec<&ColumnRef> {
        let mut out: Vec<&ColumnRef> = self.select.iter().map(|e| &e.column).collect();
        for cond in [&self.where_clause, &self.having].into_iter().flatten() {
            for atom in cond.atoms() {
                out.push(&atom.left.column);
                if let Operand::Column(c) = &atom.right {
                    out.push(c);
                }
            }
        }
        out.extend(self.order_by.iter().map(|o| &o.expr.column));
        out
    }

    /// Table and column names referenced anywhere, including nested queries.
    /// Derived-table names and `*` are not schema items.
    pub fn schema_items(&self) -> BTreeSet<String> {
        let mut items = BTreeSet::new();
        self.collect_items(&mut items);
        items
    }

    fn collect_items(&self, items: &mut BTreeSet<String>) {
        for t in &self.from.tables {
            if let TableRef::Named(name) = t {
                items.insert(name.clone());
            }
        }
        for j in &self.from.joins {
            items.insert(j.left.column.clone());
            items.insert(j.right.column.clone());
        }
        for c in self.column_refs() {
            if let ColumnRef::Column(c) = c {
                items.insert(c.column.clone());
            }
        }
        for g in &self.group_by {
            items.insert(g.column.clone());
        }
        for sub in self.subqueries() {
            sub.collect_items(items);
        }
    }

    pub fn has_aggregate(&self) -> bool {
        self.select.iter().any(|e| e.agg != Aggregate::None)
    }
}
