//! Recursive-descent parser for the Spider SQL subset.
//!
//! Column references are resolved against the schema as each clause is
//! parsed, so the output carries no aliases and every column is qualified.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{lex, Token, TokenKind};
use super::schema::Schema;
use crate::error::{Error, Result};

/// Parses one SQL statement into its canonical form.
pub fn parse_sql(text: &str, schema: &Schema) -> Result<Query> {
    let tokens = lex(text)?;
    let mut parser = Parser {
        text,
        tokens,
        pos: 0,
        schema,
        scopes: Vec::new(),
    };
    let query = parser.query()?;
    if parser.peek().is_some_and(|t| t.is_symbol(";")) {
        parser.pos += 1;
    }
    if let Some(tok) = parser.peek() {
        return Err(parser.error_at(tok, "unexpected token after end of query"));
    }
    Ok(query)
}

/// One table visible in a query's scope.
#[derive(Debug, Clone)]
struct Binding {
    /// Alias as written (or the table name), lowercased.
    alias: String,
    /// Canonical table name: schema casing, or `derivedN`.
    table: String,
    columns: Vec<String>,
}

#[derive(Debug, Default)]
struct Scope {
    bindings: Vec<Binding>,
    select_aliases: HashMap<String, ValueExpr>,
}

struct RawColumn {
    qualifier: Option<String>,
    name: String,
    offset: usize,
}

enum RawTarget {
    Star,
    Column(RawColumn),
}

struct RawExpr {
    agg: Aggregate,
    target: RawTarget,
    distinct: bool,
    offset: usize,
}

const CLAUSE_END: [&str; 13] = [
    "where",
    "group",
    "order",
    "having",
    "limit",
    "join",
    "inner",
    "on",
    "intersect",
    "union",
    "except",
    "left",
    "right",
];

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<Token>,
    pos: usize,
    schema: &'a Schema,
    scopes: Vec<Scope>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> Error {
        Error::Syntax {
            position: tok.offset,
            near: tok.text.clone(),
            message: message.into(),
        }
    }

    fn error_here(&self, message: impl Into<String>) -> Error {
        match self.peek() {
            Some(tok) => self.error_at(tok, message),
            None => Error::Syntax {
                position: self.text.len(),
                near: String::new(),
                message: format!("{} (unexpected end of input)", message.into()),
            },
        }
    }

    fn at_word(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_word(kw))
    }

    fn at_symbol(&self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(s))
    }

    fn eat_word(&mut self, kw: &str) -> bool {
        if self.at_word(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_symbol(&mut self, s: &str) -> bool {
        if self.at_symbol(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, kw: &str) -> Result<()> {
        if self.eat_word(kw) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected {}", kw.to_uppercase())))
        }
    }

    fn expect_symbol(&mut self, s: &str) -> Result<()> {
        if self.eat_symbol(s) {
            Ok(())
        } else {
            Err(self.error_here(format!("expected `{s}`")))
        }
    }

    fn identifier(&mut self) -> Result<Token> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Word => Ok(self.next().expect("peeked")),
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn query(&mut self) -> Result<Query> {
        let mut q = self.select_core()?;
        let op = if self.eat_word("intersect") {
            Some(SetOperator::Intersect)
        } else if self.eat_word("union") {
            if self.at_word("all") {
                return Err(Error::Unsupported("UNION ALL".into()));
            }
            Some(SetOperator::Union)
        } else if self.eat_word("except") {
            Some(SetOperator::Except)
        } else {
            None
        };
        if let Some(op) = op {
            let rhs = self.query()?;
            q.compound = Some((op, Box::new(rhs)));
        }
        Ok(q)
    }

    fn select_core(&mut self) -> Result<Query> {
        if self.at_word("with") {
            return Err(Error::Unsupported("common table expression (WITH)".into()));
        }
        self.expect_word("select")?;
        let distinct = self.eat_word("distinct");

        let mut raw_select = Vec::new();
        let mut aliases = Vec::new();
        loop {
            let expr = self.raw_expr()?;
            if self.eat_word("as") {
                let alias = self.identifier()?;
                aliases.push((alias.text.to_lowercase(), raw_select.len()));
            }
            raw_select.push(expr);
            if !self.eat_symbol(",") {
                break;
            }
        }

        self.expect_word("from")?;
        let from = self.parse_from()?;

        let mut select = Vec::with_capacity(raw_select.len());
        for raw in &raw_select {
            select.push(self.resolve_expr(raw)?);
        }
        let scope = self.scopes.last_mut().expect("from pushed a scope");
        for (alias, idx) in aliases {
            scope.select_aliases.insert(alias, select[idx].clone());
        }

        let where_clause = if self.eat_word("where") {
            Some(self.condition()?)
        } else {
            None
        };

        let mut group_by = Vec::new();
        if self.eat_word("group") {
            self.expect_word("by")?;
            loop {
                let raw = self.raw_column()?;
                let col = self.resolve_column(&raw)?;
                group_by.push(col);
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }

        let having = if self.eat_word("having") {
            Some(self.condition()?)
        } else {
            None
        };

        let mut order_by = Vec::new();
        if self.eat_word("order") {
            self.expect_word("by")?;
            let mut pending = Vec::new();
            loop {
                let expr = self.order_expr()?;
                let dir = if self.eat_word("desc") {
                    Some(Direction::Desc)
                } else if self.eat_word("asc") {
                    Some(Direction::Asc)
                } else {
                    None
                };
                pending.push((expr, dir));
                if !self.eat_symbol(",") {
                    break;
                }
            }
            // `ORDER BY a, b DESC` applies the trailing direction to keys
            // written without one.
            let trailing = pending.iter().rev().find_map(|(_, d)| *d).unwrap_or(Direction::Asc);
            for (expr, dir) in pending {
                order_by.push(OrderItem {
                    expr,
                    direction: dir.unwrap_or(trailing),
                });
            }
        }

        let limit = if self.eat_word("limit") {
            match self.next() {
                Some(t) if t.kind == TokenKind::Number && t.text.chars().all(|c| c.is_ascii_digit()) => Some(
                    t.text
                        .parse::<u64>()
                        .map_err(|_| self.error_at(&t, "limit out of range"))?,
                ),
                Some(t) => return Err(self.error_at(&t, "LIMIT expects a non-negative integer")),
                None => return Err(self.error_here("LIMIT expects a non-negative integer")),
            }
        } else {
            None
        };

        self.scopes.pop();
        Ok(Query {
            db_id: self.schema.db_id().to_string(),
            distinct,
            select,
            from,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
            compound: None,
        })
    }

    fn order_expr(&mut self) -> Result<ValueExpr> {
        if let Some(t) = self.peek() {
            let is_bare_word =
                t.kind == TokenKind::Word && !self.peek_at(1).is_some_and(|n| n.is_symbol(".") || n.is_symbol("("));
            if is_bare_word {
                let key = t.text.to_lowercase();
                let alias = self.scopes.last().and_then(|s| s.select_aliases.get(&key)).cloned();
                if let Some(expr) = alias {
                    self.pos += 1;
                    return Ok(expr);
                }
            }
        }
        let raw = self.raw_expr()?;
        self.resolve_expr(&raw)
    }

    fn raw_expr(&mut self) -> Result<RawExpr> {
        let tok = self
            .peek()
            .cloned()
            .ok_or_else(|| self.error_here("expected expression"))?;
        let agg = if tok.kind == TokenKind::Word && self.peek_at(1).is_some_and(|t| t.is_symbol("(")) {
            match Aggregate::from_keyword(&tok.text) {
                Some(a) => Some(a),
                None => {
                    return Err(Error::Unsupported(format!("function `{}`", tok.text)));
                }
            }
        } else {
            None
        };
        let expr = if let Some(agg) = agg {
            self.pos += 2;
            let distinct = self.eat_word("distinct");
            let target = self.raw_target()?;
            if self.peek().is_some_and(is_arithmetic) {
                return Err(Error::Unsupported("arithmetic expression".into()));
            }
            self.expect_symbol(")")?;
            RawExpr {
                agg,
                target,
                distinct,
                offset: tok.offset,
            }
        } else {
            RawExpr {
                agg: Aggregate::None,
                target: self.raw_target()?,
                distinct: false,
                offset: tok.offset,
            }
        };
        if self.peek().is_some_and(is_arithmetic) {
            return Err(Error::Unsupported("arithmetic expression".into()));
        }
        Ok(expr)
    }

    fn raw_target(&mut self) -> Result<RawTarget> {
        if self.eat_symbol("*") {
            return Ok(RawTarget::Star);
        }
        Ok(RawTarget::Column(self.raw_column()?))
    }

    fn raw_column(&mut self) -> Result<RawColumn> {
        let first = self.identifier()?;
        if is_reserved(&first.text) {
            return Err(self.error_at(&first, "expected column name"));
        }
        if self.eat_symbol(".") {
            if self.at_symbol("*") {
                return Err(Error::Unsupported(format!("qualified star `{}.*`", first.text)));
            }
            let second = self.identifier()?;
            Ok(RawColumn {
                qualifier: Some(first.text),
                name: second.text,
                offset: first.offset,
            })
        } else {
            Ok(RawColumn {
                qualifier: None,
                name: first.text,
                offset: first.offset,
            })
        }
    }

    fn parse_from(&mut self) -> Result<FromClause> {
        let mut scope = Scope::default();
        let mut tables = Vec::new();
        let mut raw_joins: Vec<(RawColumn, RawColumn)> = Vec::new();
        let mut derived_count = 0;

        self.table_item(&mut scope, &mut tables, &mut derived_count)?;
        loop {
            if self.at_word("left")
                || self.at_word("right")
                || self.at_word("outer")
                || self.at_word("full")
                || self.at_word("cross")
                || self.at_word("natural")
            {
                let t = self.peek().expect("peeked").text.to_uppercase();
                return Err(Error::Unsupported(format!("{t} JOIN (only inner joins are supported)")));
            }
            let joined = if self.eat_symbol(",") {
                true
            } else if self.eat_word("inner") {
                self.expect_word("join")?;
                true
            } else {
                self.eat_word("join")
            };
            if !joined {
                break;
            }
            self.table_item(&mut scope, &mut tables, &mut derived_count)?;
            if self.eat_word("on") {
                loop {
                    let left = self.raw_column()?;
                    if !self.eat_symbol("=") {
                        return Err(Error::Unsupported(
                            "join condition that is not a column equality".into(),
                        ));
                    }
                    let right = self.raw_column()?;
                    raw_joins.push((left, right));
                    if !self.eat_word("and") {
                        break;
                    }
                }
            }
        }

        self.scopes.push(scope);
        let mut joins = Vec::with_capacity(raw_joins.len());
        for (l, r) in &raw_joins {
            let left = self.resolve_column(l)?;
            let right = self.resolve_column(r)?;
            joins.push(JoinCondition { left, right });
        }
        Ok(FromClause { tables, joins })
    }

    fn table_item(&mut self, scope: &mut Scope, tables: &mut Vec<TableRef>, derived_count: &mut usize) -> Result<()> {
        if self.eat_symbol("(") {
            let query = self.query()?;
            self.expect_symbol(")")?;
            *derived_count += 1;
            let name = format!("derived{derived_count}");
            let alias = self.table_alias()?.unwrap_or_else(|| name.clone());
            let columns = query
                .select
                .iter()
                .filter(|e| e.agg == Aggregate::None)
                .filter_map(|e| e.column.as_column().map(|c| c.column.clone()))
                .collect();
            scope.bindings.push(Binding {
                alias: alias.to_lowercase(),
                table: name.clone(),
                columns,
            });
            tables.push(TableRef::Derived {
                name,
                query: Box::new(query),
            });
            return Ok(());
        }
        let tok = self.identifier()?;
        if is_reserved(&tok.text) {
            return Err(self.error_at(&tok, "expected table name"));
        }
        let table = self
            .schema
            .table(&tok.text)
            .ok_or_else(|| Error::Unresolved(format!("table `{}` in database `{}`", tok.text, self.schema.db_id())))?;
        if tables.iter().any(|t| t.name() == table.name) {
            return Err(Error::Unsupported(format!("self join on `{}`", table.name)));
        }
        let alias = self.table_alias()?.unwrap_or_else(|| table.name.clone());
        scope.bindings.push(Binding {
            alias: alias.to_lowercase(),
            table: table.name.clone(),
            columns: table.columns.iter().map(|c| c.name.clone()).collect(),
        });
        tables.push(TableRef::Named(table.name.clone()));
        Ok(())
    }

    /// `AS alias`, or a bare alias when it is followed by something that can
    /// legally continue a FROM clause.
    fn table_alias(&mut self) -> Result<Option<String>> {
        if self.eat_word("as") {
            return Ok(Some(self.identifier()?.text));
        }
        let Some(t) = self.peek() else { return Ok(None) };
        if t.kind != TokenKind::Word || is_reserved(&t.text) {
            return Ok(None);
        }
        let follows_ok = match self.peek_at(1) {
            None => true,
            Some(n) => {
                n.is_symbol(",")
                    || n.is_symbol(")")
                    || n.is_symbol(";")
                    || (n.kind == TokenKind::Word && CLAUSE_END.iter().any(|k| n.is_word(k)))
            }
        };
        if follows_ok {
            Ok(Some(self.next().expect("peeked").text))
        } else {
            Ok(None)
        }
    }

    fn condition(&mut self) -> Result<Condition> {
        let mut parts = vec![self.and_condition()?];
        while self.eat_word("or") {
            parts.push(self.and_condition()?);
        }
        Ok(Condition::or(parts))
    }

    fn and_condition(&mut self) -> Result<Condition> {
        let mut parts = vec![self.atom()?];
        while self.eat_word("and") {
            parts.push(self.atom()?);
        }
        Ok(Condition::and(parts))
    }

    fn atom(&mut self) -> Result<Condition> {
        if self.at_word("not") {
            return Err(Error::Unsupported("NOT applied to a condition".into()));
        }
        if self.at_word("exists") {
            return Err(Error::Unsupported("EXISTS".into()));
        }
        if self.at_symbol("(") && !self.peek_at(1).is_some_and(|t| t.is_word("select")) {
            self.pos += 1;
            let inner = self.condition()?;
            self.expect_symbol(")")?;
            return Ok(inner);
        }
        let raw = self.raw_expr()?;
        let left = self.resolve_expr(&raw)?;

        let negated = self.eat_word("not");
        let op_tok = self
            .next()
            .ok_or_else(|| self.error_here("expected comparison operator"))?;
        let op = match (negated, op_tok.kind, op_tok.text.to_lowercase().as_str()) {
            (false, TokenKind::Symbol, "=") => CmpOp::Eq,
            (false, TokenKind::Symbol, "!=" | "<>") => CmpOp::Ne,
            (false, TokenKind::Symbol, "<") => CmpOp::Lt,
            (false, TokenKind::Symbol, "<=") => CmpOp::Le,
            (false, TokenKind::Symbol, ">") => CmpOp::Gt,
            (false, TokenKind::Symbol, ">=") => CmpOp::Ge,
            (false, TokenKind::Word, "like") => CmpOp::Like,
            (true, TokenKind::Word, "like") => CmpOp::NotLike,
            (false, TokenKind::Word, "between") => CmpOp::Between,
            (false, TokenKind::Word, "in") => CmpOp::In,
            (true, TokenKind::Word, "in") => CmpOp::NotIn,
            (true, TokenKind::Word, "between") => return Err(Error::Unsupported("NOT BETWEEN".into())),
            (_, TokenKind::Word, "is") => return Err(Error::Unsupported("IS [NOT] NULL".into())),
            _ => return Err(self.error_at(&op_tok, "expected comparison operator")),
        };

        let right = match op {
            CmpOp::Between => {
                let lo = self.literal()?;
                self.expect_word("and")?;
                let hi = self.literal()?;
                Operand::Range(lo, hi)
            }
            CmpOp::In | CmpOp::NotIn => {
                self.expect_symbol("(")?;
                if !self.at_word("select") {
                    return Err(Error::Unsupported("IN with a value list".into()));
                }
                let q = self.query()?;
                self.expect_symbol(")")?;
                Operand::Subquery(Box::new(q))
            }
            _ => self.operand()?,
        };
        Ok(Condition::Atom(Predicate { left, op, right }))
    }

    fn operand(&mut self) -> Result<Operand> {
        if self.at_symbol("(") && self.peek_at(1).is_some_and(|t| t.is_word("select")) {
            self.pos += 1;
            let q = self.query()?;
            self.expect_symbol(")")?;
            return Ok(Operand::Subquery(Box::new(q)));
        }
        match self.peek() {
            Some(t) if t.kind == TokenKind::Word => {
                let raw = self.raw_column()?;
                Ok(Operand::Column(ColumnRef::Column(self.resolve_column(&raw)?)))
            }
            _ => Ok(Operand::Literal(self.literal()?)),
        }
    }

    fn literal(&mut self) -> Result<Literal> {
        let negative = self.eat_symbol("-");
        let tok = self.next().ok_or_else(|| self.error_here("expected literal"))?;
        match tok.kind {
            TokenKind::Number => Ok(Literal::Number(if negative {
                format!("-{}", tok.text)
            } else {
                tok.text
            })),
            TokenKind::Text if !negative => Ok(Literal::Text(tok.text)),
            _ => Err(self.error_at(&tok, "expected literal")),
        }
    }

    fn resolve_expr(&self, raw: &RawExpr) -> Result<ValueExpr> {
        let column = match &raw.target {
            RawTarget::Star => {
                if raw.agg != Aggregate::None && raw.agg != Aggregate::Count {
                    return Err(Error::Syntax {
                        position: raw.offset,
                        near: raw.agg.keyword().to_string(),
                        message: format!("{}(*) is not valid", raw.agg.keyword()),
                    });
                }
                ColumnRef::Star
            }
            RawTarget::Column(c) => ColumnRef::Column(self.resolve_column(c)?),
        };
        Ok(ValueExpr {
            agg: raw.agg,
            column,
            distinct: raw.distinct,
        })
    }

    fn resolve_column(&self, raw: &RawColumn) -> Result<QualifiedColumn> {
        let name = raw.name.to_lowercase();
        for scope in self.scopes.iter().rev() {
            if let Some(q) = &raw.qualifier {
                let q = q.to_lowercase();
                let binding = scope
                    .bindings
                    .iter()
                    .find(|b| b.alias == q || b.table.eq_ignore_ascii_case(&q));
                if let Some(b) = binding {
                    return match b.columns.iter().find(|c| c.to_lowercase() == name) {
                        Some(col) => Ok(QualifiedColumn {
                            table: b.table.clone(),
                            column: col.clone(),
                        }),
                        None => Err(Error::Unresolved(format!(
                            "column `{}.{}` (offset {})",
                            q, raw.name, raw.offset
                        ))),
                    };
                }
            } else {
                let hits: Vec<_> = scope
                    .bindings
                    .iter()
                    .filter_map(|b| b.columns.iter().find(|c| c.to_lowercase() == name).map(|c| (b, c)))
                    .collect();
                match hits.len() {
                    0 => continue,
                    1 => {
                        let (b, c) = hits[0];
                        return Ok(QualifiedColumn {
                            table: b.table.clone(),
                            column: c.clone(),
                        });
                    }
                    _ => {
                        return Err(Error::Unresolved(format!(
                            "ambiguous column `{}` (offset {})",
                            raw.name, raw.offset
                        )))
                    }
                }
            }
        }
        let shown = match &raw.qualifier {
            Some(q) => format!("{q}.{}", raw.name),
            None => raw.name.clone(),
        };
        Err(Error::Unresolved(format!("column `{shown}` (offset {})", raw.offset)))
    }
}

fn is_arithmetic(t: &Token) -> bool {
    t.kind == TokenKind::Symbol && matches!(t.text.as_str(), "+" | "-" | "/" | "*")
}

const RESERVED: [&str; 32] = [
    "select",
    "from",
    "where",
    "group",
    "by",
    "having",
    "order",
    "limit",
    "join",
    "inner",
    "on",
    "as",
    "and",
    "or",
    "not",
    "in",
    "like",
    "between",
    "intersect",
    "union",
    "except",
    "asc",
    "desc",
    "distinct",
    "left",
    "right",
    "outer",
    "cross",
    "natural",
    "full",
    "is",
    "exists",
];

fn is_reserved(word: &str) -> bool {
    RESERVED.iter().any(|k| word.eq_ignore_ascii_case(k))
}
