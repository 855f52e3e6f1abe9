//! Database schemas: tables, columns, primary and foreign keys.
//!
//! Schema documents are JSON, one document per database:
//!
//! ```json
//! {
//!   "db_id": "school",
//!   "tables": [
//!     {"name": "school", "columns": [{"name": "id", "type": "number"}],
//!      "primary_key": ["id"], "sample_rows": [[1], [2]]}
//!   ],
//!   "foreign_keys": [["student.school_id", "school.id"]]
//! }
//! ```
//!
//! A schema file may hold a single document or an array of documents; a
//! directory is scanned for `*.json` files.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type", default = "default_column_type")]
    pub ty: String,
}

fn default_column_type() -> String {
    "text".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    #[serde(default)]
    pub primary_key: Vec<String>,
    /// Display-only preview rows, at most two.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sample_rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// A fully qualified `table.column` reference inside a schema.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QualifiedColumn {
    pub table: String,
    pub column: String,
}

impl QualifiedColumn {
    fn parse(text: &str) -> Option<Self> {
        let (table, column) = text.split_once('.')?;
        if table.is_empty() || column.is_empty() {
            return None;
        }
        Some(Self {
            table: table.to_string(),
            column: column.to_string(),
        })
    }
}

impl std::fmt::Display for QualifiedColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.table, self.column)
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct SchemaDoc {
    db_id: String,
    tables: Vec<Table>,
    #[serde(default)]
    foreign_keys: Vec<[String; 2]>,
}

/// The tables, columns and keys of one database.
///
/// Construction validates every invariant, so a `Schema` value is always
/// internally consistent and name lookups never dangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDoc", into = "SchemaDoc")]
pub struct Schema {
    db_id: String,
    tables: Vec<Table>,
    foreign_keys: Vec<(QualifiedColumn, QualifiedColumn)>,
}

impl TryFrom<SchemaDoc> for Schema {
    type Error = Error;

    fn try_from(doc: SchemaDoc) -> Result<Self> {
        let mut fks = Vec::with_capacity(doc.foreign_keys.len());
        for [from, to] in &doc.foreign_keys {
            let parse = |s: &str| {
                QualifiedColumn::parse(s).ok_or_else(|| {
                    Error::InvalidSchema(format!(
                        "{}: foreign key endpoint `{s}` is not of the form table.column",
                        doc.db_id
                    ))
                })
            };
            fks.push((parse(from)?, parse(to)?));
        }
        Schema::new(doc.db_id, doc.tables, fks)
    }
}

impl From<Schema> for SchemaDoc {
    fn from(s: Schema) -> Self {
        SchemaDoc {
            db_id: s.db_id,
            tables: s.tables,
            foreign_keys: s
                .foreign_keys
                .into_iter()
                .map(|(a, b)| [a.to_string(), b.to_string()])
                .collect(),
        }
    }
}

impl Schema {
    pub fn new(
        db_id: impl Into<String>,
        tables: Vec<Table>,
        foreign_keys: Vec<(QualifiedColumn, QualifiedColumn)>,
    ) -> Result<Self> {
        let db_id = db_id.into();
        let invalid = |msg: String| Error::InvalidSchema(format!("{db_id}: {msg}"));

        let mut table_names = HashSet::new();
        for table in &tables {
            if !table_names.insert(table.name.to_lowercase()) {
                return Err(invalid(format!("duplicate table `{}`", table.name)));
            }
            let mut cols = HashSet::new();
            for col in &table.columns {
                if !cols.insert(col.name.to_lowercase()) {
                    return Err(invalid(format!(
                        "duplicate column `{}` in table `{}`",
                        col.name, table.name
                    )));
                }
            }
            for pk in &table.primary_key {
                if table.column(pk).is_none() {
                    return Err(invalid(format!(
                        "primary key `{pk}` is not a column of `{}`",
                        table.name
                    )));
                }
            }
            if table.sample_rows.len() > 2 {
                return Err(invalid(format!(
                    "table `{}` has {} sample rows (at most 2)",
                    table.name,
                    table.sample_rows.len()
                )));
            }
            for row in &table.sample_rows {
                if row.len() != table.columns.len() {
                    return Err(invalid(format!(
                        "sample row of `{}` has {} cells, expected {}",
                        table.name,
                        row.len(),
                        table.columns.len()
                    )));
                }
            }
        }

        let mut schema = Schema {
            db_id,
            tables,
            foreign_keys: Vec::new(),
        };
        let mut resolved = Vec::with_capacity(foreign_keys.len());
        for (a, b) in foreign_keys {
            let a = schema
                .resolve_qualified(&a)
                .ok_or_else(|| Error::InvalidSchema(format!("{}: unknown foreign key endpoint `{a}`", schema.db_id)))?;
            let b = schema
                .resolve_qualified(&b)
                .ok_or_else(|| Error::InvalidSchema(format!("{}: unknown foreign key endpoint `{b}`", schema.db_id)))?;
            resolved.push((a, b));
        }
        schema.foreign_keys = resolved;
        Ok(schema)
    }

    pub fn db_id(&self) -> &str {
        &self.db_id
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn foreign_keys(&self) -> &[(QualifiedColumn, QualifiedColumn)] {
        &self.foreign_keys
    }

    /// Case-insensitive table lookup.
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name.eq_ignore_ascii_case(name))
    }

    /// Resolves a reference to the schema-declared casing.
    pub fn resolve_qualified(&self, col: &QualifiedColumn) -> Option<QualifiedColumn> {
        let table = self.table(&col.table)?;
        let column = table.column(&col.column)?;
        Some(QualifiedColumn {
            table: table.name.clone(),
            column: column.name.clone(),
        })
    }

    /// True if `a = b` (in either direction) is a declared foreign-key link.
    pub fn is_key_join(&self, a: &QualifiedColumn, b: &QualifiedColumn) -> bool {
        self.foreign_keys
            .iter()
            .any(|(x, y)| (x == a && y == b) || (x == b && y == a))
    }

    /// Every table and column name, lowercased.
    pub fn item_names(&self) -> HashSet<String> {
        let mut names = HashSet::new();
        for t in &self.tables {
            names.insert(t.name.to_lowercase());
            for c in &t.columns {
                names.insert(c.name.to_lowercase());
            }
        }
        names
    }

    /// Reads Spider's `tables.json` layout (column_names_original etc.).
    pub fn from_spider_tables_json(value: &serde_json::Value) -> Result<Vec<Schema>> {
        let entries = value
            .as_array()
            .ok_or_else(|| Error::InvalidSchema("spider tables file must be an array".into()))?;
        entries.iter().map(spider_entry).collect()
    }
}

fn spider_entry(entry: &serde_json::Value) -> Result<Schema> {
    let bad = |what: &str| Error::InvalidSchema(format!("spider tables entry: missing or invalid `{what}`"));
    let db_id = entry["db_id"].as_str().ok_or_else(|| bad("db_id"))?;
    let table_names = entry
        .get("table_names_original")
        .or_else(|| entry.get("table_names"))
        .and_then(|v| v.as_array())
        .ok_or_else(|| bad("table_names_original"))?;
    let columns = entry
        .get("column_names_original")
        .or_else(|| entry.get("column_names"))
        .and_then(|v| v.as_array())
        .ok_or_else(|| bad("column_names_original"))?;
    let types = entry["column_types"].as_array().cloned().unwrap_or_default();

    let mut tables: Vec<Table> = table_names
        .iter()
        .map(|t| Table {
            name: t.as_str().unwrap_or_default().to_string(),
            columns: Vec::new(),
            primary_key: Vec::new(),
            sample_rows: Vec::new(),
        })
        .collect();
    // Column 0 is Spider's `*` pseudo-column with table index -1.
    let mut by_index: BTreeMap<usize, QualifiedColumn> = BTreeMap::new();
    for (i, col) in columns.iter().enumerate() {
        let table_idx = col[0].as_i64().ok_or_else(|| bad("column_names_original"))?;
        let Ok(table_idx) = usize::try_from(table_idx) else {
            continue;
        };
        let name = col[1].as_str().ok_or_else(|| bad("column_names_original"))?;
        let table = tables.get_mut(table_idx).ok_or_else(|| bad("column table index"))?;
        if table.column(name).is_some() {
            continue;
        }
        table.columns.push(Column {
            name: name.to_string(),
            ty: types.get(i).and_then(|t| t.as_str()).unwrap_or("text").to_string(),
        });
        by_index.insert(
            i,
            QualifiedColumn {
                table: table.name.clone(),
                column: name.to_string(),
            },
        );
    }
    let index_list = |v: &serde_json::Value| -> Vec<usize> {
        match v {
            serde_json::Value::Number(n) => n.as_u64().map(|n| vec![n as usize]).unwrap_or_default(),
            serde_json::Value::Array(items) => items.iter().filter_map(|x| x.as_u64().map(|n| n as usize)).collect(),
            _ => Vec::new(),
        }
    };
    if let Some(pks) = entry["primary_keys"].as_array() {
        for pk in pks {
            for idx in index_list(pk) {
                if let Some(col) = by_index.get(&idx) {
                    let table = tables
                        .iter_mut()
                        .find(|t| t.name == col.table)
                        .expect("column table exists");
                    if !table.primary_key.contains(&col.column) {
                        table.primary_key.push(col.column.clone());
                    }
                }
            }
        }
    }
    let mut fks = Vec::new();
    if let Some(pairs) = entry["foreign_keys"].as_array() {
        for pair in pairs {
            let idx = index_list(pair);
            if let [a, b] = idx[..] {
                if let (Some(a), Some(b)) = (by_index.get(&a), by_index.get(&b)) {
                    fks.push((a.clone(), b.clone()));
                }
            }
        }
    }
    Schema::new(db_id, tables, fks)
}

/// A collection of schemas keyed by `db_id`.
#[derive(Debug, Clone, Default)]
pub struct SchemaSet {
    schemas: BTreeMap<String, Schema>,
}

impl SchemaSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, schema: Schema) -> Result<()> {
        if self.schemas.contains_key(schema.db_id()) {
            return Err(Error::InvalidSchema(format!(
                "duplicate schema for db_id `{}`",
                schema.db_id()
            )));
        }
        self.schemas.insert(schema.db_id().to_string(), schema);
        Ok(())
    }

    pub fn get(&self, db_id: &str) -> Option<&Schema> {
        self.schemas.get(db_id)
    }

    pub fn require(&self, db_id: &str) -> Result<&Schema> {
        self.get(db_id).ok_or_else(|| Error::UnknownDatabase(db_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Schema> {
        self.schemas.values()
    }

    /// Loads a schema file (object or array of objects) or a directory of them.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut set = SchemaSet::new();
        if path.is_dir() {
            let mut files: Vec<_> = fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            for file in files {
                set.load_file(&file)?;
            }
        } else {
            set.load_file(path)?;
        }
        Ok(set)
    }

    fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::InvalidSchema(format!("{}: {e}", path.display())))?;
        let docs = match value {
            serde_json::Value::Array(items) => items,
            other => vec![other],
        };
        for doc in docs {
            let schema = if doc.get("column_names_original").is_some() {
                spider_entry(&doc)?
            } else {
                serde_json::from_value::<Schema>(doc)
                    .map_err(|e| Error::InvalidSchema(format!("{}: {e}", path.display())))?
            };
            self.insert(schema)?;
        }
        Ok(())
    }
}

impl FromIterator<Schema> for SchemaSet {
    fn from_iter<I: IntoIterator<Item = Schema>>(iter: I) -> Self {
        let mut set = SchemaSet::new();
        for s in iter {
            set.schemas.insert(s.db_id().to_string(), s);
        }
        set
    }
}
