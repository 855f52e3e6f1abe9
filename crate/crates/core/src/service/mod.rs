//! HTTP API over the library, plus annotation sessions backed by an
//! append-only log.
//!
//! All routes live under `/v1`:
//!
//! | method | path                          | body / result                          |
//! |--------|-------------------------------|----------------------------------------|
//! | GET    | `/health`                     | `{"status": "ok"}`                     |
//! | POST   | `/explain`                    | `{sql, db_id}` -> `{steps}`            |
//! | POST   | `/diff`                       | `{pred, gold, db_id}` -> segments      |
//! | POST   | `/eval`                       | `{items: [{pred, gold, db_id}]}`       |
//! | POST   | `/rerank`                     | beam, feedback and method -> choice    |
//! | POST   | `/sessions`                   | `{annotator_id, kind}` -> session      |
//! | GET    | `/session/{id}/next`          | next task, or `{"done": true}`         |
//! | POST   | `/session/{id}/annotation`    | annotation -> ack                      |
//! | GET    | `/stats`                      | aggregates over the log                |
//!
//! Errors are `{"error": {"code", "message", ...}}` with a 4xx/5xx status.

mod api;
mod store;

use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use api::{router, ApiError};
pub use store::{AnnotationRecord, Store, StoreEvent, TaskKind, Verdict};

use crate::dataset::{load_dataset, Strictness, ValidatedExample};
use crate::error::{Error, Result};
use crate::explain::{explain, load_library, TemplateLibrary};
use crate::sql::{feedback_tokens, Schema, SchemaSet};

/// Longest accepted feedback, in feedback-mode tokens.
pub const MAX_FEEDBACK_TOKENS: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_bind")]
    pub bind: String,
    pub port: u16,
    pub dataset_path: PathBuf,
    pub templates_path: PathBuf,
    pub store_path: PathBuf,
    pub schemas_path: PathBuf,
    #[serde(default)]
    pub session_seed: u64,
}

fn default_bind() -> String {
    "127.0.0.1".into()
}

impl ServiceConfig {
    /// Reads a TOML config. Relative paths are taken relative to the
    /// config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ServiceConfig =
            toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.dataset_path,
            &mut cfg.templates_path,
            &mut cfg.store_path,
            &mut cfg.schemas_path,
        ] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Schema overview shown to annotators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePreview {
    pub name: String,
    pub columns: Vec<ColumnPreview>,
    pub sample_rows: Vec<Vec<serde_json::Value>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnPreview {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

fn preview(schema: &Schema) -> Vec<TablePreview> {
    schema
        .tables()
        .iter()
        .map(|t| TablePreview {
            name: t.name.clone(),
            columns: t
                .columns
                .iter()
                .map(|c| ColumnPreview {
                    name: c.name.clone(),
                    ty: c.ty.clone(),
                })
                .collect(),
            sample_rows: t.sample_rows.iter().take(2).cloned().collect(),
        })
        .collect()
}

/// What an annotator sees. Never carries SQL.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationTask {
    pub task_id: String,
    pub kind: TaskKind,
    pub question: String,
    pub schema: Vec<TablePreview>,
    /// Numbered explanation steps of the parse under review.
    pub steps: Vec<String>,
    /// The feedback to paraphrase, for paraphrase tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
}

#[derive(Debug, Clone)]
struct Session {
    kind: TaskKind,
    order: Vec<usize>,
    submitted: HashSet<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub correct: usize,
    pub incorrect: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub completed: usize,
    pub verdicts: VerdictCounts,
    pub paraphrases: usize,
    pub mean_elapsed_seconds: f64,
    /// Over records with non-empty feedback.
    pub mean_feedback_tokens: f64,
}

impl Stats {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a AnnotationRecord>) -> Stats {
        let mut s = Stats::default();
        let mut elapsed = 0.0;
        let (mut tokens, mut with_feedback) = (0usize, 0usize);
        for r in records {
            s.completed += 1;
            elapsed += r.elapsed_seconds;
            match r.verdict {
                Some(Verdict::Correct) => s.verdicts.correct += 1,
                Some(Verdict::Incorrect) => s.verdicts.incorrect += 1,
                None => s.paraphrases += 1,
            }
            if !r.feedback.trim().is_empty() {
                tokens += feedback_tokens(&r.feedback).len();
                with_feedback += 1;
            }
        }
        if s.completed > 0 {
            s.mean_elapsed_seconds = elapsed / s.completed as f64;
        }
        if with_feedback > 0 {
            s.mean_feedback_tokens = tokens as f64 / with_feedback as f64;
        }
        s
    }

    /// Aggregates straight from a store file.
    pub fn from_store(path: impl AsRef<Path>) -> Result<Stats> {
        let events = Store::replay(path)?;
        Ok(Stats::from_records(events.iter().filter_map(|e| match e {
            StoreEvent::Annotation(r) => Some(r),
            StoreEvent::Session { .. } => None,
        })))
    }
}

struct Mutable {
    store: Store,
    sessions: BTreeMap<String, Session>,
    records: Vec<AnnotationRecord>,
}

/// Shared service state.
pub struct AppState {
    schemas: SchemaSet,
    library: TemplateLibrary,
    annotation_tasks: Vec<AnnotationTask>,
    paraphrase_tasks: Vec<AnnotationTask>,
    session_seed: u64,
    /// Sessions, records and the log writer; one lock serializes writes.
    mutable: Mutex<Mutable>,
}

/// Reasons an annotation is refused.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejected {
    UnknownSession(String),
    UnknownTask(String),
    Duplicate(String),
    TooLong(usize),
    FeedbackRequired,
    FeedbackNotAllowed,
    VerdictRequired,
    VerdictNotAllowed,
    Store(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub task_id: String,
    pub annotator_id: String,
    #[serde(default)]
    pub verdict: Option<Verdict>,
    #[serde(default)]
    pub feedback: String,
    pub elapsed_seconds: f64,
}

impl AppState {
    /// Builds state from loaded parts and replays `store_path`.
    pub fn new(
        schemas: SchemaSet,
        library: TemplateLibrary,
        examples: &[ValidatedExample],
        store_path: impl AsRef<Path>,
        session_seed: u64,
    ) -> Result<Self> {
        let mut annotation_tasks = Vec::new();
        let mut paraphrase_tasks = Vec::new();
        for (i, ex) in examples.iter().enumerate() {
            let schema = schemas.require(&ex.record.db_id)?;
            let steps = match explain(&ex.predicted, schema, &library) {
                Ok(e) => e.numbered(),
                Err(e) => {
                    tracing::warn!(example = i, error = %e, "skipping example without an explanation");
                    continue;
                }
            };
            let base = AnnotationTask {
                task_id: format!("a{i}"),
                kind: TaskKind::Annotation,
                question: ex.record.question.clone(),
                schema: preview(schema),
                steps,
                feedback: None,
            };
            paraphrase_tasks.push(AnnotationTask {
                task_id: format!("p{i}"),
                kind: TaskKind::Paraphrase,
                feedback: Some(ex.record.feedback.clone()),
                ..base.clone()
            });
            annotation_tasks.push(base);
        }
        let store_path = store_path.as_ref();
        let events = Store::replay(store_path)?;
        let mut state = AppState {
            schemas,
            library,
            annotation_tasks,
            paraphrase_tasks,
            session_seed,
            mutable: Mutex::new(Mutable {
                store: Store::open(store_path)?,
                sessions: BTreeMap::new(),
                records: Vec::new(),
            }),
        };
        let m = state.mutable.get_mut().expect("fresh lock");
        for ev in events {
            match ev {
                StoreEvent::Session {
                    session_id, kind, seed, ..
                } => {
                    let order = Self::order(&state.annotation_tasks, &state.paraphrase_tasks, kind, seed);
                    m.sessions.insert(
                        session_id,
                        Session {
                            kind,
                            order,
                            submitted: HashSet::new(),
                        },
                    );
                }
                StoreEvent::Annotation(r) => {
                    if let Some(s) = m.sessions.get_mut(&r.session_id) {
                        s.submitted.insert(r.task_id.clone());
                    }
                    m.records.push(r);
                }
            }
        }
        Ok(state)
    }

    pub fn from_config(cfg: &ServiceConfig) -> Result<Self> {
        let schemas = SchemaSet::load(&cfg.schemas_path)?;
        let library = load_library(&cfg.templates_path)?;
        let data = load_dataset(&cfg.dataset_path, &schemas, Strictness::Lenient)?;
        for r in &data.rejected {
            tracing::warn!(line = r.line, reason = %r.reason, "skipping dataset record");
        }
        AppState::new(schemas, library, &data.examples, &cfg.store_path, cfg.session_seed)
    }

    pub fn schemas(&self) -> &SchemaSet {
        &self.schemas
    }

    pub fn library(&self) -> &TemplateLibrary {
        &self.library
    }

    fn tasks(&self, kind: TaskKind) -> &[AnnotationTask] {
        match kind {
            TaskKind::Annotation => &self.annotation_tasks,
            TaskKind::Paraphrase => &self.paraphrase_tasks,
        }
    }

    fn order(annotation: &[AnnotationTask], paraphrase: &[AnnotationTask], kind: TaskKind, seed: u64) -> Vec<usize> {
        let n = match kind {
            TaskKind::Annotation => annotation.len(),
            TaskKind::Paraphrase => paraphrase.len(),
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        order
    }

    /// Opens a session; its task order is a seeded shuffle.
    pub fn create_session(&self, annotator_id: &str, kind: TaskKind) -> Result<(String, usize)> {
        let mut m = self.mutable.lock().expect("state lock");
        let number = m.sessions.len() as u64 + 1;
        let session_id = format!("s{number}");
        let seed = self
            .session_seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(number);
        m.store.append(&StoreEvent::Session {
            session_id: session_id.clone(),
            annotator_id: annotator_id.to_string(),
            kind,
            seed,
        })?;
        let order = Self::order(&self.annotation_tasks, &self.paraphrase_tasks, kind, seed);
        let n = order.len();
        m.sessions.insert(
            session_id.clone(),
            Session {
                kind,
                order,
                submitted: HashSet::new(),
            },
        );
        Ok((session_id, n))
    }

    /// The first task of the session not yet submitted, or `None` when done.
    pub fn next_task(&self, session_id: &str) -> Result<Option<AnnotationTask>, Rejected> {
        let m = self.mutable.lock().expect("state lock");
        let s = m
            .sessions
            .get(session_id)
            .ok_or_else(|| Rejected::UnknownSession(session_id.to_string()))?;
        let tasks = self.tasks(s.kind);
        Ok(s.order
            .iter()
            .map(|i| &tasks[*i])
            .find(|t| !s.submitted.contains(&t.task_id))
            .cloned())
    }

    /// Validates and durably appends an annotation, then acknowledges it.
    pub fn submit(&self, session_id: &str, sub: Submission) -> Result<AnnotationRecord, Rejected> {
        let tokens = feedback_tokens(&sub.feedback).len();
        let mut m = self.mutable.lock().expect("state lock");
        let session = m
            .sessions
            .get(session_id)
            .ok_or_else(|| Rejected::UnknownSession(session_id.to_string()))?;
        if !self.tasks(session.kind).iter().any(|t| t.task_id == sub.task_id) {
            return Err(Rejected::UnknownTask(sub.task_id));
        }
        if session.submitted.contains(&sub.task_id) {
            return Err(Rejected::Duplicate(sub.task_id));
        }
        if tokens > MAX_FEEDBACK_TOKENS {
            return Err(Rejected::TooLong(tokens));
        }
        match (session.kind, sub.verdict) {
            (TaskKind::Annotation, None) => return Err(Rejected::VerdictRequired),
            (TaskKind::Annotation, Some(Verdict::Correct)) if tokens > 0 => return Err(Rejected::FeedbackNotAllowed),
            (TaskKind::Annotation, Some(Verdict::Incorrect)) | (TaskKind::Paraphrase, None) if tokens == 0 => {
                return Err(Rejected::FeedbackRequired)
            }
            (TaskKind::Paraphrase, Some(_)) => return Err(Rejected::VerdictNotAllowed),
            _ => {}
        }
        let record = AnnotationRecord {
            session_id: session_id.to_string(),
            task_id: sub.task_id,
            annotator_id: sub.annotator_id,
            verdict: sub.verdict,
            feedback: sub.feedback,
            timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            elapsed_seconds: sub.elapsed_seconds.max(0.0),
        };
        m.store
            .append(&StoreEvent::Annotation(record.clone()))
            .map_err(|e| Rejected::Store(e.to_string()))?;
        m.sessions
            .get_mut(session_id)
            .expect("checked above")
            .submitted
            .insert(record.task_id.clone());
        m.records.push(record.clone());
        Ok(record)
    }

    pub fn stats(&self) -> Stats {
        let m = self.mutable.lock().expect("state lock");
        Stats::from_records(&m.records)
    }
}

/// Runs the service until interrupted.
pub async fn serve(cfg: ServiceConfig) -> Result<()> {
    let state = Arc::new(AppState::from_config(&cfg)?);
    let addr: SocketAddr = format!("{}:{}", cfg.bind, cfg.port)
        .parse()
        .map_err(|e| Error::InvalidArgument(format!("bad bind address: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(format!("{addr}"), e))?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| Error::io(format!("{addr}"), e))
}
