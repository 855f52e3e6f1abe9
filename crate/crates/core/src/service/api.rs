use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AppState, Rejected, Submission, TaskKind, MAX_FEEDBACK_TOKENS};
use crate::diff::{classify_edit, diff_schema_items, query_segments};
use crate::error::Error;
use crate::explain::explain;
use crate::metrics::{end_to_end_accuracy, exact_set_match, EvalOutcome};
use crate::rerank::{rerank, RawCandidate, RerankMethod};
use crate::sql::{parse_sql, render_sql, Query};

/// Structured error response.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: serde_json::Map<String, Value>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            details: serde_json::Map::new(),
        }
    }

    fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownDatabase(_) => StatusCode::NOT_FOUND,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let mut err = ApiError::new(status, e.code(), e.to_string());
        if let Error::Syntax { position, near, .. } = &e {
            err = err.with("position", *position).with("near", near.clone());
        }
        err
    }
}

impl From<Rejected> for ApiError {
    fn from(r: Rejected) -> Self {
        match r {
            Rejected::UnknownSession(id) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`"))
            }
            Rejected::UnknownTask(id) => ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_task",
                format!("task `{id}` is not part of this session"),
            ),
            Rejected::Duplicate(id) => ApiError::new(
                StatusCode::CONFLICT,
                "duplicate_submission",
                format!("task `{id}` was already submitted"),
            )
            .with("task_id", id),
            Rejected::TooLong(count) => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "feedback_too_long",
                format!("feedback has {count} tokens, the limit is {MAX_FEEDBACK_TOKENS}"),
            )
            .with("count", count)
            .with("limit", MAX_FEEDBACK_TOKENS),
            Rejected::FeedbackRequired => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "feedback_required",
                "feedback is required for this submission",
            ),
            Rejected::FeedbackNotAllowed => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "feedback_not_allowed",
                "a `correct` verdict takes no feedback",
            ),
            Rejected::VerdictRequired => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "verdict_required",
                "annotation tasks need a verdict",
            ),
            Rejected::VerdictNotAllowed => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "verdict_not_allowed",
                "paraphrase tasks take no verdict",
            ),
            Rejected::Store(msg) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", msg),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = self.details;
        body.insert("code".into(), self.code.into());
        body.insert("message".into(), self.message.into());
        (self.status, Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn body<T: DeserializeOwned>(bytes: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/explain", post(explain_handler))
        .route("/v1/diff", post(diff_handler))
        .route("/v1/eval", post(eval_handler))
        .route("/v1/rerank", post(rerank_handler))
        .route("/v1/sessions", post(create_session))
        .route("/v1/session/{id}/next", get(next_task))
        .route("/v1/session/{id}/annotation", post(submit))
        .route("/v1/stats", get(stats))
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

fn parse(state: &AppState, sql: &str, db_id: &str) -> Result<Query, ApiError> {
    let schema = state.schemas.require(db_id)?;
    Ok(parse_sql(sql, schema)?)
}

#[derive(Deserialize)]
struct ExplainRequest {
    sql: String,
    db_id: String,
}

#[derive(Serialize)]
struct ExplainResponse {
    steps: Vec<String>,
}

async fn explain_handler(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<ExplainResponse> {
    let req: ExplainRequest = body(&bytes)?;
    let query = parse(&state, &req.sql, &req.db_id)?;
    let schema = state.schemas.require(&req.db_id)?;
    let e = explain(&query, schema, &state.library)?;
    Ok(Json(ExplainResponse { steps: e.steps }))
}

#[derive(Deserialize)]
struct DiffRequest {
    pred: String,
    gold: String,
    db_id: String,
}

#[derive(Serialize)]
struct SegmentOut {
    kind: &'static str,
    position: usize,
    removed: Vec<String>,
    added: Vec<String>,
    category: &'static str,
}

#[derive(Serialize)]
struct DiffResponse {
    distance: usize,
    segments: Vec<SegmentOut>,
    schema_items: Vec<String>,
}

async fn diff_handler(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<DiffResponse> {
    let req: DiffRequest = body(&bytes)?;
    let pred = parse(&state, &req.pred, &req.db_id)?;
    let gold = parse(&state, &req.gold, &req.db_id)?;
    let schema = state.schemas.require(&req.db_id)?;
    let segments: Vec<SegmentOut> = query_segments(&pred, &gold)
        .into_iter()
        .map(|s| SegmentOut {
            kind: s.kind.name(),
            position: s.position,
            category: classify_edit(&s, schema).category.name(),
            removed: s.removed,
            added: s.added,
        })
        .collect();
    Ok(Json(DiffResponse {
        distance: segments.len(),
        segments,
        schema_items: diff_schema_items(&pred, &gold).into_iter().collect(),
    }))
}

#[derive(Deserialize)]
struct EvalItem {
    pred: String,
    gold: String,
    db_id: String,
}

#[derive(Deserialize)]
struct EndToEnd {
    base_correct: u64,
    supported: u64,
    total: u64,
}

#[derive(Deserialize)]
struct EvalRequest {
    items: Vec<EvalItem>,
    #[serde(default)]
    end_to_end: Option<EndToEnd>,
}

#[derive(Serialize)]
struct EvalResponse {
    matches: Vec<bool>,
    correction_accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    end_to_end_accuracy: Option<f64>,
}

async fn eval_handler(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<EvalResponse> {
    let req: EvalRequest = body(&bytes)?;
    if req.items.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_argument",
            "no items to evaluate",
        ));
    }
    let mut flags = Vec::with_capacity(req.items.len());
    for item in &req.items {
        let p = parse(&state, &item.pred, &item.db_id)?;
        let g = parse(&state, &item.gold, &item.db_id)?;
        flags.push(exact_set_match(&p, &g)?);
    }
    let outcome = EvalOutcome::from_flags(flags);
    let end_to_end_accuracy = match req.end_to_end {
        Some(e) => Some(end_to_end_accuracy(
            e.base_correct,
            e.supported,
            e.total,
            100.0 * outcome.correction_accuracy,
        )?),
        None => None,
    };
    Ok(Json(EvalResponse {
        matches: outcome.matches,
        correction_accuracy: outcome.correction_accuracy,
        end_to_end_accuracy,
    }))
}

#[derive(Deserialize)]
struct RerankRequest {
    db_id: String,
    method: String,
    #[serde(default)]
    seed: u64,
    predicted: String,
    #[serde(default)]
    feedback: String,
    beam: Vec<RawCandidate>,
}

#[derive(Serialize)]
struct RerankResponse {
    method: RerankMethod,
    rank: usize,
    sql: String,
    score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    scores: Option<Vec<usize>>,
}

async fn rerank_handler(State(state): State<Arc<AppState>>, bytes: Bytes) -> ApiResult<RerankResponse> {
    let req: RerankRequest = body(&bytes)?;
    let method: RerankMethod = req.method.parse()?;
    let schema = state.schemas.require(&req.db_id)?;
    let predicted = parse_sql(&req.predicted, schema)?;
    let record = crate::rerank::BeamRecord {
        id: "request".into(),
        candidates: req.beam,
    };
    let beam = record.parse(schema)?;
    let choice = rerank(method, &beam, &predicted, &req.feedback, req.seed)?;
    Ok(Json(RerankResponse {
        method: choice.method,
        rank: choice.chosen.rank,
        sql: render_sql(&choice.chosen.query),
        score: choice.chosen.score,
        scores: choice.scores,
    }))
}

#[derive(Deserialize)]
struct SessionRequest {
    annotator_id: String,
    #[serde(default = "default_kind")]
    kind: TaskKind,
}

fn default_kind() -> TaskKind {
    TaskKind::Annotation
}

#[derive(Serialize)]
struct SessionResponse {
    session_id: String,
    kind: TaskKind,
    tasks: usize,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    bytes: Bytes,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let req: SessionRequest = body(&bytes)?;
    if req.annotator_id.trim().is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "invalid_argument",
            "annotator_id is empty",
        ));
    }
    let (session_id, tasks) = state.create_session(&req.annotator_id, req.kind)?;
    Ok((
        StatusCode::CREATED,
        Json(SessionResponse {
            session_id,
            kind: req.kind,
            tasks,
        }),
    ))
}

async fn next_task(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    match state.next_task(&id)? {
        Some(task) => Ok(Json(json!({ "done": false, "task": task }))),
        None => Ok(Json(json!({ "done": true }))),
    }
}

async fn submit(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Json<Value>, ApiError> {
    let sub: Submission = body(&bytes)?;
    let record = state.submit(&id, sub)?;
    Ok(Json(
        json!({ "ok": true, "task_id": record.task_id, "timestamp": record.timestamp }),
    ))
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<super::Stats> {
    Json(state.stats())
}
