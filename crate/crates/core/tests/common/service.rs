//! In-process HTTP helpers for the annotation service.

use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use splashkit::service::{router, AppState};
use tower::ServiceExt;

use super::{sample, schemas, starter};

pub const WORDS: [&str; 16] = [
    "use", "the", "teachers", "table", "and", "only", "keep", "rows", "whose", "salary", "is", "above", "fifty",
    "thousand", "please", "thanks",
];

pub fn feedback_of(n: usize) -> String {
    WORDS[..n].join(" ")
}

pub fn state(store: &Path, seed: u64) -> Arc<AppState> {
    Arc::new(AppState::new(schemas(), starter(), &sample().examples, store, seed).unwrap())
}

pub fn app(store: &Path, seed: u64) -> Router {
    router(state(store, seed))
}

pub async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (u16, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_default())
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

pub async fn open_session(app: &Router, annotator: &str, kind: &str) -> String {
    let (status, body) = call(
        app,
        Method::POST,
        "/v1/sessions",
        Some(json!({"annotator_id": annotator, "kind": kind})),
    )
    .await;
    assert_eq!(status, 201, "{body}");
    body["session_id"].as_str().unwrap().to_string()
}

pub async fn next(app: &Router, session: &str) -> Value {
    let (status, body) = call(app, Method::GET, &format!("/v1/session/{session}/next"), None).await;
    assert_eq!(status, 200, "{body}");
    body
}

pub async fn annotate(app: &Router, session: &str, task: &str, verdict: Option<&str>, feedback: &str) -> (u16, Value) {
    let mut body = json!({
        "task_id": task,
        "annotator_id": "tester",
        "feedback": feedback,
        "elapsed_seconds": 30.0,
    });
    if let Some(v) = verdict {
        body["verdict"] = json!(v);
    }
    call(
        app,
        Method::POST,
        &format!("/v1/session/{session}/annotation"),
        Some(body),
    )
    .await
}

/// Every SQL string of the sample, for scanning annotator payloads.
pub fn sample_sql() -> Vec<String> {
    sample()
        .records()
        .into_iter()
        .flat_map(|r| [r.predicted_sql, r.gold_sql])
        .collect()
}

/// True if `text` carries any SQL.
pub fn leaks_sql(text: &str, sql: &[String]) -> bool {
    let lower = text.to_lowercase();
    lower.contains("select ") || sql.iter().any(|s| text.contains(s.as_str()))
}

/// The annotation round trip; returns a summary line or the first failure.
pub async fn contract(store_dir: &Path) -> Result<String, String> {
    let store = store_dir.join("annotations.jsonl");
    let app = app(&store, 7);
    let sql = sample_sql();
    let mut payloads = Vec::new();

    let session = open_session(&app, "ann-1", "annotation").await;
    let first = next(&app, &session).await;
    payloads.push(first.to_string());
    let task = first["task"]["task_id"].as_str().ok_or("no task")?.to_string();

    let (status, body) = annotate(&app, &session, &task, Some("incorrect"), &feedback_of(16)).await;
    if status != 422 || body["error"]["code"] != "feedback_too_long" || body["error"]["count"] != 16 {
        return Err(format!("16-token feedback: {status} {body}"));
    }
    let (status, body) = annotate(&app, &session, &task, Some("incorrect"), &feedback_of(15)).await;
    if status != 200 {
        return Err(format!("15-token feedback: {status} {body}"));
    }
    let (status, _) = annotate(&app, &session, &task, Some("incorrect"), &feedback_of(3)).await;
    if status != 409 {
        return Err(format!("duplicate accepted with {status}"));
    }
    let second = next(&app, &session).await;
    payloads.push(second.to_string());
    let task2 = second["task"]["task_id"].as_str().ok_or("no second task")?.to_string();
    if task2 == task {
        return Err("finished task served again".into());
    }
    let (status, _) = annotate(&app, &session, &task2, Some("correct"), "").await;
    if status != 200 {
        return Err(format!("correct verdict: {status}"));
    }

    let para = open_session(&app, "ann-2", "paraphrase").await;
    let p = next(&app, &para).await;
    payloads.push(p.to_string());
    let ptask = p["task"]["task_id"].as_str().ok_or("no paraphrase task")?.to_string();
    let (status, _) = annotate(&app, &para, &ptask, None, "find the teachers names").await;
    if status != 200 {
        return Err(format!("paraphrase: {status}"));
    }

    let (_, live) = call(&app, Method::GET, "/v1/stats", None).await;
    drop(app);
    let replayed = self::app(&store, 7);
    let (_, again) = call(&replayed, Method::GET, "/v1/stats", None).await;
    if live != again {
        return Err(format!("stats after replay differ: {live} vs {again}"));
    }
    let after = next(&replayed, &session).await;
    if after["task"]["task_id"] == json!(task) || after["task"]["task_id"] == json!(task2) {
        return Err("replayed session serves a finished task".into());
    }
    payloads.push(after.to_string());

    if let Some(p) = payloads.iter().find(|p| leaks_sql(p, &sql)) {
        return Err(format!("annotator payload carries SQL: {p}"));
    }
    Ok(format!("stats {again}"))
}
