//! Drives the HTTP API in-process: explain a query, open an annotation
//! session, fetch a task, submit feedback (once too long), and read stats.
//!
//! ```text
//! cargo run --example service_client
//! ```
//!
//! `splashkit serve --config data/service/config.toml` exposes the same
//! routes over TCP.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use splashkit::dataset::{load_dataset, Strictness};
use splashkit::explain::load_library;
use splashkit::service::{router, AppState};
use splashkit::sql::SchemaSet;
use tower::ServiceExt;

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> (u16, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(match body {
            Some(v) => Body::from(v.to_string()),
            None => Body::empty(),
        })
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let status = res.status().as_u16();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

#[tokio::main]
async fn main() -> splashkit::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let schemas = SchemaSet::load(root.join("data/schemas"))?;
    let library = load_library(root.join("data/templates/starter.tpl"))?;
    let data = load_dataset(
        root.join("data/sample/splash_sample.jsonl"),
        &schemas,
        Strictness::Strict,
    )?;
    let dir = std::env::temp_dir().join(format!("splashkit-client-{}", std::process::id()));
    let store = dir.join("annotations.jsonl");
    let app = router(Arc::new(AppState::new(schemas, library, &data.examples, &store, 1)?));

    let (_, body) = call(
        &app,
        Method::POST,
        "/v1/explain",
        Some(json!({"db_id": "bike_1", "sql": "SELECT name FROM station ORDER BY dock_count DESC LIMIT 1"})),
    )
    .await;
    println!("explain: {body}");

    let (status, session) = call(
        &app,
        Method::POST,
        "/v1/sessions",
        Some(json!({"annotator_id": "demo", "kind": "annotation"})),
    )
    .await;
    println!("session ({status}): {session}");
    let id = session["session_id"].as_str().unwrap().to_string();

    let (_, next) = call(&app, Method::GET, &format!("/v1/session/{id}/next"), None).await;
    let task = &next["task"];
    println!("task {}: {}", task["task_id"], task["question"]);
    for step in task["steps"].as_array().unwrap() {
        println!("  {}", step.as_str().unwrap());
    }

    let submit = |feedback: &str| {
        json!({
            "task_id": task["task_id"],
            "annotator_id": "demo",
            "verdict": "incorrect",
            "feedback": feedback,
            "elapsed_seconds": 41.5,
        })
    };
    let uri = format!("/v1/session/{id}/annotation");
    let long = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen";
    let (status, body) = call(&app, Method::POST, &uri, Some(submit(long))).await;
    println!("too long ({status}): {body}");
    let (status, body) = call(
        &app,
        Method::POST,
        &uri,
        Some(submit("you should use the teachers table")),
    )
    .await;
    println!("accepted ({status}): {body}");
    let (status, body) = call(&app, Method::POST, &uri, Some(submit("again"))).await;
    println!("again ({status}): {body}");

    let (_, stats) = call(&app, Method::GET, "/v1/stats", None).await;
    println!("stats: {stats}");

    let _ = std::fs::remove_dir_all(dir);
    Ok(())
}
