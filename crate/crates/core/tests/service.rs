mod common;

use axum::http::Method;
use common::service::*;
use serde_json::json;

#[tokio::test]
async fn annotation_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    contract(dir.path()).await.unwrap();
}

#[tokio::test]
async fn whole_sessions_never_show_sql() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log.jsonl"), 3);
    let sql = sample_sql();
    for kind in ["annotation", "paraphrase"] {
        let (_, created) = call(
            &app,
            Method::POST,
            "/v1/sessions",
            Some(json!({"annotator_id": "a", "kind": kind})),
        )
        .await;
        assert!(!leaks_sql(&created.to_string(), &sql));
        let id = created["session_id"].as_str().unwrap().to_string();
        let mut seen = 0;
        loop {
            let body = next(&app, &id).await;
            assert!(!leaks_sql(&body.to_string(), &sql), "{body}");
            if body["done"] == json!(true) {
                break;
            }
            let task = body["task"]["task_id"].as_str().unwrap().to_string();
            let verdict = (kind == "annotation").then_some("incorrect");
            let (status, ack) = annotate(&app, &id, &task, verdict, "use the other table").await;
            assert_eq!(status, 200, "{ack}");
            assert!(!leaks_sql(&ack.to_string(), &sql));
            seen += 1;
        }
        assert_eq!(seen, 50);
    }
}

#[tokio::test]
async fn session_order_depends_only_on_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log.jsonl"), 11);
    let a = open_session(&app, "a", "annotation").await;
    let b = open_session(&app, "b", "annotation").await;
    assert_eq!((a.as_str(), b.as_str()), ("s1", "s2"));
    let ta = next(&app, &a).await["task"]["task_id"].clone();

    let dir2 = tempfile::tempdir().unwrap();
    let app2 = common::service::app(&dir2.path().join("log.jsonl"), 11);
    let a2 = open_session(&app2, "a", "annotation").await;
    assert_eq!(next(&app2, &a2).await["task"]["task_id"], ta);
}

#[tokio::test]
async fn verdict_rules() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log.jsonl"), 1);
    let s = open_session(&app, "a", "annotation").await;
    let task = next(&app, &s).await["task"]["task_id"].as_str().unwrap().to_string();
    let code = |v: serde_json::Value| v["error"]["code"].as_str().unwrap_or_default().to_string();

    let (st, body) = annotate(&app, &s, &task, Some("incorrect"), "   ").await;
    assert_eq!((st, code(body)), (422, "feedback_required".into()));
    let (st, body) = annotate(&app, &s, &task, Some("correct"), "but why").await;
    assert_eq!((st, code(body)), (422, "feedback_not_allowed".into()));
    let (st, body) = annotate(&app, &s, &task, None, "no verdict").await;
    assert_eq!((st, code(body)), (422, "verdict_required".into()));
    let (st, body) = annotate(&app, &s, "a999", Some("correct"), "").await;
    assert_eq!((st, code(body)), (404, "unknown_task".into()));
    let (st, body) = annotate(&app, "s42", &task, Some("correct"), "").await;
    assert_eq!((st, code(body)), (404, "unknown_session".into()));

    let p = open_session(&app, "b", "paraphrase").await;
    let ptask = next(&app, &p).await["task"]["task_id"].as_str().unwrap().to_string();
    let (st, body) = annotate(&app, &p, &ptask, Some("correct"), "x").await;
    assert_eq!((st, code(body)), (422, "verdict_not_allowed".into()));
    let (st, body) = annotate(&app, &p, &ptask, None, &feedback_of(16)).await;
    assert_eq!((st, code(body)), (422, "feedback_too_long".into()));
}

#[tokio::test]
async fn malformed_bodies_are_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log.jsonl"), 1);
    let req = axum::http::Request::builder()
        .method(Method::POST)
        .uri("/v1/sessions")
        .body(axum::body::Body::from("{nope"))
        .unwrap();
    use tower::ServiceExt;
    let res = app.clone().oneshot(req).await.unwrap();
    assert_eq!(res.status(), 400);
    let (st, body) = call(&app, Method::POST, "/v1/sessions", Some(json!({"annotator_id": "  "}))).await;
    assert_eq!((st, body["error"]["code"].clone()), (422, json!("invalid_argument")));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_sessions_all_land_in_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("log.jsonl");
    let app = app(&store, 5);
    let mut handles = Vec::new();
    for i in 0..8 {
        let app = app.clone();
        handles.push(tokio::spawn(async move {
            let s = open_session(&app, &format!("ann{i}"), "annotation").await;
            for _ in 0..5 {
                let t = next(&app, &s).await["task"]["task_id"].as_str().unwrap().to_string();
                let (st, _) = annotate(&app, &s, &t, Some("correct"), "").await;
                assert_eq!(st, 200);
            }
            s
        }));
    }
    let mut ids = Vec::new();
    for h in handles {
        ids.push(h.await.unwrap());
    }
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 8);
    let (_, stats) = call(&app, Method::GET, "/v1/stats", None).await;
    assert_eq!(stats["completed"], 40);
    let events = splashkit::service::Store::replay(&store).unwrap();
    assert_eq!(events.len(), 48);
    assert_eq!(splashkit::service::Stats::from_store(&store).unwrap().completed, 40);
}

#[tokio::test]
async fn stateless_routes() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(&dir.path().join("log.jsonl"), 1);
    let (st, body) = call(&app, Method::GET, "/v1/health", None).await;
    assert_eq!((st, body), (200, json!({"status": "ok"})));

    let (st, body) = call(
        &app,
        Method::POST,
        "/v1/diff",
        Some(json!({"db_id": "school_records", "pred": "select first_name, last_name from students", "gold": "select first_name from teachers"})),
    )
    .await;
    assert_eq!(st, 200);
    assert_eq!(body["schema_items"], json!(["last_name", "students", "teachers"]));

    let (st, body) = call(
        &app,
        Method::POST,
        "/v1/explain",
        Some(json!({"db_id": "school_records", "sql": "SELECT FROM"})),
    )
    .await;
    assert_eq!(st, 422);
    assert_eq!(body["error"]["code"], "syntax_error");
    assert!(body["error"]["position"].is_number());

    let (st, body) = call(
        &app,
        Method::POST,
        "/v1/explain",
        Some(json!({"db_id": "nope", "sql": "SELECT 1"})),
    )
    .await;
    assert_eq!(st, 404, "{body}");

    let (st, body) = call(
        &app,
        Method::POST,
        "/v1/eval",
        Some(json!({
            "items": [
                {"db_id": "school_records", "pred": "select age from students", "gold": "SELECT T1.age FROM students AS T1"},
                {"db_id": "school_records", "pred": "select age from students", "gold": "select id from students"}
            ],
            "end_to_end": {"base_correct": 427, "supported": 511, "total": 1034}
        })),
    )
    .await;
    assert_eq!(st, 200, "{body}");
    assert_eq!(body["matches"], json!([true, false]));
    let e2e = body["end_to_end_accuracy"].as_f64().unwrap();
    assert!((e2e - 100.0 * (427.0 + 511.0 * 0.5) / 1034.0).abs() < 1e-9);

    let (st, body) = call(
        &app,
        Method::POST,
        "/v1/rerank",
        Some(json!({
            "db_id": "school_records", "method": "handcrafted", "predicted": "select first_name, last_name from students",
            "feedback": "use the teachers table",
            "beam": [
                {"sql": "select first_name, last_name from students", "score": 0.5},
                {"sql": "select age from students", "score": 0.3},
                {"sql": "select first_name from teachers", "score": 0.2}
            ]
        })),
    )
    .await;
    assert_eq!(st, 200, "{body}");
    assert_eq!(body["rank"], 2);
}
