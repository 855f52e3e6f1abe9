mod common;

use std::process::Command;

use common::data;

fn splashkit(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_splashkit"))
        .args(args)
        .env_remove("SPLASHKIT_FORMAT")
        .env("SPLASHKIT_SCHEMAS", data("schemas"))
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn path(rel: &str) -> String {
    data(rel).display().to_string()
}

#[test]
fn explain_prints_numbered_steps() {
    let (code, out, _) = splashkit(&[
        "explain",
        "--db",
        "school_records",
        "--sql",
        "SELECT first_name FROM teachers ORDER BY salary DESC LIMIT 1",
        "--templates",
        &path("templates/starter.tpl"),
    ]);
    assert_eq!(code, 0);
    assert_eq!(
        out,
        "1. find first_name of the teachers table\n2. find the row with the largest salary in the results of step 1\n"
    );
}

#[test]
fn explain_reports_syntax_errors() {
    let (code, out, err) = splashkit(&["explain", "--db", "school_records", "--sql", "SELECT first_name FROM"]);
    assert_eq!(code, 1);
    assert!(out.is_empty());
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn diff_human_and_machine() {
    let args = [
        "diff",
        "--db",
        "school_records",
        "--pred",
        "select first_name, last_name from students",
        "--gold",
        "select first_name from teachers",
    ];
    let (code, out, _) = splashkit(&args);
    assert_eq!(code, 0);
    assert!(out.contains("schema items: {last_name, students, teachers}"), "{out}");

    let mut machine = vec!["--format", "machine"];
    machine.extend(args);
    let (code, out, _) = splashkit(&machine);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(
        v["schema_items"],
        serde_json::json!(["last_name", "students", "teachers"])
    );
}

#[test]
fn diff_report_over_the_sample() {
    let (code, out, _) = splashkit(&[
        "--format",
        "machine",
        "diff",
        "--report",
        "--data",
        &path("sample/splash_sample.jsonl"),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pairs"], 50);
}

#[test]
fn eval_with_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let preds = dir.path().join("preds.sql");
    let records = common::sample().records();
    let lines: Vec<&str> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if i < 10 {
                r.gold_sql.as_str()
            } else {
                r.predicted_sql.as_str()
            }
        })
        .collect();
    std::fs::write(&preds, lines.join("\n") + "\n").unwrap();
    let (code, out, err) = splashkit(&[
        "eval",
        "--pred-file",
        preds.to_str().unwrap(),
        "--data",
        &path("sample/splash_sample.jsonl"),
        "--base-correct",
        "427",
        "--supported",
        "511",
        "--total",
        "1034",
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("correction accuracy: 20.00"), "{out}");
    let e2e = 100.0 * (427.0 + 511.0 * 0.2) / 1034.0;
    assert!(out.contains(&format!("{e2e:.2}")), "{out}");

    let (code, _, err) = splashkit(&[
        "eval",
        "--pred-file",
        preds.to_str().unwrap(),
        "--data",
        &path("sample/splash_sample.jsonl"),
        "--total",
        "1034",
    ]);
    assert_ne!(code, 0);
    assert!(!err.is_empty());
}

#[test]
fn rerank_methods_order_on_the_sample() {
    let acc = |method: &str| {
        let (code, out, err) = splashkit(&[
            "--format",
            "machine",
            "rerank",
            "--beams",
            &path("sample/beams.jsonl"),
            "--data",
            &path("sample/splash_sample.jsonl"),
            "--method",
            method,
            "--seed",
            "3",
        ]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        v["correction_accuracy"].as_f64().unwrap()
    };
    assert!(acc("handcrafted") >= acc("second_best"));
    assert_eq!(acc("second_best"), 0.0);
    let (code, _, err) = splashkit(&["rerank", "--beams", "x", "--data", "y", "--method", "best"]);
    assert_ne!(code, 0);
    assert!(err.contains("best"), "{err}");
}

#[test]
fn stats_and_coverage() {
    let (code, out, _) = splashkit(&[
        "--format",
        "machine",
        "stats",
        "--data",
        &path("sample/splash_sample.jsonl"),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["splits"]["train"]["examples"], 33);

    let (code, out, _) = splashkit(&[
        "coverage",
        "--data",
        &path("sample/splash_sample.jsonl"),
        "--templates",
        &path("templates/starter.tpl"),
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("coverage: 50/50 (100.00%)"), "{out}");
}

#[test]
fn serve_fails_cleanly_on_a_missing_config() {
    let (code, _, err) = splashkit(&["serve", "--config", "/nonexistent/config.toml"]);
    assert_eq!(code, 1);
    assert!(err.contains("config.toml"), "{err}");
}

#[test]
fn service_config_resolves_relative_paths() {
    let cfg = splashkit::service::ServiceConfig::load(data("service/config.toml")).unwrap();
    assert!(cfg.dataset_path.exists());
    assert!(cfg.templates_path.exists());
    assert!(cfg.schemas_path.is_dir());
}

#[test]
fn output_is_byte_identical_across_runs() {
    let runs = [
        vec!["--format", "machine", "stats", "--data", "{data}"],
        vec!["diff", "--report", "--data", "{data}"],
        vec![
            "rerank", "--beams", "{beams}", "--data", "{data}", "--method", "uniform", "--seed", "9",
        ],
        vec![
            "--format", "machine", "rerank", "--beams", "{beams}", "--data", "{data}", "--method", "score", "--seed",
            "9",
        ],
        vec!["coverage", "--data", "{data}", "--templates", "{tpl}"],
    ];
    let (d, b, t) = (
        path("sample/splash_sample.jsonl"),
        path("sample/beams.jsonl"),
        path("templates/starter.tpl"),
    );
    for args in runs {
        let args: Vec<&str> = args
            .iter()
            .map(|a| match *a {
                "{data}" => d.as_str(),
                "{beams}" => b.as_str(),
                "{tpl}" => t.as_str(),
                other => other,
            })
            .collect();
        let first = splashkit(&args);
        let second = splashkit(&args);
        assert_eq!(first.0, 0, "{args:?}: {}", first.2);
        assert_eq!(first.1.as_bytes(), second.1.as_bytes(), "{args:?}");
    }
}

#[test]
fn in_process_run_matches_the_binary() {
    let args = [
        "splashkit",
        "--schemas",
        &path("schemas"),
        "stats",
        "--data",
        &path("sample/splash_sample.jsonl"),
    ];
    let (mut out, mut err) = (Vec::new(), Vec::new());
    assert_eq!(splashkit::cli::run(args, &mut out, &mut err), 0);
    let (_, bin, _) = splashkit(&args[1..]);
    assert_eq!(String::from_utf8(out).unwrap(), bin);
}
