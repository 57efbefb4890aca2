mod common;

use serde_json::Value;

use sciqa::http::QUERY_RESPONSE_SCHEMA;
use sciqa::Snapshot;

fn server() -> (tempfile::TempDir, String) {
    let dir = tempfile::tempdir().unwrap();
    common::ingest_toy(dir.path());
    let snap = Snapshot::load(dir.path()).unwrap();
    let url = common::serve(&common::config(dir.path()), snap);
    (dir, url)
}

#[test]
fn health_reports_counts() {
    let (_dir, url) = server();
    let (status, body) = common::get(&url, "/health");
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["documents"], 12);
    assert!(v["passages"].as_u64().unwrap() >= 12);
}

#[test]
fn query_returns_reader_top_k_rows_matching_schema() {
    let (_dir, url) = server();
    let (status, body) = common::post(
        &url,
        "/query",
        r#"{"query":"Sudden anosmia affected what share of patients with olfactory dysfunction?","retriever_top_k":10,"reader_top_k":2}"#,
    );
    assert_eq!(status, 200, "{body}");
    let v: Value = serde_json::from_str(&body).unwrap();
    let schema: Value = serde_json::from_str(QUERY_RESPONSE_SCHEMA).unwrap();
    assert!(jsonschema::is_valid(&schema, &v), "{body}");
    let rows = v["answers"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["doc_id"], "32150009");
    assert!(rows[0]["answer"].as_str().unwrap().contains("86%"));
    assert!(rows[0]["score"].as_f64().unwrap() >= rows[1]["score"].as_f64().unwrap());
}

#[test]
fn defaults_apply_when_k_is_omitted() {
    let (_dir, url) = server();
    let (status, body) = common::post(
        &url,
        "/query",
        r#"{"query":"vaccine efficacy symptomatic infection"}"#,
    );
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    let n = v["answers"].as_array().unwrap().len();
    assert!((1..=5).contains(&n));
}

#[test]
fn bad_requests_are_400_with_error_body() {
    let (_dir, url) = server();
    for body in [
        "not json",
        r#"{"query":""}"#,
        r#"{"query":"cough","reader_top_k":0}"#,
        r#"{"query":"cough","retriever_top_k":0}"#,
        r#"{"question":"cough"}"#,
    ] {
        let (status, resp) = common::post(&url, "/query", body);
        assert_eq!(status, 400, "{body} -> {resp}");
        let v: Value = serde_json::from_str(&resp).unwrap();
        assert!(v["error"].is_string());
    }
}

#[test]
fn documents_lookup_and_404() {
    let (_dir, url) = server();
    let (status, body) = common::get(&url, "/documents/32150006");
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(
        v["meta"]["name"],
        "Symptoms reported by children in a paediatric cohort"
    );
    assert!(v["text"]
        .as_str()
        .unwrap()
        .contains("tearing of the eyes, sore throat, cough, and runny nose"));
    assert_eq!(v["passages"][0], "32150006#0000");

    let (status, body) = common::get(&url, "/documents/unknown");
    assert_eq!(status, 404);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert!(v["error"].as_str().unwrap().contains("unknown"));
}

#[test]
fn stats_describe_the_snapshot() {
    let (_dir, url) = server();
    let (status, body) = common::get(&url, "/stats");
    assert_eq!(status, 200);
    let v: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["documents"], 12);
    assert_eq!(v["reader_mode"], "baseline");
    assert!(v["vocabulary"].as_u64().unwrap() > 100);
}

#[test]
fn concurrent_queries_are_deterministic() {
    let (_dir, url) = server();
    let body = r#"{"query":"spike protein entry receptor","reader_top_k":3}"#;
    let (_, expected) = common::post(&url, "/query", body);
    let handles: Vec<_> = (0..8)
        .map(|_| {
            let url = url.clone();
            std::thread::spawn(move || common::post(&url, "/query", body).1)
        })
        .collect();
    for h in handles {
        assert_eq!(h.join().unwrap(), expected);
    }
}
