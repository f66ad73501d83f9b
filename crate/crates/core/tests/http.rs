mod support;

use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use sai_core::service::http::router;
use sai_core::service::Service;
use serde_json::{json, Value};
use support::*;
use tower::ServiceExt;

async fn call(service: &Arc<Service>, method: Method, uri: &str, body: Option<String>) -> (StatusCode, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let response = router(Arc::clone(service)).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn finished(service: &Arc<Service>, run_id: &str) -> Value {
    let svc = Arc::clone(service);
    let id = run_id.to_string();
    tokio::task::spawn_blocking(move || svc.wait_for(&id, WAIT).unwrap()).await.unwrap();
    call(service, Method::GET, &format!("/api/runs/{run_id}"), None).await.1
}

#[tokio::test]
async fn intent_lifecycle_over_http() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let (status, body) = call(&service, Method::POST, "/api/intents", Some(read_fixture("intents/chain3.json"))).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let run_id = body["run_id"].as_str().unwrap().to_string();

    let run = finished(&service, &run_id).await;
    assert_eq!(run["phase"], "done");
    assert_eq!(run["final_report"]["combinations"].as_array().unwrap().len(), 2);

    let (status, runs) = call(&service, Method::GET, "/api/runs", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(runs[0]["run_id"], run_id.as_str());
}

#[tokio::test]
async fn bad_intent_reports_field_path() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let doc = read_fixture("intents/invalid_extra_key.json");
    let (status, body) = call(&service, Method::POST, "/api/intents", Some(doc)).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"], "SchemaViolation");
    assert_eq!(body["field_path"], "priority");
}

#[tokio::test]
async fn unknown_run_and_session_are_not_found() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let (status, body) = call(&service, Method::GET, "/api/runs/run-nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"], "UnknownRun");
    let (status, _) = call(&service, Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn session_utterances_over_http() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let (status, body) = call(&service, Method::POST, "/api/sessions", None).await;
    assert_eq!(status, StatusCode::CREATED);
    let session = body["session_id"].as_str().unwrap().to_string();

    let text = json!({ "text": "measure cell_trace then allocate" }).to_string();
    let uri = format!("/api/sessions/{session}/utterances");
    let (status, body) = call(&service, Method::POST, &uri, Some(text)).await;
    assert_eq!(status, StatusCode::ACCEPTED);
    let run = finished(&service, body["run_id"].as_str().unwrap()).await;
    assert_eq!(run["phase"], "done");

    let (_, log) = call(&service, Method::GET, &format!("/api/sessions/{session}"), None).await;
    assert!(log["chat_log"].as_array().unwrap().len() >= 2, "{log}");
    let (_, all) = call(&service, Method::GET, "/api/sessions", None).await;
    assert_eq!(all.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn models_and_data_registration() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let card = json!({
        "model_name": "route-new",
        "task_type": "route",
        "latency_ms": 1.0,
        "resource_utilization": 0.1,
        "consumes": ["allocation"],
        "produces": ["routes"]
    });
    let (status, _) = call(&service, Method::POST, "/api/models", Some(card.to_string())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, body) = call(&service, Method::POST, "/api/models", Some(card.to_string())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["error"], "DuplicateModelName");
    let (_, models) = call(&service, Method::GET, "/api/models", None).await;
    assert!(models.as_array().unwrap().iter().any(|m| m["model_name"] == "route-new"));

    let data = json!({ "data_name": "edge_trace", "attributes": { "modality": "telemetry" }, "payload": "AAEC" });
    let (status, _) = call(&service, Method::POST, "/api/data", Some(data.to_string())).await;
    assert_eq!(status, StatusCode::CREATED);
    let (status, _) = call(&service, Method::POST, "/api/data", Some(data.to_string())).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(service.data_store().resolve("edge_trace").unwrap().payload, vec![0, 1, 2]);
    let (_, listed) = call(&service, Method::GET, "/api/data", None).await;
    assert!(listed.as_array().unwrap().iter().any(|d| d["data_name"] == "edge_trace"));
}
