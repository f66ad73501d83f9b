//! Drive the HTTP router in-process: register a model, submit an intent
//! and fetch the finished run.
//!
//! `sai serve` exposes the same router on a socket.

use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use sai_core::service::http::router;
use sai_core::service::{Config, Service};
use sai_core::DataCard;
use tower::ServiceExt;

async fn send(service: &Arc<Service>, method: &str, uri: &str, body: String) -> String {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body))
        .unwrap();
    let response = router(Arc::clone(service)).oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response.into_body().collect().await.unwrap().to_bytes();
    format!("{status} {}", String::from_utf8_lossy(&bytes))
}

#[tokio::main]
async fn main() {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let work = tempfile::tempdir().unwrap();
    std::fs::create_dir(work.path().join("models")).unwrap();
    let config = Config {
        // Added cards are saved into the first registry directory.
        registry_paths: vec![work.path().join("models"), format!("{fixtures}/models").into()],
        keyword_table: format!("{fixtures}/keywords.json").into(),
        // Run outputs are written into the store, so use a scratch one.
        data_dir: work.path().join("data"),
        journal_dir: work.path().join("journal"),
        ..Config::default()
    };
    let service = Arc::new(Service::open(config).unwrap());
    service
        .register_data(DataCard::new("cell_trace", "telemetry"), b"rsrp=-91;sinr=13".to_vec())
        .unwrap();

    let card = r#"{"model_name":"route-mpls","task_type":"route","latency_ms":1.5,"resource_utilization":0.05,"consumes":["allocation"],"produces":["routes"]}"#;
    println!("POST /api/models -> {}", send(&service, "POST", "/api/models", card.into()).await);
    println!("POST /api/models again -> {}", send(&service, "POST", "/api/models", card.into()).await);

    let intent = std::fs::read_to_string(format!("{fixtures}/intents/chain3.json")).unwrap();
    let accepted = send(&service, "POST", "/api/intents", intent).await;
    println!("POST /api/intents -> {accepted}");
    let run_id = accepted.split('"').nth(3).unwrap().to_string();

    let waiter = Arc::clone(&service);
    let id = run_id.clone();
    tokio::task::spawn_blocking(move || waiter.wait_for(&id, Some(Duration::from_secs(30))))
        .await
        .unwrap()
        .unwrap();
    let run = send(&service, "GET", &format!("/api/runs/{run_id}"), String::new()).await;
    println!("GET /api/runs/{run_id} -> {}...", &run[..run.len().min(300)]);
    println!("GET /api/runs/nope -> {}", send(&service, "GET", "/api/runs/nope", String::new()).await);
}
