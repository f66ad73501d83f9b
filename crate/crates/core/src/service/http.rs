//! JSON-over-HTTP surface.
//!
//! | method | path                              | body                          |
//! |--------|-----------------------------------|-------------------------------|
//! | POST   | `/api/intents`                    | intent document               |
//! | POST   | `/api/sessions`                   | none                          |
//! | GET    | `/api/sessions`                   |                               |
//! | GET    | `/api/sessions/{id}`              |                               |
//! | POST   | `/api/sessions/{id}/utterances`   | `{"text": "..."}`             |
//! | GET    | `/api/runs`                       |                               |
//! | GET    | `/api/runs/{id}`                  |                               |
//! | GET    | `/api/models`                     |                               |
//! | POST   | `/api/models`                     | model card                    |
//! | GET    | `/api/data`                       |                               |
//! | POST   | `/api/data`                       | `{data_name, attributes, payload}`, payload base64 |
//!
//! Errors come back as `{"error": code, "message": ..., "field_path"?: ...}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ServiceError, Service};
use crate::data_store::{base64_bytes, DataCard, DataError};
use crate::model_library::{ModelCard, RegistryError};

pub type AppState = Arc<Service>;

pub fn router(service: AppState) -> Router {
    Router::new()
        .route("/api/intents", post(submit_intent))
        .route("/api/sessions", post(open_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/utterances", post(submit_utterance))
        .route("/api/runs", get(list_runs))
        .route("/api/runs/{id}", get(get_run))
        .route("/api/models", get(list_models).post(add_model))
        .route("/api/data", get(list_data).post(add_data))
        .with_state(service)
}

/// Binds the configured address and serves until ctrl-c.
pub async fn serve(service: AppState) -> std::io::Result<()> {
    let addr = service
        .config()
        .listen_addr()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match &self.0 {
            ServiceError::Intent(_) => StatusCode::BAD_REQUEST,
            ServiceError::Session(_) | ServiceError::UnknownRun(_) => StatusCode::NOT_FOUND,
            ServiceError::Registry(RegistryError::DuplicateModelName(_)) => StatusCode::CONFLICT,
            ServiceError::Data(DataError::DuplicateDataName(_)) => StatusCode::CONFLICT,
            ServiceError::Data(DataError::DataNotFound(_)) => StatusCode::NOT_FOUND,
            e if e.is_input_error() => StatusCode::BAD_REQUEST,
            ServiceError::ShuttingDown => StatusCode::SERVICE_UNAVAILABLE,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.0.code(), "message": self.0.to_string() });
        if let ServiceError::Intent(e) = &self.0 {
            body["field_path"] = json!(e.field_path);
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn submit_intent(State(svc): State<AppState>, body: String) -> ApiResult<impl IntoResponse> {
    let run_id = svc.submit_intent(&body)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id }))))
}

async fn open_session(State(svc): State<AppState>) -> impl IntoResponse {
    (StatusCode::CREATED, Json(json!({ "session_id": svc.open_session() })))
}

async fn list_sessions(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.list_sessions())
}

async fn get_session(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.session(&id)?))
}

#[derive(Debug, Deserialize)]
struct Utterance {
    text: String,
}

async fn submit_utterance(
    State(svc): State<AppState>,
    Path(id): Path<String>,
    Json(body): Json<Utterance>,
) -> ApiResult<impl IntoResponse> {
    let run_id = svc.submit_utterance(&id, &body.text)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id, "session_id": id }))))
}

async fn list_runs(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.list_runs())
}

async fn get_run(State(svc): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(svc.get_run(&id)?))
}

async fn list_models(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.list_models())
}

async fn add_model(State(svc): State<AppState>, Json(card): Json<ModelCard>) -> ApiResult<impl IntoResponse> {
    let name = card.model_name.clone();
    svc.register_model(card)?;
    Ok((StatusCode::CREATED, Json(json!({ "model_name": name }))))
}

async fn list_data(State(svc): State<AppState>) -> impl IntoResponse {
    Json(svc.list_data())
}

/// Body of `POST /api/data`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NewData {
    pub data_name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
    #[serde(default, with = "base64_bytes")]
    pub payload: Vec<u8>,
}

async fn add_data(State(svc): State<AppState>, Json(body): Json<NewData>) -> ApiResult<impl IntoResponse> {
    let card = DataCard {
        data_name: body.data_name.clone(),
        attributes: body.attributes,
    };
    svc.register_data(card, body.payload)?;
    Ok((StatusCode::CREATED, Json(json!({ "data_name": body.data_name }))))
}
