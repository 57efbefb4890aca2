//! HTTP interface.
//!
//! | method | path                  | body / response                                   |
//! |--------|-----------------------|---------------------------------------------------|
//! | GET    | `/health`             | `{"status":"ok","documents":N,"passages":M}`      |
//! | GET    | `/stats`              | index counts, format version, reader mode         |
//! | GET    | `/documents/{doc_id}` | the stored document, or 404                       |
//! | POST   | `/query`              | `{"query", "retriever_top_k"?, "reader_top_k"?}`  |
//!
//! Errors are returned as `{"error": "..."}`.

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use sciqa_core::pipeline::{Pipeline, PipelineError, QueryRequest, ResultRow};
use sciqa_core::reader::ReaderError;

use crate::config::{ReaderMode, ServiceConfig};
use crate::snapshot::{Manifest, Snapshot};
use crate::ServiceError;

pub struct AppState {
    pub pipeline: Pipeline,
    pub manifest: Manifest,
    pub retriever_top_k: usize,
    pub reader_top_k: usize,
    pub reader_mode: ReaderMode,
}

impl AppState {
    pub fn new(config: &ServiceConfig, snapshot: Snapshot) -> Result<Self, ServiceError> {
        let manifest = snapshot.manifest.clone();
        Ok(Self {
            pipeline: config.pipeline(snapshot)?,
            manifest,
            retriever_top_k: config.retriever_top_k,
            reader_top_k: config.reader_top_k,
            reader_mode: config.reader_mode,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    query: String,
    retriever_top_k: Option<usize>,
    reader_top_k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueryResponse {
    pub answers: Vec<ResultRow>,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/stats", get(stats))
        .route("/documents/{doc_id}", get(document))
        .route("/query", post(query))
        .with_state(state)
}

/// Binds and serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let snapshot = Snapshot::load(&config.index_dir)?;
    let state = Arc::new(AppState::new(&config, snapshot)?);
    let listener = tokio::net::TcpListener::bind(config.listen_address)
        .await
        .map_err(|e| ServiceError::Io(format!("bind {}: {e}", config.listen_address)))?;
    let addr: SocketAddr = listener
        .local_addr()
        .map_err(|e| ServiceError::Io(e.to_string()))?;
    tracing::info!(%addr, documents = state.manifest.documents, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))
}

fn error(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let store = state.pipeline.store();
    Json(json!({
        "status": "ok",
        "documents": store.document_count(),
        "passages": store.passage_count(),
    }))
}

async fn stats(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let m = &state.manifest;
    Json(json!({
        "documents": m.documents,
        "passages": m.passages,
        "vocabulary": m.vocabulary,
        "format_version": m.format_version,
        "created_at": m.created_at,
        "split": m.split,
        "reader_mode": state.reader_mode,
        "retriever_top_k": state.retriever_top_k,
        "reader_top_k": state.reader_top_k,
    }))
}

async fn document(State(state): State<Arc<AppState>>, Path(doc_id): Path<String>) -> Response {
    let store = state.pipeline.store();
    match store.get_document(&doc_id) {
        Ok(doc) => {
            let passages: Vec<&str> = store
                .passages_of(&doc_id)
                .map(|p| p.passage_id.as_str())
                .collect();
            Json(json!({
                "doc_id": doc.doc_id,
                "text": doc.text,
                "meta": doc.meta,
                "passages": passages,
            }))
            .into_response()
        }
        Err(e) => error(StatusCode::NOT_FOUND, e),
    }
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let body: QueryBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                format!("invalid request body: {e}"),
            )
        }
    };
    let request = QueryRequest::new(body.query).with_k(
        body.retriever_top_k.unwrap_or(state.retriever_top_k),
        body.reader_top_k.unwrap_or(state.reader_top_k),
    );
    if let Err(e) = request.validate() {
        return error(StatusCode::BAD_REQUEST, e);
    }
    let worker = state.clone();
    let result = tokio::task::spawn_blocking(move || worker.pipeline.run(&request)).await;
    match result {
        Ok(Ok(answers)) => Json(QueryResponse { answers }).into_response(),
        Ok(Err(e)) => error(status_of(&e), e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

fn status_of(e: &PipelineError) -> StatusCode {
    match e {
        PipelineError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        PipelineError::EmptyIndex => StatusCode::SERVICE_UNAVAILABLE,
        PipelineError::Reader {
            source: ReaderError::RemoteUnavailable(_),
            ..
        } => StatusCode::BAD_GATEWAY,
        PipelineError::Reader {
            source: ReaderError::ProtocolViolation { .. } | ReaderError::MalformedResponse(_),
            ..
        } => StatusCode::BAD_GATEWAY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

/// JSON Schema (draft 2020-12) of the `/query` response body.
pub const QUERY_RESPONSE_SCHEMA: &str = include_str!("../schema/result_row.schema.json");
