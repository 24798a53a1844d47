//! JSON-over-HTTP front end for [`evtestbed::session::SessionStore`].
//!
//! Routes, bodies and status codes are listed in `docs/protocol.md`.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use evtestbed::betting::Choice;
use evtestbed::session::{
    QueryPayload, ScenarioInfo, SessionError, SessionReport, SessionStart, SessionStore, Settlement,
};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use uuid::Uuid;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub scenario: String,
    pub subject: String,
    #[serde(default)]
    pub familiarity: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChoiceRequest {
    pub index: usize,
    pub choice: Choice,
}

/// Body of every non-2xx response.
#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ErrorBody {
    /// Stable machine-readable code, e.g. `duplicate`.
    pub error: String,
    pub message: String,
    /// Next open query index, for `duplicate` and `out-of-order`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<usize>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: code.into(),
                message: message.into(),
                expected: None,
            },
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        let (status, code, expected) = match e {
            SessionError::UnknownScenario(_) => (StatusCode::NOT_FOUND, "unknown-scenario", None),
            SessionError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown-session", None),
            SessionError::Finished => (StatusCode::GONE, "finished", None),
            SessionError::Duplicate { expected, .. } => (StatusCode::CONFLICT, "duplicate", Some(expected)),
            SessionError::OutOfOrder { expected, .. } => (StatusCode::CONFLICT, "out-of-order", Some(expected)),
            SessionError::Storage(_) => (StatusCode::INTERNAL_SERVER_ERROR, "storage", None),
        };
        if status.is_server_error() {
            log::error!("{message}");
        }
        ApiError {
            status,
            body: ErrorBody {
                error: code.into(),
                message,
                expected,
            },
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid-request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;
type Store = Arc<SessionStore>;

fn session_id(raw: &str) -> Result<Uuid, ApiError> {
    raw.parse()
        .map_err(|_| SessionError::UnknownSession(raw.to_string()).into())
}

async fn list_scenarios(State(store): State<Store>) -> Json<Vec<ScenarioInfo>> {
    Json(store.scenarios())
}

async fn create_session(
    State(store): State<Store>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionStart>), ApiError> {
    let Json(req) = body?;
    let start = store.create(&req.scenario, &req.subject, &req.familiarity)?;
    log::info!("session {} on `{}` for {}", start.session, start.scenario, req.subject);
    Ok((StatusCode::CREATED, Json(start)))
}

async fn next_query(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<QueryPayload> {
    Ok(Json(store.next_query(session_id(&id)?)?))
}

async fn submit(
    State(store): State<Store>,
    Path(id): Path<String>,
    body: Result<Json<ChoiceRequest>, JsonRejection>,
) -> ApiResult<Settlement> {
    let id = session_id(&id)?;
    let Json(req) = body?;
    Ok(Json(store.submit(id, req.index, req.choice)?))
}

async fn report(State(store): State<Store>, Path(id): Path<String>) -> ApiResult<SessionReport> {
    Ok(Json(store.report(session_id(&id)?)?))
}

/// API routes under `/api`, plus static files from `static_dir` if given.
pub fn router(store: Store, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/scenarios", get(list_scenarios))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/next", get(next_query))
        .route("/sessions/{id}/choices", post(submit))
        .route("/sessions/{id}/report", get(report))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not-found", "no such route") })
        .with_state(store);
    let app = Router::new().nest("/api", api);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serve until ctrl-c.
pub async fn serve(addr: SocketAddr, store: Store, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
