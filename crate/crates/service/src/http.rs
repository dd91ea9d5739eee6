//! HTTP surface of the registry.
//!
//! | Method | Path                   | Body / query                 |
//! |--------|------------------------|------------------------------|
//! | POST   | `/items`               | item document                |
//! | GET    | `/items`               | `?kind=request\|providable`   |
//! | GET    | `/items/{id}`          |                              |
//! | PUT    | `/items/{id}`          | item document                |
//! | DELETE | `/items/{id}`          |                              |
//! | PUT    | `/items/{id}/category` | `{"category": token\|null}`   |
//! | GET    | `/network`             |                              |
//! | GET    | `/stats`               |                              |
//! | GET    | `/report`              |                              |
//! | GET    | `/matches/{id}`        | `?top_k=N`                   |
//! | GET    | `/events`              | `?since=SEQ`, server-sent events |
//!
//! Errors are JSON objects `{"error", "message", "errors": [{field, reason}]}`.

use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event as SseEvent, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, put};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::sync::broadcast::error::RecvError;

use teeda_core::model::{ValidationError, ValidationErrors};
use teeda_core::persistence::ItemDocument;
use teeda_core::{Category, DataKind};

use crate::event::Event;
use crate::registry::{Registry, RegistryError};

#[derive(Debug, Serialize)]
pub struct FieldError {
    pub field: String,
    pub reason: String,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub error: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<FieldError>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error,
                message: message.into(),
                errors: Vec::new(),
            },
        }
    }

    fn validation(errors: &ValidationErrors) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            body: ErrorBody {
                error: "validation_failed",
                message: errors.to_string(),
                errors: errors
                    .iter()
                    .map(|e| FieldError {
                        field: e.field().to_string(),
                        reason: e.to_string(),
                    })
                    .collect(),
            },
        }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        let message = e.to_string();
        match e {
            RegistryError::ValidationFailed(errors) => ApiError::validation(&errors),
            RegistryError::DuplicateId(_) => {
                ApiError::new(StatusCode::CONFLICT, "duplicate_id", message)
            }
            RegistryError::KindChange(_) => {
                ApiError::new(StatusCode::CONFLICT, "kind_change", message)
            }
            RegistryError::UnknownItem(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_item", message)
            }
            RegistryError::UnknownRequest(_) => {
                ApiError::new(StatusCode::NOT_FOUND, "unknown_request", message)
            }
            RegistryError::NotARequest(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "not_a_request", message)
            }
            RegistryError::ReplayGap { .. } => {
                ApiError::new(StatusCode::BAD_REQUEST, "replay_gap", message)
            }
            RegistryError::Store(_) | RegistryError::Internal(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_body", e.to_string()))
}

#[derive(Deserialize)]
struct KindQuery {
    kind: Option<String>,
}

#[derive(Deserialize)]
struct TopKQuery {
    top_k: Option<usize>,
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryBody {
    category: Option<String>,
}

type Shared = Arc<Registry>;

async fn create_item(State(reg): State<Shared>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let doc: ItemDocument = parse_body(&body)?;
    let committed = reg.create_item(&doc)?;
    Ok((StatusCode::CREATED, Json(committed)))
}

async fn list_items(
    State(reg): State<Shared>,
    Query(q): Query<KindQuery>,
) -> ApiResult<Json<Vec<ItemDocument>>> {
    let kind = match q.kind.as_deref() {
        None | Some("") => None,
        Some(raw) => Some(
            DataKind::parse(raw)
                .map_err(|_| ApiError::validation(&ValidationError::UnknownKind(raw.into()).into()))?,
        ),
    };
    Ok(Json(reg.list_items(kind)))
}

async fn get_item(
    State(reg): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<Json<ItemDocument>> {
    reg.get_item(&id)
        .map(Json)
        .ok_or_else(|| RegistryError::UnknownItem(id).into())
}

async fn update_item(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let doc: ItemDocument = parse_body(&body)?;
    Ok(Json(reg.update_item(&id, &doc)?))
}

async fn delete_item(
    State(reg): State<Shared>,
    Path(id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(reg.delete_item(&id)?))
}

async fn categorize(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let body: CategoryBody = parse_body(&body)?;
    let category = match body.category.as_deref() {
        None => None,
        Some(raw) => Some(Category::parse(raw).map_err(|_| {
            ApiError::validation(&ValidationError::UnknownCategory(raw.into()).into())
        })?),
    };
    Ok(Json(reg.categorize(&id, category)?))
}

async fn network(State(reg): State<Shared>) -> impl IntoResponse {
    Json(reg.network())
}

async fn stats(State(reg): State<Shared>) -> impl IntoResponse {
    Json(reg.stats())
}

async fn report(State(reg): State<Shared>) -> impl IntoResponse {
    Json(reg.report())
}

async fn matches(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<TopKQuery>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(reg.matches(&id, q.top_k)?))
}

fn sse_event(event: &Event) -> SseEvent {
    SseEvent::default()
        .id(event.seq.to_string())
        .event(event.action.as_str())
        .data(serde_json::to_string(event).expect("events always serialize"))
}

/// Replayed events, then live events until the subscriber falls behind the
/// broadcast buffer; in that case a final `lagged` event tells the client to
/// resubscribe with `since` set to the last seq it saw.
async fn events(
    State(reg): State<Shared>,
    Query(q): Query<SinceQuery>,
) -> ApiResult<Sse<impl Stream<Item = Result<SseEvent, Infallible>>>> {
    let sub = reg.subscribe(q.since)?;
    let last = sub.replay.last().map(|e| e.seq).or(q.since).unwrap_or(0);
    let replayed = stream::iter(sub.replay.iter().map(sse_event).map(Ok).collect::<Vec<_>>());
    let live = stream::unfold(
        (sub.live, last, false),
        |(mut rx, last, done)| async move {
            if done {
                return None;
            }
            loop {
                match rx.recv().await {
                    Ok(event) if event.seq <= last => continue,
                    Ok(event) => {
                        let seq = event.seq;
                        return Some((Ok(sse_event(&event)), (rx, seq, false)));
                    }
                    Err(RecvError::Lagged(_)) => {
                        let notice = SseEvent::default().event("lagged").data(last.to_string());
                        return Some((Ok(notice), (rx, last, true)));
                    }
                    Err(RecvError::Closed) => return None,
                }
            }
        },
    );
    Ok(Sse::new(replayed.chain(live)).keep_alive(KeepAlive::default()))
}

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/items", get(list_items).post(create_item))
        .route(
            "/items/{id}",
            get(get_item).put(update_item).delete(delete_item),
        )
        .route("/items/{id}/category", put(categorize))
        .route("/network", get(network))
        .route("/stats", get(stats))
        .route("/report", get(report))
        .route("/matches/{id}", get(matches))
        .route("/events", get(events))
        .with_state(registry)
}

/// Binds `addr` and serves until `shutdown` resolves.
pub async fn serve<F>(
    registry: Arc<Registry>,
    addr: SocketAddr,
    shutdown: F,
) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    let listener = TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    serve_on(registry, listener, shutdown).await
}

pub async fn serve_on<F>(
    registry: Arc<Registry>,
    listener: TcpListener,
    shutdown: F,
) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, router(registry))
        .with_graceful_shutdown(shutdown)
        .await
}
