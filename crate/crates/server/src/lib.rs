//! JSON-over-HTTP front end for a frozen index snapshot.
//!
//! | route                   | body                                  |
//! |-------------------------|---------------------------------------|
//! | `POST /api/search`      | `{query?, filters?, k?}`              |
//! | `POST /api/summarize`   | `{paper_id, query?, length?}`         |
//! | `GET /api/papers/{id}`  |                                       |
//!
//! Every route is a read; identical requests get identical bodies.

pub mod api;

use std::net::SocketAddr;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use lru::LruCache;

use scisumm_core::snapshot::Snapshot;
use scisumm_core::Config;

use api::{ApiError, ErrorBody, SummarizeRequest, SummaryKey};

#[derive(Clone)]
pub struct AppState {
    pub snapshot: Arc<Snapshot>,
    pub config: Arc<Config>,
    cache: Option<Arc<Mutex<LruCache<SummaryKey, Bytes>>>>,
}

impl AppState {
    pub fn new(snapshot: Snapshot, config: Config) -> Self {
        let cache = NonZeroUsize::new(config.service.cache_capacity).map(|c| Arc::new(Mutex::new(LruCache::new(c))));
        Self { snapshot: Arc::new(snapshot), config: Arc::new(config), cache }
    }

    pub fn cached_summaries(&self) -> usize {
        self.cache.as_ref().map_or(0, |c| c.lock().expect("cache lock").len())
    }
}

fn json_response(status: StatusCode, body: Bytes) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<Bytes, ApiError> {
    serde_json::to_vec(value).map(Bytes::from).map_err(|e| ApiError::Internal(e.to_string()))
}

fn respond(result: Result<Bytes, ApiError>) -> Response {
    match result {
        Ok(body) => json_response(StatusCode::OK, body),
        Err(e) => {
            let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            let body = serde_json::to_vec(&ErrorBody::from(&e)).unwrap_or_default();
            json_response(status, Bytes::from(body))
        }
    }
}

async fn search(State(state): State<AppState>, body: Bytes) -> Response {
    respond(api::decode(&body).and_then(|req| api::search(&state.snapshot, &state.config, req)).and_then(|r| to_json(&r)))
}

async fn summarize(State(state): State<AppState>, body: Bytes) -> Response {
    let key = match api::decode::<SummarizeRequest>(&body).and_then(|req| SummaryKey::new(req, &state.config, None)) {
        Ok(k) => k,
        Err(e) => return respond(Err(e)),
    };
    if let Some(hit) = state.cache.as_ref().and_then(|c| c.lock().expect("cache lock").get(&key).cloned()) {
        return respond(Ok(hit));
    }
    let worker = state.clone();
    let job_key = key.clone();
    let result = tokio::task::spawn_blocking(move || {
        api::summarize(&worker.snapshot, &worker.config, &job_key).and_then(|out| to_json(&out))
    })
    .await
    .unwrap_or_else(|e| Err(ApiError::Internal(e.to_string())));
    if let (Ok(body), Some(cache)) = (&result, &state.cache) {
        cache.lock().expect("cache lock").put(key, body.clone());
    }
    respond(result)
}

async fn paper(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    respond(api::paper(&state.snapshot, &id).and_then(|v| to_json(&v)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/search", post(search))
        .route("/api/summarize", post(summarize))
        .route("/api/papers/{id}", get(paper))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
