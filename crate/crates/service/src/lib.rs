//! HTTP facade over the dialog engine.
//!
//! Sessions live in memory and are keyed by random ids. Each session is
//! locked for the duration of one action, so requests to one session run
//! serially while distinct sessions proceed independently. Sessions idle
//! past the configured TTL are evicted and answer 404 from then on.
//!
//! Routes:
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/sessions` | body `{"mode": "basic" \| "generalized"}`, mode optional |
//! | GET | `/sessions/{id}/view` | current view |
//! | POST | `/sessions/{id}/actions` | body `{"action": ..., "arg": ...}` |
//! | GET | `/sessions/{id}/transcript` | actions so far with outcomes |
//! | GET | `/manifest` | the manifest file as loaded |
//! | GET | `/healthz` | liveness |

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dlgen_core::dialog::{Action, DialogError, DialogState, Mode, TranscriptEntry, View};
use dlgen_core::otml::UiManifest;
use dlgen_core::{load_dataset_file, Dataset, DatasetError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::time::Instant;

pub const DEFAULT_SESSION_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("manifest {path}: {source}")]
    ManifestIo { path: String, source: std::io::Error },
    #[error("manifest {path}: {source}")]
    ManifestParse { path: String, source: serde_json::Error },
    #[error("manifest facets {manifest:?} do not match the dataset facets {dataset:?}")]
    FacetMismatch {
        manifest: Vec<String>,
        dataset: Vec<String>,
    },
}

struct Session {
    state: tokio::sync::Mutex<DialogState>,
    last_active: Mutex<Instant>,
}

impl Session {
    fn touch(&self) {
        *self.last_active.lock().unwrap() = Instant::now();
    }

    fn idle_since(&self, now: Instant) -> Duration {
        now.saturating_duration_since(*self.last_active.lock().unwrap())
    }
}

struct Inner {
    dataset: Arc<Dataset>,
    manifest: UiManifest,
    manifest_text: String,
    ttl: Duration,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

/// Shared server state. Cheap to clone.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    /// `manifest_text` is served verbatim from `/manifest`.
    pub fn new(dataset: Dataset, manifest_text: String, ttl: Duration) -> Result<Self, ConfigError> {
        let manifest = UiManifest::from_json(&manifest_text).map_err(|source| ConfigError::ManifestParse {
            path: "<inline>".into(),
            source,
        })?;
        Self::with_manifest(dataset, manifest, manifest_text, ttl)
    }

    pub fn from_files(dataset: &Path, manifest: &Path, ttl: Duration) -> Result<Self, ConfigError> {
        let ds = load_dataset_file(dataset)?;
        let path = manifest.display().to_string();
        let text = std::fs::read_to_string(manifest).map_err(|source| ConfigError::ManifestIo {
            path: path.clone(),
            source,
        })?;
        let parsed = UiManifest::from_json(&text).map_err(|source| ConfigError::ManifestParse { path, source })?;
        Self::with_manifest(ds, parsed, text, ttl)
    }

    fn with_manifest(
        dataset: Dataset,
        manifest: UiManifest,
        manifest_text: String,
        ttl: Duration,
    ) -> Result<Self, ConfigError> {
        if manifest.facet_schema != dataset.facet_schema() {
            return Err(ConfigError::FacetMismatch {
                manifest: manifest.facet_schema.clone(),
                dataset: dataset.facet_schema().to_vec(),
            });
        }
        Ok(AppState {
            inner: Arc::new(Inner {
                dataset: Arc::new(dataset),
                manifest,
                manifest_text,
                ttl,
                sessions: RwLock::new(HashMap::new()),
            }),
        })
    }

    pub fn manifest(&self) -> &UiManifest {
        &self.inner.manifest
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().unwrap().len()
    }

    /// Drops every session idle for longer than the TTL. Returns how many
    /// were removed.
    pub fn evict_idle(&self) -> usize {
        let now = Instant::now();
        let mut sessions = self.inner.sessions.write().unwrap();
        let before = sessions.len();
        sessions.retain(|_, s| s.idle_since(now) <= self.inner.ttl);
        let evicted = before - sessions.len();
        if evicted > 0 {
            tracing::info!(evicted, "evicted idle sessions");
        }
        evicted
    }

    fn session(&self, id: &str) -> Result<Arc<Session>, ApiError> {
        let found = self.inner.sessions.read().unwrap().get(id).cloned();
        match found {
            Some(s) if s.idle_since(Instant::now()) <= self.inner.ttl => {
                s.touch();
                Ok(s)
            }
            Some(_) => {
                self.inner.sessions.write().unwrap().remove(id);
                tracing::info!(session = id, "session expired");
                Err(ApiError::SessionNotFound(id.to_string()))
            }
            None => Err(ApiError::SessionNotFound(id.to_string())),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/view", get(get_view))
        .route("/sessions/{id}/actions", post(apply_action))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .route("/manifest", get(get_manifest))
        .route("/healthz", get(healthz))
        .with_state(state)
}

/// Serves until the listener fails, sweeping idle sessions in the
/// background.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    let sweeper = state.clone();
    let period = (state.inner.ttl / 4).max(Duration::from_secs(1));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.evict_idle();
        }
    });
    axum::serve(listener, router(state)).await
}

#[derive(Debug)]
pub enum ApiError {
    SessionNotFound(String),
    UnsupportedMode { requested: Mode, available: Mode },
    ActionNotEnabled(&'static str),
    BadRequest(String),
    Engine(DialogError),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match self {
            ApiError::SessionNotFound(id) => (
                StatusCode::NOT_FOUND,
                json!({"code": "SessionNotFound", "detail": format!("no session {id}"), "session": id}),
            ),
            ApiError::UnsupportedMode { requested, available } => (
                StatusCode::CONFLICT,
                json!({
                    "code": "UnsupportedMode",
                    "detail": format!("this interface runs {available} sessions, not {requested}"),
                    "mode": requested,
                }),
            ),
            ApiError::ActionNotEnabled(action) => (
                StatusCode::FORBIDDEN,
                json!({
                    "code": "ActionNotEnabled",
                    "detail": format!("{action} is not enabled by the manifest"),
                    "action": action,
                }),
            ),
            ApiError::BadRequest(detail) => (StatusCode::BAD_REQUEST, json!({"code": "BadRequest", "detail": detail})),
            ApiError::Engine(e) => (StatusCode::UNPROCESSABLE_ENTITY, engine_error_body(&e)),
        };
        (status, Json(body)).into_response()
    }
}

fn engine_error_body(e: &DialogError) -> Value {
    let mut body = json!({"code": e.code(), "detail": e.to_string()});
    let extra = match e {
        DialogError::NoMatch(token) => Some(("token", token)),
        DialogError::NoSuchChild(label) => Some(("label", label)),
        DialogError::UnknownFacet(facet) | DialogError::DuplicateFacet(facet) => Some(("facet", facet)),
        _ => None,
    };
    if let Some((key, value)) = extra {
        body[key] = json!(value);
    }
    body
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    mode: Option<Mode>,
}

#[derive(Debug, Serialize)]
struct Created {
    id: String,
    view: View,
}

async fn create_session(
    State(app): State<AppState>,
    body: Option<Json<CreateRequest>>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let available = app.inner.manifest.mode;
    let requested = body.and_then(|Json(b)| b.mode).unwrap_or(available);
    if requested != available {
        return Err(ApiError::UnsupportedMode { requested, available });
    }
    let state = DialogState::new(Arc::clone(&app.inner.dataset), requested);
    let view = state.view();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Arc::new(Session {
        state: tokio::sync::Mutex::new(state),
        last_active: Mutex::new(Instant::now()),
    });
    app.inner.sessions.write().unwrap().insert(id.clone(), session);
    tracing::info!(session = %id, mode = %requested, "session created");
    Ok((StatusCode::CREATED, Json(Created { id, view })))
}

async fn get_view(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<View>, ApiError> {
    let session = app.session(&id)?;
    let state = session.state.lock().await;
    Ok(Json(state.view()))
}

async fn get_transcript(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Vec<TranscriptEntry>>, ApiError> {
    let session = app.session(&id)?;
    let state = session.state.lock().await;
    Ok(Json(state.transcript().to_vec()))
}

async fn apply_action(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Action>, JsonRejection>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let Json(action) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    if !app.inner.manifest.allows(&action) {
        return Err(ApiError::ActionNotEnabled(action.kind()));
    }
    let mut state = session.state.lock().await;
    let (next, outcome) = state.apply(&action);
    *state = next;
    match outcome {
        Ok(response) => Ok(Json(response).into_response()),
        Err(e) => Err(ApiError::Engine(e)),
    }
}

async fn get_manifest(State(app): State<AppState>) -> Response {
    (
        [(header::CONTENT_TYPE, "application/json")],
        app.inner.manifest_text.clone(),
    )
        .into_response()
}

async fn healthz() -> Json<Value> {
    Json(json!({"status": "ok"}))
}
