//! HTTP/JSON service over datasets discovered in a data directory.
//!
//! Sessions are immutable and keyed by their configuration digest. Concurrent
//! POSTs of the same configuration share a single computation.

use std::collections::{BTreeMap, HashMap};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tokio::sync::OnceCell;

use crate::clustering::Space;
use crate::corpus::{load_dataset, Dataset, Manifest};
use crate::error::Error;
use crate::seriation::Ordering;
use crate::session::{to_json, Session, SessionConfig, DEFAULT_MAX_POINTS, SCHEMA_VERSION};

const MANIFEST_SUFFIX: &str = "manifest.json";

/// A JSON error body with its HTTP status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(what: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NOT_FOUND", what)
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::UnknownDataset(_) => StatusCode::NOT_FOUND,
            Error::TooFewPoints { .. } | Error::TooManyPoints { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Io { .. } => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    v: u32,
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = to_json(&ErrorBody {
            v: SCHEMA_VERSION,
            error: ErrorDetail {
                code: self.code,
                message: &self.message,
            },
        });
        json_response(self.status, body)
    }
}

fn json_response(status: StatusCode, body: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

type ApiResult = std::result::Result<Response, ApiError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetEntry {
    pub name: String,
    pub manifest: String,
}

/// Manifests directly inside `dir`, keyed by dataset name. Unreadable or
/// malformed manifests are skipped.
pub fn discover_datasets(dir: &Path) -> crate::Result<BTreeMap<String, PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut found = BTreeMap::new();
    for entry in entries.flatten() {
        let path = entry.path();
        let is_manifest = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(MANIFEST_SUFFIX));
        if !is_manifest || !path.is_file() {
            continue;
        }
        if let Ok(m) = Manifest::read(&path) {
            found.entry(m.name).or_insert(path);
        }
    }
    Ok(found)
}

type SessionSlot = Arc<OnceCell<Arc<Session>>>;

/// Shared service state.
#[derive(Debug)]
pub struct AppState {
    data_dir: PathBuf,
    max_points: usize,
    datasets: Mutex<HashMap<String, Arc<Dataset>>>,
    sessions: Mutex<HashMap<String, SessionSlot>>,
    computations: AtomicUsize,
}

impl AppState {
    /// Fails if `data_dir` cannot be read.
    pub fn new(data_dir: impl Into<PathBuf>, max_points: usize) -> crate::Result<Self> {
        let data_dir = data_dir.into();
        std::fs::read_dir(&data_dir).map_err(|e| Error::io(&data_dir, e))?;
        Ok(Self {
            data_dir,
            max_points,
            datasets: Mutex::new(HashMap::new()),
            sessions: Mutex::new(HashMap::new()),
            computations: AtomicUsize::new(0),
        })
    }

    pub fn with_default_cap(data_dir: impl Into<PathBuf>) -> crate::Result<Self> {
        Self::new(data_dir, DEFAULT_MAX_POINTS)
    }

    /// Number of session computations actually run (cache misses).
    pub fn computations(&self) -> usize {
        self.computations.load(AtomicOrdering::SeqCst)
    }

    pub fn list_datasets(&self) -> crate::Result<Vec<DatasetEntry>> {
        Ok(discover_datasets(&self.data_dir)?
            .into_iter()
            .map(|(name, path)| DatasetEntry {
                name,
                manifest: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
            })
            .collect())
    }

    async fn dataset(&self, name: &str) -> std::result::Result<Arc<Dataset>, ApiError> {
        if let Some(d) = self.datasets.lock().expect("dataset cache lock").get(name) {
            return Ok(d.clone());
        }
        let dir = self.data_dir.clone();
        let wanted = name.to_string();
        let loaded = tokio::task::spawn_blocking(move || -> crate::Result<Dataset> {
            let path = discover_datasets(&dir)?
                .remove(&wanted)
                .ok_or_else(|| Error::UnknownDataset(wanted.clone()))?;
            load_dataset(&path)
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))??;
        let loaded = Arc::new(loaded);
        Ok(self
            .datasets
            .lock()
            .expect("dataset cache lock")
            .entry(name.to_string())
            .or_insert(loaded)
            .clone())
    }

    /// Returns the session and whether it was served from cache.
    pub async fn create_session(&self, config: SessionConfig) -> std::result::Result<(Arc<Session>, bool), ApiError> {
        let id = config.hash()?;
        let dataset = self.dataset(&config.dataset).await?;
        let slot = self
            .sessions
            .lock()
            .expect("session cache lock")
            .entry(id.clone())
            .or_default()
            .clone();
        if let Some(s) = slot.get() {
            return Ok((s.clone(), true));
        }
        let max_points = self.max_points;
        let mut computed_here = false;
        let result = slot
            .get_or_try_init(|| {
                computed_here = true;
                self.computations.fetch_add(1, AtomicOrdering::SeqCst);
                async move {
                    tokio::task::spawn_blocking(move || Session::build(dataset, &config, max_points))
                        .await
                        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
                        .map(Arc::new)
                        .map_err(ApiError::from)
                }
            })
            .await;
        match result {
            Ok(s) => Ok((s.clone(), !computed_here)),
            Err(e) => {
                let mut sessions = self.sessions.lock().expect("session cache lock");
                if sessions.get(&id).is_some_and(|s| !s.initialized()) {
                    sessions.remove(&id);
                }
                Err(e)
            }
        }
    }

    pub fn session(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions
            .lock()
            .expect("session cache lock")
            .get(id)
            .and_then(|slot| slot.get().cloned())
    }

    fn require_session(&self, id: &str) -> std::result::Result<Arc<Session>, ApiError> {
        self.session(id)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "SESSION_NOT_FOUND", format!("no session {id}")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/layout", get(layout))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/matrices", get(matrices))
        .route("/sessions/{id}/summaries", get(summaries))
        .route("/sessions/{id}/layers/{layer}/matrix", get(matrix))
        .route("/sessions/{id}/neighbors", get(neighbors))
        .route("/sessions/{id}/points/{pid}/context", get(context))
        .route("/sessions/{id}/closereading", get(close_reading))
        .with_state(state)
}

/// Binds `addr`, mapping an occupied port to a readable error.
pub async fn bind(addr: SocketAddr) -> crate::Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await.map_err(|e| {
        let path = PathBuf::from(addr.to_string());
        if e.kind() == std::io::ErrorKind::AddrInUse {
            Error::io(path, std::io::Error::new(e.kind(), format!("port {} is already in use", addr.port())))
        } else {
            Error::io(path, e)
        }
    })
}

pub async fn serve(listener: tokio::net::TcpListener, state: Arc<AppState>) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

#[derive(Serialize)]
struct DatasetsBody {
    v: u32,
    datasets: Vec<DatasetEntry>,
}

async fn list_datasets(State(state): State<Arc<AppState>>) -> ApiResult {
    let datasets = state.list_datasets()?;
    Ok(json_response(
        StatusCode::OK,
        to_json(&DatasetsBody {
            v: SCHEMA_VERSION,
            datasets,
        }),
    ))
}

#[derive(Serialize)]
struct CreatedBody {
    v: u32,
    id: String,
    cached: bool,
    n_points: usize,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult {
    let config: SessionConfig =
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "INVALID_CONFIG", e.to_string()))?;
    let (session, cached) = state.create_session(config).await?;
    let status = if cached { StatusCode::OK } else { StatusCode::CREATED };
    Ok(json_response(
        status,
        to_json(&CreatedBody {
            v: SCHEMA_VERSION,
            id: session.id.clone(),
            cached,
            n_points: session.n_points(),
        }),
    ))
}

fn payload(state: &AppState, id: &str, pick: fn(&Session) -> &Vec<u8>) -> ApiResult {
    let session = state.require_session(id)?;
    Ok(json_response(StatusCode::OK, pick(&session).clone()))
}

async fn layout(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    payload(&state, &id, |s| &s.payloads.layout)
}

async fn metrics(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    payload(&state, &id, |s| &s.payloads.metrics)
}

async fn matrices(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    payload(&state, &id, |s| &s.payloads.matrices)
}

async fn summaries(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult {
    payload(&state, &id, |s| &s.payloads.summaries)
}

fn parse_param<T: std::str::FromStr>(name: &str, raw: &str) -> std::result::Result<T, ApiError> {
    raw.parse()
        .map_err(|_| ApiError::bad_request(format!("invalid {name} {raw:?}")))
}

fn optional_param<T: std::str::FromStr>(
    query: &HashMap<String, String>,
    name: &str,
    default: T,
) -> std::result::Result<T, ApiError> {
    query.get(name).map_or(Ok(default), |raw| parse_param(name, raw))
}

fn layer_position(session: &Session, raw: &str) -> std::result::Result<usize, ApiError> {
    let layer: usize = parse_param("layer", raw)?;
    session
        .layer_position(layer)
        .ok_or_else(|| ApiError::not_found(format!("layer {layer} is not part of the session")))
}

fn projection_index(session: &Session, query: &HashMap<String, String>) -> std::result::Result<usize, ApiError> {
    let p: usize = optional_param(query, "projection", 0)?;
    if p >= session.rows.len() {
        return Err(ApiError::not_found(format!("projection {p} is not part of the session")));
    }
    Ok(p)
}

async fn matrix(
    State(state): State<Arc<AppState>>,
    UrlPath((id, layer)): UrlPath<(String, String)>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let session = state.require_session(&id)?;
    let pos = layer_position(&session, &layer)?;
    let space: Space = optional_param(&query, "space", Space::Hd)?;
    let ordering: Ordering = optional_param(&query, "ordering", Ordering::Linkage)?;
    let projection = projection_index(&session, &query)?;
    let view = session.matrix_view(projection, pos, space, ordering);
    Ok(json_response(StatusCode::OK, to_json(&view)))
}

async fn neighbors(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let session = state.require_session(&id)?;
    let raw = query.get("k").ok_or_else(|| ApiError::bad_request("missing query parameter k"))?;
    let k: usize = raw.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "K_OUT_OF_RANGE",
            format!("k must be an integer in 1..={}", session.n_points() - 1),
        )
    })?;
    let body = session.neighbors_payload(k)?;
    Ok(json_response(StatusCode::OK, to_json(&body)))
}

async fn context(
    State(state): State<Arc<AppState>>,
    UrlPath((id, pid)): UrlPath<(String, String)>,
) -> ApiResult {
    let session = state.require_session(&id)?;
    let pid: usize = parse_param("point id", &pid)?;
    let body = session
        .context_payload(pid)
        .ok_or_else(|| ApiError::not_found(format!("point {pid} is not in the session")))?;
    Ok(json_response(StatusCode::OK, to_json(&body)))
}

async fn close_reading(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult {
    let session = state.require_session(&id)?;
    let raw = query
        .get("layer")
        .ok_or_else(|| ApiError::bad_request("missing query parameter layer"))?;
    let pos = layer_position(&session, raw)?;
    let projection = projection_index(&session, &query)?;
    let body = session.close_reading_payload(projection, pos)?;
    Ok(json_response(StatusCode::OK, to_json(&body)))
}
