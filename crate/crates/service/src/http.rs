use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use colorfulness::dataset::{load_manifest, DatasetManifest};
use colorfulness::scaling::DEFAULT_LOOPS;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::eventlog::{replay_file, Event};
use crate::session::{PairOutcome, Session, SessionError, VoteOutcome};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub data_dir: PathBuf,
    pub manifests: Vec<PathBuf>,
}

type Shared = Arc<Mutex<Session>>;

/// Manifests by name, image paths by stimulus id, live sessions by id.
pub struct AppState {
    manifests: HashMap<String, DatasetManifest>,
    images: HashMap<String, PathBuf>,
    sessions: RwLock<HashMap<String, Shared>>,
    data_dir: PathBuf,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    detail: String,
    components: Option<Vec<Vec<String>>>,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            detail: detail.into(),
            components: None,
        }
    }

    fn not_found(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", detail)
    }

    fn internal(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail)
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::Contract(d) => Self::new(StatusCode::UNPROCESSABLE_ENTITY, "contract_violation", d),
            SessionError::Conflict(d) => Self::new(StatusCode::CONFLICT, "conflict", d),
            SessionError::Precondition(d) => Self::new(StatusCode::PRECONDITION_FAILED, "precondition_failed", d),
            SessionError::Scaling(err) => {
                let components = match &err {
                    colorfulness::Error::Disconnected { components } => Some(components.clone()),
                    _ => None,
                };
                Self {
                    status: StatusCode::UNPROCESSABLE_ENTITY,
                    kind: "scaling_error",
                    detail: err.to_string(),
                    components,
                }
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.kind, "detail": self.detail });
        if let Some(c) = self.components {
            body["components"] = json!(c);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn log_path(dir: &Path, id: &str) -> PathBuf {
    dir.join(format!("{id}.jsonl"))
}

fn append(path: &Path, event: &Event) -> std::io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(event.to_line().as_bytes())?;
    f.sync_data()
}

impl AppState {
    /// Loads the manifests and resumes every session logged in `data_dir`.
    pub fn open(data_dir: impl Into<PathBuf>, manifests: Vec<DatasetManifest>) -> Result<Self, String> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir).map_err(|e| format!("{}: {e}", data_dir.display()))?;
        let mut by_name = HashMap::new();
        let mut images = HashMap::new();
        for m in manifests {
            for e in m.entries() {
                if images.insert(e.id.clone(), e.path.clone()).is_some() {
                    return Err(format!("stimulus id `{}` appears in more than one manifest", e.id));
                }
            }
            if by_name.contains_key(m.name()) {
                return Err(format!("manifest name `{}` given twice", m.name()));
            }
            by_name.insert(m.name().to_string(), m);
        }
        let mut sessions = HashMap::new();
        let listing = std::fs::read_dir(&data_dir).map_err(|e| format!("{}: {e}", data_dir.display()))?;
        for entry in listing.flatten() {
            let path = entry.path();
            if path.extension().is_some_and(|x| x == "jsonl") {
                let s = replay_file(&path).map_err(|e| format!("{}: {e}", path.display()))?;
                sessions.insert(s.id().to_string(), Arc::new(Mutex::new(s)));
            }
        }
        Ok(Self {
            manifests: by_name,
            images,
            sessions: RwLock::new(sessions),
            data_dir,
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn session(&self, id: &str) -> ApiResult<Shared> {
        self.sessions
            .read()
            .map_err(|_| ApiError::internal("session table poisoned"))?
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }
}

#[derive(Deserialize)]
struct CreateRequest {
    manifest: String,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_loops")]
    loops: usize,
}

fn default_loops() -> usize {
    DEFAULT_LOOPS
}

#[derive(Serialize)]
struct Created {
    session_id: String,
    pairs_total: usize,
}

async fn create_session(State(app): State<Arc<AppState>>, Json(req): Json<CreateRequest>) -> ApiResult<(StatusCode, Json<Created>)> {
    let manifest = app
        .manifests
        .get(&req.manifest)
        .ok_or_else(|| ApiError::not_found(format!("no manifest `{}`", req.manifest)))?;
    let id = format!("{:032x}", rand::random::<u128>());
    let created_at = now();
    let session = Session::create(&id, &req.manifest, manifest.ids(), req.seed, req.loops, created_at)?;
    let event = Event::Created {
        session_id: id.clone(),
        manifest: req.manifest.clone(),
        ids: session.ids().to_vec(),
        seed: req.seed,
        loops: req.loops,
        created_at,
    };
    append(&log_path(&app.data_dir, &id), &event).map_err(|e| ApiError::internal(e.to_string()))?;
    let pairs_total = session.total_pairs();
    app.sessions
        .write()
        .map_err(|_| ApiError::internal("session table poisoned"))?
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(Created { session_id: id, pairs_total })))
}

async fn next_pair(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<serde_json::Value>> {
    let shared = app.session(&id)?;
    let mut s = shared.lock().map_err(|_| ApiError::internal("session poisoned"))?;
    Ok(Json(match s.next_pair() {
        PairOutcome::Pair {
            left,
            right,
            token,
            progress,
        } => json!({
            "left": format!("/images/{left}"),
            "right": format!("/images/{right}"),
            "left_id": left,
            "right_id": right,
            "pair_token": token,
            "progress": progress,
        }),
        PairOutcome::Complete { progress } => json!({ "complete": true, "progress": progress }),
    }))
}

#[derive(Deserialize)]
struct VoteRequest {
    pair_token: String,
    winner: String,
}

async fn vote(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<VoteRequest>,
) -> ApiResult<Json<serde_json::Value>> {
    let shared = app.session(&id)?;
    let mut s = shared.lock().map_err(|_| ApiError::internal("session poisoned"))?;
    let before = s.clone();
    match s.record_vote(&req.pair_token, &req.winner)? {
        VoteOutcome::Recorded { .. } => {
            let event = Event::Vote {
                pair_token: req.pair_token,
                winner: req.winner,
            };
            if let Err(e) = append(&log_path(&app.data_dir, &id), &event) {
                // an unlogged vote would break replay; undo it
                *s = before;
                return Err(ApiError::internal(format!("could not persist vote: {e}")));
            }
            Ok(Json(json!({ "ok": true, "duplicate": false, "progress": s.progress() })))
        }
        VoteOutcome::Duplicate => Ok(Json(json!({ "ok": true, "duplicate": true, "progress": s.progress() }))),
    }
}

#[derive(Deserialize)]
struct ScoresQuery {
    #[serde(default)]
    partial: bool,
}

async fn scores(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<ScoresQuery>,
) -> ApiResult<Json<serde_json::Value>> {
    let shared = app.session(&id)?;
    let s = shared.lock().map_err(|_| ApiError::internal("session poisoned"))?.clone();
    let v = s.scores(q.partial)?;
    Ok(Json(json!({ "ids": v.ids(), "scores": v.values(), "complete": s.is_complete() })))
}

async fn image(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let path = app
        .images
        .get(&id)
        .ok_or_else(|| ApiError::not_found(format!("no stimulus `{id}`")))?;
    let bytes = tokio::fs::read(path)
        .await
        .map_err(|e| ApiError::not_found(format!("stimulus `{id}` unreadable: {e}")))?;
    let mime = match path.extension().and_then(|x| x.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        _ => "application/octet-stream",
    };
    Ok(([(header::CONTENT_TYPE, mime)], bytes).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/pair", get(next_pair))
        .route("/sessions/{id}/vote", post(vote))
        .route("/sessions/{id}/scores", get(scores))
        .route("/images/{id}", get(image))
        .with_state(state)
}

/// Loads manifests, resumes logged sessions and serves until the process ends.
pub async fn serve(config: ServiceConfig) -> Result<(), String> {
    let manifests = config
        .manifests
        .iter()
        .map(|p| load_manifest(p, true).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let state = Arc::new(AppState::open(&config.data_dir, manifests)?);
    let listener = tokio::net::TcpListener::bind(config.addr)
        .await
        .map_err(|e| format!("bind {}: {e}", config.addr))?;
    let local = listener.local_addr().map_err(|e| e.to_string())?;
    eprintln!("experiment service listening on http://{local}");
    axum::serve(listener, router(state)).await.map_err(|e| e.to_string())
}
