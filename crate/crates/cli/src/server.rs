//! HTTP service exposing explorer sessions under `/api/v1`.
//!
//! Expansions run on the blocking pool. `POST .../commands` with
//! `{"cmd": "expand"}` answers 202 with a job token; clients poll
//! `GET /api/v1/jobs/{token}` until the state is `done` or `failed`. A
//! session accepts one expansion at a time and answers 409 while busy.
//! Navigation stays available during an expansion.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response as HttpResponse};
use axum::routing::{get, post};
use axum::{Json, Router};
use minima_explorer::explorer::{Command, Event, Outcome, Response, Session, EXPORT_SAMPLES};
use minima_explorer::minima_tree::{Enumeration, ExplorerParams, Progress};
use minima_explorer::roadmap::Ptc;
use minima_explorer::scenarios::{Scenario, BUILTIN_NAMES};
use minima_explorer::scene::{to_svg, PathGeometry, Scene};
use minima_explorer::Error;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const API_VERSION: &str = "v1";

#[derive(Clone, Debug, Default)]
pub struct ServiceConfig {
    /// Extra scenario files offered by name.
    pub scenario_dir: Option<PathBuf>,
    /// Appends one JSON line per session event.
    pub event_log: Option<PathBuf>,
}

struct SessionEntry {
    session: Session,
    /// Events already written to the event log.
    logged: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
enum JobState {
    Running,
    Done,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
struct Job {
    job: String,
    session: String,
    node: usize,
    state: JobState,
    progress: Progress,
    /// Ids of the children the expansion added; set when done.
    #[serde(skip_serializing_if = "Option::is_none")]
    new_nodes: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    response: Option<Response>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

struct Inner {
    config: ServiceConfig,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
    jobs: Mutex<HashMap<String, Arc<Mutex<Job>>>>,
    next_session: AtomicU64,
    log_file: Option<Mutex<File>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panic inside a handler must not take the whole service down.
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl AppState {
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let log_file = match &config.event_log {
            Some(p) => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(p)?)),
            None => None,
        };
        Ok(AppState(Arc::new(Inner {
            config,
            sessions: Mutex::default(),
            jobs: Mutex::default(),
            next_session: AtomicU64::new(1),
            log_file,
        })))
    }

    fn log_line(&self, line: &Value) {
        if let Some(f) = &self.0.log_file {
            let mut f = lock(f);
            if let Err(e) = writeln!(f, "{line}").and_then(|_| f.flush()) {
                log::error!("event log write failed: {e}");
            }
        }
    }

    /// Writes the finished events of a session, in order. A pending
    /// expansion holds back everything after it.
    fn flush_events(&self, id: &str, entry: &mut SessionEntry) {
        let events = entry.session.events();
        while entry.logged < events.len() {
            let e = &events[entry.logged];
            if matches!(e.outcome, Outcome::Pending { .. }) {
                break;
            }
            self.log_line(&json!({ "session": id, "event": e }));
            entry.logged += 1;
        }
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<SessionEntry>>, ApiError> {
        lock(&self.0.sessions)
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{id}`")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Self {
        ApiError { status, code, detail: detail.into() }
    }

    fn malformed(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", detail)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let (status, code) = match e {
            Error::Busy(_) => (StatusCode::CONFLICT, "busy"),
            Error::LeafLevel(_) => (StatusCode::CONFLICT, "leaf_level"),
            Error::UnknownNode(_) => (StatusCode::NOT_FOUND, "unknown_node"),
            Error::Scenario(_) | Error::UnknownBuiltin(_) => (StatusCode::BAD_REQUEST, "invalid_scenario"),
            _ => (StatusCode::BAD_REQUEST, "invalid_request"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> HttpResponse {
        (self.status, Json(json!({ "error": self.code, "detail": self.detail }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::malformed(e.to_string()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/health", get(health))
        .route("/api/v1/scenarios", get(list_scenarios))
        .route("/api/v1/sessions", post(create_session))
        .route("/api/v1/sessions/{sid}", get(get_session).delete(delete_session))
        .route("/api/v1/sessions/{sid}/tree", get(get_tree))
        .route("/api/v1/sessions/{sid}/document", get(get_document))
        .route("/api/v1/sessions/{sid}/events", get(get_events))
        .route("/api/v1/sessions/{sid}/scene", get(get_scene))
        .route("/api/v1/sessions/{sid}/svg", get(get_svg))
        .route("/api/v1/sessions/{sid}/commands", post(post_command))
        .route("/api/v1/sessions/{sid}/nodes/{node}/geometry", get(get_geometry))
        .route("/api/v1/sessions/{sid}/nodes/{node}/export", get(get_export))
        .route("/api/v1/jobs/{token}", get(get_job))
        .with_state(state)
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "api": API_VERSION }))
}

async fn list_scenarios(State(state): State<AppState>) -> Json<Value> {
    let mut files = Vec::new();
    if let Some(dir) = &state.0.config.scenario_dir {
        if let Ok(entries) = std::fs::read_dir(dir) {
            for e in entries.flatten() {
                let name = e.file_name().to_string_lossy().into_owned();
                if let Some(stem) = name.strip_suffix(".toml") {
                    files.push(stem.to_string());
                }
            }
        }
    }
    files.sort();
    Json(json!({ "builtin": BUILTIN_NAMES, "directory": files }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    /// A builtin or scenario-directory name.
    scenario: Option<String>,
    /// A full scenario document, as an alternative to `scenario`.
    scenario_toml: Option<String>,
    n: Option<usize>,
    budget: Option<Ptc>,
    seed: Option<u64>,
    enumeration: Option<Enumeration>,
}

async fn create_session(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body)?;
    let scenario = match (&req.scenario, &req.scenario_toml) {
        (Some(name), None) => crate::resolve_scenario(name, state.0.config.scenario_dir.as_deref())
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_scenario", format!("{e:#}")))?,
        (None, Some(text)) => Scenario::load(text)?,
        _ => return Err(ApiError::malformed("give exactly one of `scenario` and `scenario_toml`")),
    };
    let mut params: ExplorerParams = scenario.params().clone();
    if let Some(n) = req.n {
        params.n = n;
    }
    if let Some(b) = req.budget {
        params.budget = b;
    }
    if let Some(s) = req.seed {
        params.seed = s;
    }
    if let Some(e) = req.enumeration {
        params.enumeration = e;
    }
    let scene = Scene::of(scenario.problem());
    let session = Session::new(Arc::new(scenario), params)?;
    let id = format!("s{}", state.0.next_session.fetch_add(1, Ordering::Relaxed));
    let body = json!({
        "session": id,
        "scenario": session.scenario().stamp(),
        "warnings": session.scenario().warnings(),
        "params": session.params(),
        "view": session.view(),
        "scene": scene,
    });
    state.log_line(&json!({
        "session": id,
        "created": { "scenario": session.scenario().stamp(), "params": session.params() },
    }));
    lock(&state.0.sessions).insert(id.clone(), Arc::new(Mutex::new(SessionEntry { session, logged: 0 })));
    log::info!("created session {id}");
    Ok((StatusCode::CREATED, Json(body)))
}

async fn get_session(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<Json<Value>> {
    let entry = state.session(&sid)?;
    let e = lock(&entry);
    Ok(Json(json!({
        "session": sid,
        "scenario": e.session.scenario().stamp(),
        "busy": e.session.busy(),
        "view": e.session.view(),
    })))
}

async fn delete_session(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<StatusCode> {
    lock(&state.0.sessions)
        .remove(&sid)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session `{sid}`")))
}

/// The tree document with the selection and per-level counts.
async fn get_tree(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<Json<Value>> {
    let entry = state.session(&sid)?;
    let e = lock(&entry);
    let view = e.session.view();
    Ok(Json(json!({
        "tree": e.session.document(),
        "selection": view.selection,
        "level_counts": view.level_counts,
    })))
}

/// The tree document exactly as batch mode writes it.
async fn get_document(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<HttpResponse> {
    let entry = state.session(&sid)?;
    let text = lock(&entry).session.document().to_text();
    Ok(([(header::CONTENT_TYPE, "application/json")], text).into_response())
}

async fn get_events(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<Json<Vec<Event>>> {
    let entry = state.session(&sid)?;
    let events = lock(&entry).session.events().to_vec();
    Ok(Json(events))
}

async fn get_scene(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<Json<Scene>> {
    let entry = state.session(&sid)?;
    let scene = Scene::of(lock(&entry).session.scenario().problem());
    Ok(Json(scene))
}

async fn get_svg(State(state): State<AppState>, Path(sid): Path<String>) -> ApiResult<HttpResponse> {
    let entry = state.session(&sid)?;
    let e = lock(&entry);
    let problem = e.session.scenario().problem();
    let svg = to_svg(&Scene::of(problem), &PathGeometry::all(problem, e.session.tree()), Some(e.session.selection()));
    Ok(([(header::CONTENT_TYPE, "image/svg+xml")], svg).into_response())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryQuery {
    samples: Option<usize>,
}

/// Largest `samples` a geometry request may ask for.
const MAX_SAMPLES: usize = 10_000;

async fn get_geometry(
    State(state): State<AppState>,
    Path((sid, node)): Path<(String, usize)>,
    Query(q): Query<GeometryQuery>,
) -> ApiResult<Json<PathGeometry>> {
    let samples = q.samples.unwrap_or(EXPORT_SAMPLES);
    if !(2..=MAX_SAMPLES).contains(&samples) {
        return Err(ApiError::malformed(format!("samples must be in 2..={MAX_SAMPLES}, got {samples}")));
    }
    let entry = state.session(&sid)?;
    let e = lock(&entry);
    let n = e.session.tree().node(node)?;
    let path = n
        .path
        .as_ref()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_path", "the root has no path"))?;
    Ok(Json(PathGeometry::sampled(e.session.scenario().problem(), node, path, samples)))
}

async fn get_export(
    State(state): State<AppState>,
    Path((sid, node)): Path<(String, usize)>,
) -> ApiResult<Json<Value>> {
    let entry = state.session(&sid)?;
    let e = lock(&entry);
    e.session.tree().node(node)?;
    let export = e
        .session
        .export(node, EXPORT_SAMPLES)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no_path", "the root has no path"))?;
    Ok(Json(json!(export)))
}

async fn post_command(
    State(state): State<AppState>,
    Path(sid): Path<String>,
    body: Bytes,
) -> ApiResult<HttpResponse> {
    let command: Command = parse_body(&body)?;
    let entry = state.session(&sid)?;
    if command != Command::Expand {
        let mut e = lock(&entry);
        let result = e.session.command(command);
        state.flush_events(&sid, &mut e);
        return Ok(Json(result?).into_response());
    }

    let (job, scenario, params) = {
        let mut e = lock(&entry);
        let job = e.session.begin_expand();
        state.flush_events(&sid, &mut e);
        (job?, e.session.scenario_arc(), e.session.params().clone())
    };
    let token = uuid::Uuid::new_v4().simple().to_string();
    let record = Arc::new(Mutex::new(Job {
        job: token.clone(),
        session: sid.clone(),
        node: job.node(),
        state: JobState::Running,
        progress: Progress::default(),
        new_nodes: None,
        response: None,
        error: None,
    }));
    lock(&state.0.jobs).insert(token.clone(), Arc::clone(&record));
    let body = json!({ "job": token, "node": job.node(), "poll": format!("/api/v1/jobs/{token}") });
    log::info!("session {sid}: expanding node {} as job {token}", job.node());

    let worker_state = state.clone();
    tokio::task::spawn_blocking(move || {
        let result = job.run(scenario.problem(), &params, |p| lock(&record).progress = p);
        let mut e = lock(&entry);
        let finished = e.session.finish_expand(result);
        worker_state.flush_events(&sid, &mut e);
        drop(e);
        let mut r = lock(&record);
        match finished {
            Ok(response) => {
                match &response.outcome {
                    Outcome::Expanded { new_children, .. } => {
                        r.state = JobState::Done;
                        r.new_nodes = Some(new_children.clone());
                    }
                    Outcome::ExpansionFailed { error, .. } => {
                        r.state = JobState::Failed;
                        r.error = Some(error.clone());
                    }
                    other => unreachable!("expansion finished with {other:?}"),
                }
                r.response = Some(response);
            }
            Err(err) => {
                r.state = JobState::Failed;
                r.error = Some(err.to_string());
            }
        }
    });
    Ok((StatusCode::ACCEPTED, Json(body)).into_response())
}

async fn get_job(State(state): State<AppState>, Path(token): Path<String>) -> ApiResult<Json<Job>> {
    let record = lock(&state.0.jobs)
        .get(&token)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_job", format!("no job `{token}`")))?;
    let job = lock(&record).clone();
    Ok(Json(job))
}

/// Serves until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}
