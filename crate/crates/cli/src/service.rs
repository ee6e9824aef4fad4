//! HTTP session service used by the weight studio.
//!
//! Each session owns a resumable fairing process. Request bodies and
//! responses are camelCase JSON; control point indices are 0-based. Errors
//! are returned as `{code, message, detail}` with 400 for malformed
//! requests, 404 for unknown sessions, 409 while a run is in flight and 422
//! for requests that are well formed but invalid.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fairpia_core::engine::{FairingConfig, FairingProcess, StopReason, WeightPolicy, WeightWarning, DEFAULT_MAX_ITERATIONS};
use fairpia_core::metrics::MetricsRecord;
use fairpia_core::model_file::ModelFile;
use fairpia_core::select::{rank_with, RankedPoint};
use fairpia_core::weights::RangeSpec;
use fairpia_core::curve::DEFAULT_COMB_SAMPLES;
use fairpia_core::{Error, FunctionalKind, Geometry};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::Mutex;
use uuid::Uuid;

use crate::commands::DEFAULT_OMEGA;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Idle,
    Running,
    Converged,
    IterationCapped,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: String,
    message: String,
    detail: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.to_string(),
            message: message.into(),
            detail: Value::Null,
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("no session `{id}`"))
    }

    fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "busy", "a fairing run is in progress for this session")
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_argument", message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let detail = match &e {
            Error::Field { field, .. } => json!({ "field": field }),
            Error::Parse { line, column, .. } => json!({ "line": line, "column": column }),
            Error::InvalidWeight { .. } | Error::ExcludedPoint { .. } => json!({ "debug": format!("{e:?}") }),
            _ => Value::Null,
        };
        let status = match e {
            Error::Parse { .. } => StatusCode::BAD_REQUEST,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            code: e.code().to_string(),
            message: e.to_string(),
            detail,
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message, "detail": self.detail });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<T, ApiError>;

/// Extracts a JSON body, turning rejections into the error payload.
fn body<T>(payload: std::result::Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    payload.map(|Json(v)| v).map_err(ApiError::from)
}

struct Committed {
    process: FairingProcess,
    status: Status,
    /// Metadata carried over from the uploaded model.
    metadata: Option<serde_json::Map<String, Value>>,
}

struct Session {
    /// Held for the duration of a run; other mutations fail fast with 409.
    guard: Mutex<()>,
    /// Bumped by reset so that an in-flight run discards its result.
    epoch: AtomicU64,
    state: RwLock<Committed>,
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<Uuid, Arc<Session>>>,
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        let uuid = Uuid::parse_str(id).map_err(|_| ApiError::not_found(id))?;
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(&uuid)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

pub fn router(static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session).delete(delete_session))
        .route("/sessions/{id}/model", get(get_model))
        .route("/sessions/{id}/weights", axum::routing::put(put_weights))
        .route("/sessions/{id}/fair", post(post_fair))
        .route("/sessions/{id}/autoselect", post(post_autoselect))
        .route("/sessions/{id}/trace", get(get_trace))
        .route("/sessions/{id}/comb", get(get_comb))
        .route("/sessions/{id}/curvature-grid", get(get_grid))
        .route("/sessions/{id}/reset", post(post_reset))
        .with_state(Arc::new(AppState::default()));
    match static_dir {
        Some(dir) => app.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(host: &str, port: u16, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SessionView {
    session_id: String,
    status: Status,
    kind: FunctionalKind,
    policy: WeightPolicy,
    iteration: usize,
    stop_reason: Option<StopReason>,
    weights: Vec<f64>,
    requested_weights: Vec<f64>,
    active_set: Option<Vec<usize>>,
    warnings: Vec<WeightWarning>,
    metrics: Option<MetricsRecord>,
}

fn view(id: &str, c: &Committed) -> SessionView {
    let p = &c.process;
    SessionView {
        session_id: id.to_string(),
        status: c.status,
        kind: p.kind(),
        policy: p.policy(),
        iteration: p.iteration(),
        stop_reason: p.stop_reason(),
        weights: p.weights().to_vec(),
        requested_weights: p.requested_weights().to_vec(),
        active_set: p.active_set().map(<[usize]>::to_vec),
        warnings: p.warnings().to_vec(),
        metrics: (p.iteration() > 0).then(|| p.trace().last().cloned()).flatten(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateRequest {
    model: Value,
    policy: Option<WeightPolicy>,
    kind: Option<FunctionalKind>,
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    payload: std::result::Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let req = body(payload)?;
    let file = ModelFile::parse(&req.model.to_string()).map_err(|e| match e {
        // The body itself was valid JSON, so a model that fails to
        // deserialise is a validation failure rather than a syntax error.
        Error::Parse { message, .. } => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_model", message),
        other => other.into(),
    })?;
    let geometry = file.to_geometry()?;
    let kind = req.kind.unwrap_or_else(|| geometry.default_kind());
    let weights = file.weights.clone().unwrap_or_else(|| vec![DEFAULT_OMEGA; geometry.len()]);
    let config = FairingConfig::new(kind, weights).with_policy(req.policy.unwrap_or_default());
    let process = FairingProcess::new(&geometry, &config)?;
    let id = Uuid::new_v4();
    let session = Arc::new(Session {
        guard: Mutex::new(()),
        epoch: AtomicU64::new(0),
        state: RwLock::new(Committed {
            process,
            status: Status::Idle,
            metadata: file.metadata.clone(),
        }),
    });
    let v = view(&id.to_string(), &session.state.read().expect("fresh lock"));
    app.sessions.write().expect("session table poisoned").insert(id, session);
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(v)))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = app.session(&id)?;
    let c = s.state.read().expect("session poisoned");
    Ok(Json(view(&id, &c)))
}

async fn delete_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let s = app.session(&id)?;
    s.epoch.fetch_add(1, Ordering::SeqCst);
    let uuid = Uuid::parse_str(&id).map_err(|_| ApiError::not_found(&id))?;
    app.sessions.write().expect("session table poisoned").remove(&uuid);
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct ModelView {
    status: Status,
    iteration: usize,
    model: ModelFile,
}

async fn get_model(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let c = s.state.read().expect("session poisoned");
    let mut model = ModelFile::from_geometry(&c.process.current_geometry()?);
    model.weights = Some(c.process.requested_weights().to_vec());
    model.metadata = c.metadata.clone();
    let v = ModelView {
        status: c.status,
        iteration: c.process.iteration(),
        model,
    };
    Ok(precise_json(&v))
}

/// JSON response with every float written to full precision.
fn precise_json<T: Serialize>(value: &T) -> Response {
    (
        [(axum::http::header::CONTENT_TYPE, "application/json")],
        fairpia_core::model_file::to_precise_json(value),
    )
        .into_response()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct WeightsRequest {
    weights: Option<Vec<f64>>,
    range_spec: Option<String>,
    policy: Option<WeightPolicy>,
}

async fn put_weights(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: std::result::Result<Json<WeightsRequest>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    let s = app.session(&id)?;
    let req = body(payload)?;
    let _guard = s.guard.try_lock().map_err(|_| ApiError::busy())?;
    let mut c = s.state.write().expect("session poisoned");
    let n = c.process.original().len();
    let weights = match (req.weights, req.range_spec) {
        (Some(w), None) => w,
        (None, Some(spec)) => spec.parse::<RangeSpec>()?.resolve(n, Some(DEFAULT_OMEGA))?,
        (None, None) if req.policy.is_some() => c.process.requested_weights().to_vec(),
        _ => return Err(ApiError::invalid("give exactly one of `weights` or `rangeSpec`")),
    };
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            what: "weights",
            expected: n,
            actual: weights.len(),
        }
        .into());
    }
    if let Some(policy) = req.policy {
        let previous = c.process.policy();
        c.process.set_policy(policy)?;
        if let Err(e) = c.process.set_weights(&weights) {
            c.process.set_policy(previous)?;
            return Err(e.into());
        }
    } else {
        c.process.set_weights(&weights)?;
    }
    c.status = Status::Idle;
    Ok(Json(view(&id, &c)))
}

#[derive(Debug, Default, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum Mode {
    #[default]
    Run,
    Step,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct FairRequest {
    #[serde(default)]
    mode: Mode,
    kind: Option<FunctionalKind>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    /// 0-based indices; an empty list means every point.
    active_set: Option<Vec<usize>>,
}

fn status_of(stop: Option<StopReason>) -> Status {
    match stop {
        Some(StopReason::Converged | StopReason::FixedPoint) => Status::Converged,
        Some(StopReason::IterationCap) => Status::IterationCapped,
        Some(StopReason::Cancelled) | None => Status::Idle,
    }
}

/// Builds a fresh process from the original geometry for another
/// functional, keeping the requested weights, policy and active set.
fn restart_with_kind(p: &FairingProcess, kind: FunctionalKind) -> fairpia_core::Result<FairingProcess> {
    let mut config = FairingConfig::new(kind, p.requested_weights().to_vec()).with_policy(p.policy());
    config.active_set = p.active_set().map(<[usize]>::to_vec);
    FairingProcess::new(p.original(), &config)
}

async fn post_fair(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: Option<Json<Value>>,
) -> ApiResult<Json<SessionView>> {
    let s = app.session(&id)?;
    let req: FairRequest = match payload {
        Some(Json(v)) => serde_json::from_value(v)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.to_string()))?,
        None => FairRequest::default(),
    };
    let guard = s.guard.try_lock().map_err(|_| ApiError::busy())?;
    let epoch = s.epoch.load(Ordering::SeqCst);
    let mut process = {
        let mut c = s.state.write().expect("session poisoned");
        if let Some(kind) = req.kind.filter(|&k| k != c.process.kind()) {
            c.process = restart_with_kind(&c.process, kind)?;
            c.status = Status::Idle;
        }
        if let Some(active) = req.active_set.clone() {
            c.process.set_active_set((!active.is_empty()).then_some(active))?;
        }
        if let Some(tol) = req.tol {
            if tol.is_nan() || tol < 0.0 {
                return Err(ApiError::invalid(format!("tol must be non-negative, got {tol}")));
            }
            c.process.set_tolerance(tol);
        }
        if matches!(c.process.stop_reason(), Some(StopReason::Converged | StopReason::FixedPoint)) {
            c.status = Status::Converged;
            return Ok(Json(view(&id, &c)));
        }
        c.status = Status::Running;
        c.process.clone()
    };
    let max_iter = req.max_iter.unwrap_or(DEFAULT_MAX_ITERATIONS);
    let mode = req.mode;
    let session = s.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let result = match mode {
            Mode::Step => process.step().map(|_| ()),
            Mode::Run => {
                let remaining = max_iter.saturating_sub(process.iteration());
                process
                    .run_until(remaining, || session.epoch.load(Ordering::SeqCst) != epoch)
                    .map(|_| ())
            }
        };
        result.map(|()| process)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let mut c = s.state.write().expect("session poisoned");
    let cancelled = s.epoch.load(Ordering::SeqCst) != epoch;
    let result = match outcome {
        Ok(process) if !cancelled => {
            c.status = status_of(process.stop_reason());
            c.process = process;
            Ok(Json(view(&id, &c)))
        }
        Ok(_) => Err(ApiError::new(StatusCode::CONFLICT, "cancelled", "the session was reset during the run")),
        Err(e) => {
            if c.status == Status::Running {
                c.status = Status::Idle;
            }
            Err(e.into())
        }
    };
    drop(c);
    drop(guard);
    result
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct AutoSelectRequest {
    m: usize,
    kind: Option<FunctionalKind>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct AutoSelectView {
    ranking: Vec<RankedPoint>,
    selected: Vec<usize>,
    session: SessionView,
}

/// Ranks the current control points and makes the top `m` the active set.
async fn post_autoselect(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    payload: std::result::Result<Json<AutoSelectRequest>, JsonRejection>,
) -> ApiResult<Json<AutoSelectView>> {
    let s = app.session(&id)?;
    let req = body(payload)?;
    let _guard = s.guard.try_lock().map_err(|_| ApiError::busy())?;
    let mut c = s.state.write().expect("session poisoned");
    if let Some(kind) = req.kind.filter(|&k| k != c.process.kind()) {
        c.process = restart_with_kind(&c.process, kind)?;
        c.status = Status::Idle;
    }
    let n = c.process.original().len();
    if req.m == 0 || req.m > n {
        return Err(ApiError::invalid(format!("m must lie in 1..={n}, got {}", req.m)));
    }
    let current: Geometry = c.process.current_geometry()?;
    let ranking = rank_with(c.process.gram(), &current)?;
    let selected: Vec<usize> = ranking.iter().filter(|r| !r.excluded).take(req.m).map(|r| r.index).collect();
    if selected.is_empty() {
        return Err(ApiError::invalid("every control point is excluded from the ranking"));
    }
    c.process.set_active_set(Some(selected.clone()))?;
    c.status = Status::Idle;
    Ok(Json(AutoSelectView {
        ranking,
        selected,
        session: view(&id, &c),
    }))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct TraceView {
    status: Status,
    records: Vec<MetricsRecord>,
}

/// The trace stays empty until the first iteration has been performed.
async fn get_trace(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<TraceView>> {
    let s = app.session(&id)?;
    let c = s.state.read().expect("session poisoned");
    let records = if c.process.iteration() == 0 {
        Vec::new()
    } else {
        c.process.trace().to_vec()
    };
    Ok(Json(TraceView {
        status: c.status,
        records,
    }))
}

#[derive(Debug, Deserialize)]
struct CombQuery {
    samples: Option<usize>,
    scale: Option<f64>,
}

async fn get_comb(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<CombQuery>,
) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let c = s.state.read().expect("session poisoned");
    match c.process.current_geometry()? {
        Geometry::Curve(curve) => {
            let samples = q.samples.unwrap_or(DEFAULT_COMB_SAMPLES);
            if !(2..=100_000).contains(&samples) {
                return Err(ApiError::invalid("samples must lie in 2..=100000"));
            }
            Ok(precise_json(&curve.curvature_comb(samples, q.scale)?))
        }
        Geometry::Surface(_) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unsupported_geometry",
            "curvature combs are only defined for curves",
        )),
    }
}

#[derive(Debug, Deserialize)]
struct GridQuery {
    nu: Option<usize>,
    nv: Option<usize>,
}

async fn get_grid(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<GridQuery>,
) -> ApiResult<Response> {
    let s = app.session(&id)?;
    let c = s.state.read().expect("session poisoned");
    match c.process.current_geometry()? {
        Geometry::Surface(surface) => {
            let (nu, nv) = (q.nu.unwrap_or(32), q.nv.unwrap_or(32));
            if !(2..=1000).contains(&nu) || !(2..=1000).contains(&nv) {
                return Err(ApiError::invalid("nu and nv must lie in 2..=1000"));
            }
            Ok(precise_json(&surface.curvature_grid(nu, nv)?))
        }
        Geometry::Curve(_) => Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "unsupported_geometry",
            "curvature grids are only defined for surfaces",
        )),
    }
}

/// Cancels any run in flight and restores the original model, keeping the
/// weights.
async fn post_reset(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let s = app.session(&id)?;
    s.epoch.fetch_add(1, Ordering::SeqCst);
    let _guard = s.guard.lock().await;
    let mut c = s.state.write().expect("session poisoned");
    c.process = restart_with_kind(&c.process, c.process.kind())?;
    c.status = Status::Idle;
    Ok(Json(view(&id, &c)))
}
