//! JSON-over-HTTP session service driving segmentation runs.
//!
//! Each session holds one image, its seeds and the latest result. Runs execute on
//! the blocking pool; clients poll `/progress` while the accepted count grows.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use ffp_core::edge::ImageBuffer;
use ffp_core::fmm::SeedSets;
use ffp_core::metric::{CostParams, Mu};
use ffp_core::pipeline::{
    segment_fb_with_progress, segment_tube_with_progress, ColorSpace, FbOptions, SegmentationResult, Threshold,
    TubeOptions,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::io;

const MAX_UPLOAD: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub idle_timeout: Duration,
    pub static_dir: Option<PathBuf>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { idle_timeout: Duration::from_secs(3600), static_dir: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Idle,
    Running,
    Done,
    Failed,
}

struct SessionData {
    seeds: Option<SeedSets>,
    status: Status,
    result: Option<Arc<SegmentationResult>>,
    error: Option<String>,
    run_id: u64,
    total: usize,
    last_access: Instant,
}

struct Session {
    image: Arc<ImageBuffer>,
    progress: Arc<AtomicUsize>,
    data: Mutex<SessionData>,
}

struct AppState {
    sessions: Mutex<HashMap<String, Arc<Session>>>,
    next_run: AtomicU64,
    config: ServerConfig,
}

type Shared = Arc<AppState>;

#[derive(Debug)]
struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn unprocessable(msg: impl ToString) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg.to_string())
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<Arc<Session>> {
        let s = self
            .sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("unknown session {id}")))?;
        s.data.lock().expect("session lock").last_access = Instant::now();
        Ok(s)
    }

    /// Drops sessions idle for longer than the timeout, unless a run is in flight.
    fn expire(&self, now: Instant) -> usize {
        let mut table = self.sessions.lock().expect("session table lock");
        let before = table.len();
        table.retain(|_, s| {
            let d = s.data.lock().expect("session lock");
            d.status == Status::Running || now.duration_since(d.last_access) < self.config.idle_timeout
        });
        before - table.len()
    }
}

pub fn router(config: ServerConfig) -> Router {
    let state: Shared = Arc::new(AppState { sessions: Mutex::new(HashMap::new()), next_run: AtomicU64::new(1), config });
    build_router(state)
}

fn build_router(state: Shared) -> Router {
    let static_dir = state.config.static_dir.clone();
    let api = Router::new()
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", axum::routing::delete(delete_session))
        .route("/api/sessions/{id}/seeds", put(put_seeds).get(get_seeds))
        .route("/api/sessions/{id}/run", post(start_run))
        .route("/api/sessions/{id}/progress", get(progress))
        .route("/api/sessions/{id}/label.png", get(label_png))
        .route("/api/sessions/{id}/contours.json", get(contours))
        .route("/api/sessions/{id}/distance.bin", get(distance))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(tower_http::services::ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until the listener fails, expiring idle sessions in the background.
pub async fn serve(listener: tokio::net::TcpListener, config: ServerConfig) -> std::io::Result<()> {
    let state: Shared = Arc::new(AppState { sessions: Mutex::new(HashMap::new()), next_run: AtomicU64::new(1), config });
    let sweeper = state.clone();
    let period = (state.config.idle_timeout / 4).clamp(Duration::from_secs(1), Duration::from_secs(60));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            let n = sweeper.expire(Instant::now());
            if n > 0 {
                log::info!("expired {n} idle sessions");
            }
        }
    });
    axum::serve(listener, build_router(state)).await
}

async fn create_session(State(state): State<Shared>, mut multipart: Multipart) -> ApiResult<impl IntoResponse> {
    let mut bytes: Option<Bytes> = None;
    while let Some(field) = multipart.next_field().await.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))? {
        let named_image = field.name() == Some("image");
        let data = field.bytes().await.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?;
        if named_image || bytes.is_none() {
            bytes = Some(data);
        }
    }
    let bytes = bytes.ok_or_else(|| unprocessable("multipart body has no image field"))?;
    let image = io::load_image_bytes(&bytes).map_err(unprocessable)?;
    let grid = image.grid();
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session {
        image: Arc::new(image),
        progress: Arc::new(AtomicUsize::new(0)),
        data: Mutex::new(SessionData {
            seeds: None,
            status: Status::Idle,
            result: None,
            error: None,
            run_id: 0,
            total: grid.len(),
            last_access: Instant::now(),
        }),
    };
    state.sessions.lock().expect("session table lock").insert(id.clone(), Arc::new(session));
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "width": grid.width(), "height": grid.height() }))))
}

async fn delete_session(State(state): State<Shared>, Path(id): Path<String>) -> StatusCode {
    state.sessions.lock().expect("session table lock").remove(&id);
    StatusCode::NO_CONTENT
}

async fn put_seeds(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<StatusCode> {
    let session = state.session(&id)?;
    let seeds = io::parse_seeds(&body, session.image.grid()).map_err(unprocessable)?;
    session.data.lock().expect("session lock").seeds = Some(seeds);
    Ok(StatusCode::NO_CONTENT)
}

async fn get_seeds(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<io::SeedsJson>> {
    let session = state.session(&id)?;
    let data = session.data.lock().expect("session lock");
    Ok(Json(data.seeds.as_ref().map(io::seeds_to_json).unwrap_or(io::SeedsJson { sets: Vec::new() })))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Fb,
    Tube,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunParams {
    pub alpha_f: Option<f64>,
    pub alpha_b: Option<f64>,
    pub beta_s: Option<f64>,
    pub beta_d: Option<f64>,
    pub sigma: Option<f64>,
    pub epsilon: Option<f64>,
    pub mu: Option<serde_json::Value>,
    pub t_h: Option<serde_json::Value>,
    pub colorspace: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct RunRequest {
    pub mode: RunMode,
    #[serde(default)]
    pub params: RunParams,
    pub n_th: Option<usize>,
}

fn auto_or_number(v: &Option<serde_json::Value>, what: &str) -> ApiResult<Option<f64>> {
    match v {
        None => Ok(None),
        Some(serde_json::Value::String(s)) if s == "auto" => Ok(None),
        Some(serde_json::Value::Number(n)) => {
            n.as_f64().map(Some).ok_or_else(|| unprocessable(format!("{what} must be a number or \"auto\"")))
        }
        Some(_) => Err(unprocessable(format!("{what} must be a number or \"auto\""))),
    }
}

fn cost_params(p: &RunParams) -> ApiResult<CostParams> {
    let d = CostParams::randers();
    let params = CostParams {
        alpha_f: p.alpha_f.unwrap_or(d.alpha_f),
        alpha_b: p.alpha_b.unwrap_or(d.alpha_b),
        beta_s: p.beta_s.unwrap_or(d.beta_s),
        beta_d: p.beta_d.unwrap_or(d.beta_d),
        sigma: p.sigma.unwrap_or(d.sigma),
        epsilon: p.epsilon.unwrap_or(d.epsilon),
        mu: auto_or_number(&p.mu, "mu")?.map_or(Mu::Auto, Mu::Value),
    };
    params.validate().map_err(unprocessable)?;
    Ok(params)
}

enum Job {
    Fb(FbOptions),
    Tube(TubeOptions),
}

fn plan(req: &RunRequest, seeds: &SeedSets, grid_len: usize) -> ApiResult<(Job, usize)> {
    let params = cost_params(&req.params)?;
    match req.mode {
        RunMode::Fb => {
            if seeds.len() < 2 {
                return Err(unprocessable("foreground/background runs need at least 2 seed sets"));
            }
            let colorspace = match req.params.colorspace.as_deref() {
                None | Some("rgb") => ColorSpace::Rgb,
                Some("lab") => ColorSpace::Lab,
                Some(other) => return Err(unprocessable(format!("unknown colorspace {other}"))),
            };
            Ok((Job::Fb(FbOptions { params, colorspace, ..FbOptions::default() }), grid_len))
        }
        RunMode::Tube => {
            if seeds.len() != 1 {
                return Err(unprocessable("tubular runs need exactly 1 seed set"));
            }
            let n_th = req.n_th.ok_or_else(|| unprocessable("tubular runs need n_th"))?;
            if n_th < seeds.point_count() {
                return Err(unprocessable(format!("n_th = {n_th} is below the seed count {}", seeds.point_count())));
            }
            let threshold = auto_or_number(&req.params.t_h, "t_h")?.map_or(Threshold::Auto, Threshold::Value);
            let options = TubeOptions { params, n_th, threshold, ..TubeOptions::new(n_th) };
            Ok((Job::Tube(options), n_th.min(grid_len)))
        }
    }
}

async fn start_run(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let session = state.session(&id)?;
    let req: RunRequest = serde_json::from_slice(&body).map_err(unprocessable)?;
    let run_id = {
        let mut data = session.data.lock().expect("session lock");
        if data.status == Status::Running {
            return Err(ApiError(StatusCode::CONFLICT, "a run is already in flight".into()));
        }
        let seeds = data.seeds.clone().ok_or_else(|| unprocessable("session has no seeds"))?;
        let (job, total) = plan(&req, &seeds, session.image.grid().len())?;
        let run_id = state.next_run.fetch_add(1, Ordering::Relaxed);
        data.status = Status::Running;
        data.run_id = run_id;
        data.total = total;
        data.error = None;
        session.progress.store(0, Ordering::Relaxed);

        let worker = session.clone();
        tokio::task::spawn_blocking(move || {
            let img = worker.image.clone();
            let progress = worker.progress.clone();
            let outcome = match &job {
                Job::Fb(o) => segment_fb_with_progress(&img, &seeds, o, Some(&progress)),
                Job::Tube(o) => segment_tube_with_progress(&img, &seeds, o, Some(&progress)),
            };
            let mut data = worker.data.lock().expect("session lock");
            if data.run_id != run_id {
                return;
            }
            match outcome {
                Ok(result) => {
                    data.result = Some(Arc::new(result));
                    data.status = Status::Done;
                }
                Err(e) => {
                    data.error = Some(e.to_string());
                    data.status = Status::Failed;
                }
            }
        });
        run_id
    };
    Ok((StatusCode::ACCEPTED, Json(json!({ "run_id": run_id }))))
}

async fn progress(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let session = state.session(&id)?;
    let data = session.data.lock().expect("session lock");
    let accepted = match data.status {
        Status::Done => data.result.as_ref().map_or(0, |r| r.stats.accepted_count),
        _ => session.progress.load(Ordering::Relaxed),
    };
    let mut body = json!({
        "status": data.status,
        "accepted_count": accepted,
        "total": data.total,
        "run_id": data.run_id,
    });
    if let Some(e) = &data.error {
        body["error"] = json!(e);
    }
    Ok(Json(body))
}

fn latest(state: &AppState, id: &str) -> ApiResult<Arc<SegmentationResult>> {
    let session = state.session(id)?;
    let data = session.data.lock().expect("session lock");
    data.result.clone().ok_or_else(|| ApiError(StatusCode::NOT_FOUND, "no result yet".into()))
}

async fn label_png(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let result = latest(&state, &id)?;
    let png = io::encode_label_png(&result.label_map).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

async fn contours(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let result = latest(&state, &id)?;
    let body = io::to_json_bytes(&io::contours_json(result.label_map.grid(), &result.contours));
    Ok(([(header::CONTENT_TYPE, "application/json")], body).into_response())
}

async fn distance(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Response> {
    let result = latest(&state, &id)?;
    let body = io::encode_distance_map(&result.distance_map);
    Ok(([(header::CONTENT_TYPE, "application/octet-stream")], body).into_response())
}
