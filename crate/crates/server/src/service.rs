//! The `/v1` HTTP API. Every JSON response carries `api_version`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{FromRequest, Multipart, Path, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use causalis::benchmark::BenchmarkConfig;
use causalis::rca::RcaMode;
use causalis::{Error, PriorKnowledge, TabularDataset, WorkerPool};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tower_http::cors::CorsLayer;
use tower_http::services::{ServeDir, ServeFile};

use crate::ops::{self, DiscoverParams, InferRequest, RcaParams};
use crate::store::{digest, Job, JobKind, JobStatus, Store};

pub const API_VERSION: &str = "v1";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub store_dir: PathBuf,
    /// Built web client; `index.html` is served for unknown paths.
    pub static_dir: Option<PathBuf>,
    pub workers: usize,
    /// Jobs that may run at once.
    pub job_slots: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            store_dir: PathBuf::from("causalis-store"),
            static_dir: None,
            workers: 0,
            job_slots: 1,
        }
    }
}

pub struct AppState {
    store: Store,
    /// Single writer: every mutation happens under this lock and is persisted
    /// before it is released.
    jobs: Mutex<BTreeMap<String, Job>>,
    queue: mpsc::UnboundedSender<String>,
    pool: WorkerPool,
    counter: AtomicU64,
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            body: json!({ "error": message.into() }),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} `{id}`"))
    }
}

fn error_body(e: &Error) -> Value {
    match e {
        Error::Contradictions(list) => json!({
            "error": e.to_string(),
            "contradictions": list,
        }),
        _ => json!({ "error": e.to_string() }),
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Contradictions(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        Self {
            status,
            body: error_body(&e),
        }
    }
}

fn versioned(mut body: Value) -> Value {
    if let Value::Object(map) = &mut body {
        map.insert("api_version".into(), json!(API_VERSION));
        body
    } else {
        json!({ "api_version": API_VERSION, "data": body })
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(versioned(self.body))).into_response()
    }
}

fn ok(body: Value) -> Response {
    (StatusCode::OK, Json(versioned(body))).into_response()
}

type ApiResult = std::result::Result<Response, ApiError>;

/// JSON body parsing with the error in the versioned format.
struct Body<T>(T);

impl<S: Send + Sync, T: serde::de::DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> std::result::Result<Self, ApiError> {
        let bytes = Bytes::from_request(req, state)
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        serde_json::from_slice(&bytes)
            .map(Body)
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))
    }
}

impl AppState {
    fn dataset(&self, id: &str) -> std::result::Result<Arc<TabularDataset>, ApiError> {
        self.store.dataset(id).ok_or_else(|| ApiError::not_found("dataset", id))
    }

    fn submit(&self, kind: JobKind, params: Value) -> std::result::Result<String, ApiError> {
        let n = self.counter.fetch_add(1, Ordering::SeqCst);
        let created = now();
        let seed = format!("{kind:?}|{params}|{n}|{created}");
        let id = digest(seed.as_bytes())[..20].to_owned();
        let job = Job {
            id: id.clone(),
            kind,
            status: JobStatus::Queued,
            params,
            result: None,
            error: None,
            created,
            started: None,
            finished: None,
            wall_time: None,
        };
        {
            let mut jobs = self.jobs.lock().expect("job lock");
            self.store
                .save_job(&job)
                .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
            jobs.insert(id.clone(), job);
        }
        self.queue
            .send(id.clone())
            .map_err(|_| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "job queue is closed"))?;
        Ok(id)
    }

    /// Applies `f` to a job and persists it; `None` when the job is gone.
    fn update(&self, id: &str, f: impl FnOnce(&mut Job)) -> Option<Job> {
        let mut jobs = self.jobs.lock().expect("job lock");
        let job = jobs.get_mut(id)?;
        f(job);
        // a failed write leaves the in-memory state authoritative
        let _ = self.store.save_job(job);
        Some(job.clone())
    }

    fn execute(&self, job: &Job) -> causalis::Result<Value> {
        let p = &job.params;
        let field = |name: &str| p.get(name).cloned().unwrap_or(Value::Null);
        let data = |name: &str| -> causalis::Result<Arc<TabularDataset>> {
            let id = p.get(name).and_then(Value::as_str).unwrap_or_default();
            self.store
                .dataset(id)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset `{id}`")))
        };
        match job.kind {
            JobKind::Discover => {
                let req: DiscoverRequest = serde_json::from_value(p.clone())?;
                ops::discover(
                    &*data("dataset_id")?,
                    &req.algorithm,
                    &req.params,
                    &req.prior_knowledge.unwrap_or_default(),
                    &self.pool,
                )
            }
            JobKind::Rca => {
                let req: RcaRequest = serde_json::from_value(p.clone())?;
                let mode: RcaMode = req.mode.parse()?;
                ops::run_rca(&*data("dataset_id")?, mode, &req.context_var, &req.params, &self.pool)
            }
            JobKind::Benchmark => {
                let config: BenchmarkConfig = serde_json::from_value(field("config"))?;
                ops::benchmark(&config, &self.pool)
            }
            JobKind::Infer => {
                let req: InferBody = serde_json::from_value(p.clone())?;
                ops::infer(&*data("dataset_id")?, &req.request, &self.pool)
            }
        }
    }
}

async fn run_job(state: Arc<AppState>, id: String) {
    let mut claimed = false;
    let Some(job) = state.update(&id, |j| {
        if j.status == JobStatus::Queued {
            j.status = JobStatus::Running;
            j.started = Some(now());
            claimed = true;
        }
    }) else {
        return;
    };
    if !claimed {
        return;
    }
    let worker = state.clone();
    let outcome = tokio::task::spawn_blocking(move || worker.execute(&job)).await;
    state.update(&id, |j| {
        j.finished = Some(now());
        match outcome {
            Ok(Ok(mut result)) => {
                j.wall_time = result.as_object_mut().and_then(|m| m.remove("wall_time")).and_then(|v| v.as_f64());
                j.result = Some(result);
                j.status = JobStatus::Done;
            }
            Ok(Err(e)) => {
                j.error = Some(error_body(&e));
                j.status = JobStatus::Failed;
            }
            Err(panic) => {
                j.error = Some(json!({ "error": format!("internal error: {panic}") }));
                j.status = JobStatus::Failed;
            }
        }
    });
}

/// Builds the state, restores persisted jobs and starts the job runners.
/// Must be called inside a Tokio runtime.
pub fn start(config: &ServiceConfig) -> std::io::Result<Arc<AppState>> {
    let store = Store::open(&config.store_dir)?;
    let (tx, rx) = mpsc::unbounded_channel::<String>();
    let mut jobs = BTreeMap::new();
    let mut requeue = Vec::new();
    for mut job in store.load_jobs()? {
        match job.status {
            JobStatus::Queued => requeue.push(job.id.clone()),
            JobStatus::Running => {
                job.status = JobStatus::Failed;
                job.finished = Some(now());
                job.error = Some(json!({ "error": "interrupted by a service restart" }));
                store.save_job(&job)?;
            }
            JobStatus::Done | JobStatus::Failed => {}
        }
        jobs.insert(job.id.clone(), job);
    }
    let state = Arc::new(AppState {
        store,
        jobs: Mutex::new(jobs),
        queue: tx,
        pool: ops::shared_pool(config.workers),
        counter: AtomicU64::new(0),
    });
    for id in requeue {
        let _ = state.queue.send(id);
    }
    let rx = Arc::new(tokio::sync::Mutex::new(rx));
    for _ in 0..config.job_slots.max(1) {
        let (state, rx) = (state.clone(), rx.clone());
        tokio::spawn(async move {
            loop {
                let next = rx.lock().await.recv().await;
                match next {
                    Some(id) => run_job(state.clone(), id).await,
                    None => break,
                }
            }
        });
    }
    Ok(state)
}

pub fn router(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/health", get(health))
        .route("/datasets", post(post_dataset))
        .route("/datasets/{id}/summary", get(dataset_summary))
        .route("/discover", post(post_discover))
        .route("/jobs", get(list_jobs))
        .route("/jobs/{id}", get(get_job).delete(delete_job))
        .route("/infer", post(post_infer))
        .route("/rca", post(post_rca))
        .route("/benchmark", post(post_benchmark))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "unknown endpoint") });
    let app = Router::new().nest("/v1", api).with_state(state);
    let app = match static_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => app.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no web client is configured") }),
    };
    app.layer(CorsLayer::permissive())
}

pub async fn serve(config: ServiceConfig, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let state = start(&config)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state, config.static_dir.clone()))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Response {
    ok(json!({ "status": "ok" }))
}

async fn post_dataset(State(state): State<Arc<AppState>>, req: Request) -> ApiResult {
    let is_multipart = req
        .headers()
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("multipart/form-data"));
    let bytes = if is_multipart {
        let mut form = Multipart::from_request(req, &())
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?;
        let field = form
            .next_field()
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "multipart body has no file"))?;
        field
            .bytes()
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
    } else {
        Bytes::from_request(req, &())
            .await
            .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e.to_string()))?
    };
    let (id, data) = state.store.put_dataset(&bytes).map_err(|e| match e {
        Error::Io(io) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, io.to_string()),
        other => ApiError::new(StatusCode::BAD_REQUEST, other.to_string()),
    })?;
    let missing: BTreeMap<&str, usize> = data
        .var_names()
        .iter()
        .map(String::as_str)
        .zip(data.missing_counts())
        .collect();
    Ok(ok(json!({
        "dataset_id": id,
        "var_names": data.var_names(),
        "n_samples": data.n_samples(),
        "missing_counts": missing,
    })))
}

async fn dataset_summary(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let data = state.dataset(&id)?;
    let columns: Vec<Value> = (0..data.n_vars())
        .map(|j| {
            let values: Vec<f64> = data.column(j).iter().copied().filter(|v| !v.is_nan()).collect();
            let n = values.len();
            let mean = if n == 0 { None } else { Some(values.iter().sum::<f64>() / n as f64) };
            let std = mean.map(|m| (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt());
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            json!({
                "name": data.var_names()[j],
                "mean": mean,
                "std": std,
                "missing_pct": 100.0 * (data.n_samples() - n) as f64 / data.n_samples().max(1) as f64,
                "distinct": sorted.len(),
            })
        })
        .collect();
    Ok(ok(json!({ "dataset_id": id, "n_samples": data.n_samples(), "columns": columns })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DiscoverRequest {
    #[allow(dead_code)]
    dataset_id: String,
    algorithm: String,
    #[serde(default)]
    params: DiscoverParams,
    #[serde(default)]
    prior_knowledge: Option<PriorKnowledge>,
}

async fn post_discover(State(state): State<Arc<AppState>>, Body(raw): Body<Value>) -> ApiResult {
    let req: DiscoverRequest = serde_json::from_value(raw.clone())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    let data = state.dataset(&req.dataset_id)?;
    req.params.check(&req.algorithm)?;
    if let Some(pk) = &req.prior_knowledge {
        ops::check_prior(pk)?;
        let unknown = ops::unknown_prior_variables(pk, data.var_names());
        if !unknown.is_empty() {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                format!("prior knowledge names unknown variables: {}", unknown.into_iter().collect::<Vec<_>>().join(", ")),
            ));
        }
    }
    let id = state.submit(JobKind::Discover, raw)?;
    Ok(ok(json!({ "job_id": id })))
}

async fn list_jobs(State(state): State<Arc<AppState>>) -> Response {
    let jobs: Vec<Value> = state
        .jobs
        .lock()
        .expect("job lock")
        .values()
        .map(|j| json!({ "id": j.id, "kind": j.kind, "status": j.status, "created": j.created }))
        .collect();
    ok(json!({ "jobs": jobs }))
}

async fn get_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let job = state.jobs.lock().expect("job lock").get(&id).cloned();
    let job = job.ok_or_else(|| ApiError::not_found("job", &id))?;
    Ok(ok(serde_json::to_value(job).expect("job serializes")))
}

/// Removes a queued or finished job; a running job cannot be cancelled.
async fn delete_job(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult {
    let mut jobs = state.jobs.lock().expect("job lock");
    let job = jobs.get(&id).ok_or_else(|| ApiError::not_found("job", &id))?;
    if job.status == JobStatus::Running {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("job `{id}` is already running")));
    }
    state
        .store
        .delete_job(&id)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    jobs.remove(&id);
    Ok(ok(json!({ "deleted": id })))
}

#[derive(Debug, Deserialize)]
struct InferBody {
    #[allow(dead_code)]
    dataset_id: String,
    #[serde(flatten)]
    request: InferRequest,
}

/// Linear models are answered inline; nonlinear ones become a job.
async fn post_infer(State(state): State<Arc<AppState>>, Body(raw): Body<Value>) -> ApiResult {
    let body: InferBody = serde_json::from_value(raw.clone())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    let data = state.dataset(&body.dataset_id)?;
    let nonlinear = [body.request.prediction_model, body.request.condition_prediction_model]
        .contains(&causalis::inference::PredictionModel::Nonlinear);
    if nonlinear {
        let id = state.submit(JobKind::Infer, raw)?;
        return Ok(ok(json!({ "job_id": id })));
    }
    let pool = state.pool.clone();
    let result = tokio::task::spawn_blocking(move || ops::infer(&data, &body.request, &pool))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(ok(result))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RcaRequest {
    #[allow(dead_code)]
    dataset_id: String,
    mode: String,
    context_var: String,
    #[serde(default)]
    params: RcaParams,
}

async fn post_rca(State(state): State<Arc<AppState>>, Body(raw): Body<Value>) -> ApiResult {
    let req: RcaRequest = serde_json::from_value(raw.clone())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    let data = state.dataset(&req.dataset_id)?;
    req.mode.parse::<RcaMode>()?;
    data.index_of(&req.context_var)?;
    ops::check_prior(&req.params.prior_knowledge)?;
    let id = state.submit(JobKind::Rca, raw)?;
    Ok(ok(json!({ "job_id": id })))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchmarkRequest {
    config: BenchmarkConfig,
}

async fn post_benchmark(State(state): State<Arc<AppState>>, Body(raw): Body<Value>) -> ApiResult {
    let req: BenchmarkRequest = serde_json::from_value(raw.clone())
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))?;
    req.config.validate()?;
    let id = state.submit(JobKind::Benchmark, raw)?;
    Ok(ok(json!({ "job_id": id })))
}
