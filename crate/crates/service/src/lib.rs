//! HTTP facade over the yard twin.
//!
//! Mirror endpoints read an immutable `(layout, log)` pair; ingesting a new
//! log swaps the pair atomically. Simulation jobs capture the pair at
//! submission and run on a bounded pool of blocking workers.

mod error;

pub use error::ApiError;

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use tokio::sync::Semaphore;
use yardtwin_core::analytics::{expected_rehandles, expected_rehandles_to_empty};
use yardtwin_core::engine::{self, JobStatus};
use yardtwin_core::kpi::{kpi_report, KpiComparison};
use yardtwin_core::time::{self, Timestamp};
use yardtwin_core::yard::BlockSpec;
use yardtwin_core::{
    BayDims, EventLog, LowestOtherRelocation, Rational, Scalar, SimulationJob, StepKind, StrategySpec, TimeWindow,
    UniformPlacement, YardLayout,
};

const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;

#[derive(Clone)]
struct Mirror {
    layout: Arc<YardLayout>,
    log: Arc<EventLog>,
}

#[derive(Debug, Clone, Serialize)]
struct JobRecord {
    #[serde(flatten)]
    job: SimulationJob,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<KpiComparison>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ApiError>,
}

/// Shared service state; cheap to clone.
#[derive(Clone)]
pub struct AppState {
    mirror: Arc<RwLock<Mirror>>,
    jobs: Arc<Mutex<BTreeMap<String, JobRecord>>>,
    workers: Arc<Semaphore>,
    next_job: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(layout: YardLayout, log: EventLog, workers: usize) -> Self {
        AppState {
            mirror: Arc::new(RwLock::new(Mirror {
                layout: Arc::new(layout),
                log: Arc::new(log),
            })),
            jobs: Arc::default(),
            workers: Arc::new(Semaphore::new(workers.max(1))),
            next_job: Arc::new(AtomicU64::new(1)),
        }
    }

    /// Replaces the mirrored log. Readers holding the old one finish on it.
    pub fn ingest(&self, log: EventLog) {
        self.mirror.write().expect("mirror lock").log = Arc::new(log);
    }

    pub fn event_count(&self) -> usize {
        self.current().log.len()
    }

    fn current(&self) -> Mirror {
        self.mirror.read().expect("mirror lock").clone()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/yard/snapshot", get(snapshot))
        .route("/kpi", get(kpi))
        .route("/simulations", axum::routing::post(submit_job))
        .route("/simulations/{id}", get(job_status))
        .route("/blocks", get(list_blocks))
        .route("/blocks/{id}", get(block_detail))
        .route("/blocks/{id}/bays/{bay}", get(bay_detail))
        .route("/analytics/rehandles", get(rehandles))
        .with_state(state)
}

type Params = Query<HashMap<String, String>>;

fn required<'a>(q: &'a HashMap<String, String>, key: &str) -> Result<&'a str, ApiError> {
    q.get(key)
        .map(String::as_str)
        .ok_or_else(|| ApiError::bad_request("MissingParameter", format!("query parameter {key:?} is required")))
}

fn timestamp(q: &HashMap<String, String>, key: &str) -> Result<Timestamp, ApiError> {
    let raw = required(q, key)?;
    time::parse(raw).map_err(|e| ApiError::bad_request("BadTimestamp", format!("{key}={raw:?}: {e}")))
}

fn number<T: std::str::FromStr>(q: &HashMap<String, String>, key: &str, default: Option<T>) -> Result<T, ApiError> {
    match (q.get(key), default) {
        (Some(raw), _) => raw
            .parse()
            .map_err(|_| ApiError::bad_request("BadParameter", format!("{key}={raw:?} is not a valid number"))),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(ApiError::bad_request("MissingParameter", format!("query parameter {key:?} is required"))),
    }
}

/// Pre-serialized JSON body.
fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(format!("worker failed: {e}")))?
}

async fn snapshot(State(state): State<AppState>, Query(q): Params) -> Result<Response, ApiError> {
    let at = timestamp(&q, "at")?;
    let m = state.current();
    let body = blocking(move || Ok(engine::state_at(&m.log, &m.layout, at)?.snapshot().to_json())).await?;
    Ok(json_body(body))
}

async fn kpi(State(state): State<AppState>, Query(q): Params) -> Result<Response, ApiError> {
    let window = TimeWindow::new(timestamp(&q, "from")?, timestamp(&q, "to")?).map_err(engine::EngineError::from)?;
    let m = state.current();
    let body = blocking(move || Ok(kpi_report(&m.log, &m.layout, &window)?.to_json())).await?;
    Ok(json_body(body))
}

#[derive(Debug, Deserialize)]
struct JobRequest {
    from: String,
    to: String,
    #[serde(default)]
    step: Option<String>,
    strategy: Value,
    #[serde(default)]
    seed: u64,
}

impl JobRequest {
    fn into_job(self, job_id: String) -> Result<SimulationJob, ApiError> {
        let parse = |key: &str, raw: &str| {
            time::parse(raw).map_err(|e| ApiError::bad_request("BadTimestamp", format!("{key}={raw:?}: {e}")))
        };
        let from = parse("from", &self.from)?;
        let to = parse("to", &self.to)?;
        let step = match self.step.as_deref() {
            None => StepKind::Event,
            Some(s) => s.parse().map_err(|e: String| ApiError::bad_request("BadParameter", e))?,
        };
        let strategy = match self.strategy {
            Value::String(s) => StrategySpec::parse(&s),
            other => serde_json::from_value::<StrategySpec>(other)
                .map_err(|e| yardtwin_core::strategy::StrategyError::InvalidStrategy(e.to_string())),
        }
        .map_err(engine::EngineError::InvalidStrategy)?;
        Ok(SimulationJob::new(job_id, from, to, step, strategy, self.seed)?)
    }
}

#[derive(Debug, Serialize)]
struct Accepted {
    job_id: String,
    status: JobStatus,
}

async fn submit_job(State(state): State<AppState>, body: axum::body::Bytes) -> Result<Response, ApiError> {
    let request: JobRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "MalformedRequest", e.to_string()))?;
    let n = state.next_job.fetch_add(1, Ordering::Relaxed);
    let job = request.into_job(format!("job-{n:06}"))?;
    let id = job.job_id.clone();
    state.jobs.lock().expect("job lock").insert(
        id.clone(),
        JobRecord {
            job: job.clone(),
            result: None,
            error: None,
        },
    );

    let mirror = state.current();
    let jobs = state.jobs.clone();
    let workers = state.workers.clone();
    tokio::spawn(async move {
        let Ok(_permit) = workers.acquire_owned().await else { return };
        set_status(&jobs, &job.job_id, JobStatus::Running);
        let run = job.clone();
        let outcome = tokio::task::spawn_blocking(move || engine::run_job(&mirror.log, &mirror.layout, &run)).await;
        let mut jobs = jobs.lock().expect("job lock");
        let Some(rec) = jobs.get_mut(&job.job_id) else { return };
        match outcome {
            Ok(Ok(cmp)) => {
                rec.result = Some(cmp);
                rec.job.status = JobStatus::Done;
            }
            Ok(Err(e)) => {
                rec.error = Some(e.into());
                rec.job.status = JobStatus::Failed;
            }
            Err(e) => {
                rec.error = Some(ApiError::internal(format!("worker failed: {e}")));
                rec.job.status = JobStatus::Failed;
            }
        }
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(Accepted {
            job_id: id,
            status: JobStatus::Pending,
        }),
    )
        .into_response())
}

fn set_status(jobs: &Mutex<BTreeMap<String, JobRecord>>, id: &str, status: JobStatus) {
    if let Some(rec) = jobs.lock().expect("job lock").get_mut(id) {
        rec.job.status = status;
    }
}

async fn job_status(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let jobs = state.jobs.lock().expect("job lock");
    let rec = jobs
        .get(&id)
        .ok_or_else(|| ApiError::not_found("UnknownJob", format!("no simulation job {id:?}")))?;
    Ok(json_body(serde_json::to_string(rec).expect("job serializes")))
}

#[derive(Debug, Serialize)]
struct BlockPage<'a> {
    total: usize,
    offset: usize,
    limit: usize,
    blocks: &'a [BlockSpec],
}

async fn list_blocks(State(state): State<AppState>, Query(q): Params) -> Result<Response, ApiError> {
    let offset: usize = number(&q, "offset", Some(0))?;
    let limit: usize = number(&q, "limit", Some(DEFAULT_PAGE))?;
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request("BadParameter", format!("limit must be between 1 and {MAX_PAGE}")));
    }
    let m = state.current();
    let all = m.layout.blocks();
    let start = offset.min(all.len());
    let end = (start + limit).min(all.len());
    let page = BlockPage {
        total: all.len(),
        offset,
        limit,
        blocks: &all[start..end],
    };
    Ok(json_body(serde_json::to_string(&page).expect("page serializes")))
}

fn known_block(layout: &YardLayout, id: &str) -> Result<(), ApiError> {
    layout
        .block(id)
        .map(|_| ())
        .ok_or_else(|| ApiError::not_found("UnknownBlock", format!("no block {id:?}")))
}

async fn block_detail(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let m = state.current();
    known_block(&m.layout, &id)?;
    let at = timestamp(&q, "at")?;
    let body = blocking(move || {
        let y = engine::state_at(&m.log, &m.layout, at)?;
        let detail = y.block_detail(&id).map_err(|e| ApiError::not_found("UnknownBlock", e.to_string()))?;
        Ok(serde_json::to_string(&detail).expect("detail serializes"))
    })
    .await?;
    Ok(json_body(body))
}

async fn bay_detail(
    State(state): State<AppState>,
    Path((id, bay)): Path<(String, String)>,
    Query(q): Params,
) -> Result<Response, ApiError> {
    let m = state.current();
    known_block(&m.layout, &id)?;
    let unknown_bay = || ApiError::not_found("UnknownBay", format!("block {id:?} has no bay {bay:?}"));
    let n: u32 = bay.parse().map_err(|_| unknown_bay())?;
    if n == 0 || n > m.layout.block(&id).expect("checked").bay_count {
        return Err(unknown_bay());
    }
    let at = timestamp(&q, "at")?;
    let body = blocking(move || {
        let y = engine::state_at(&m.log, &m.layout, at)?;
        let detail = y.bay_detail(&id, n).map_err(|e| ApiError::not_found("UnknownBay", e.to_string()))?;
        Ok(serde_json::to_string(&detail).expect("detail serializes"))
    })
    .await?;
    Ok(json_body(body))
}

#[derive(Debug, Serialize)]
struct RehandleAnswer {
    rows: u32,
    tiers: u32,
    k: u32,
    v_k: f64,
    v_k_exact: String,
    v_to_empty: f64,
    v_to_empty_exact: String,
}

/// Exact expected rehandles under uniform placement and lowest-other relocation.
async fn rehandles(Query(q): Params) -> Result<Response, ApiError> {
    let rows: u32 = number(&q, "rows", None)?;
    let tiers: u32 = number(&q, "tiers", None)?;
    let k: u32 = number(&q, "k", None)?;
    if rows * tiers > 64 {
        return Err(ApiError::bad_request("BadParameter", "bays above 64 slots are not served"));
    }
    let body = blocking(move || {
        let dims = BayDims::new(rows, tiers)?;
        let v = expected_rehandles::<Rational>(k, dims, &UniformPlacement, &LowestOtherRelocation)?;
        let e = expected_rehandles_to_empty::<Rational>(k, dims, &UniformPlacement, &LowestOtherRelocation)?;
        let answer = RehandleAnswer {
            rows,
            tiers,
            k,
            v_k: v.to_f64(),
            v_k_exact: v.to_string(),
            v_to_empty: e.to_f64(),
            v_to_empty_exact: e.to_string(),
        };
        Ok(serde_json::to_string(&answer).expect("answer serializes"))
    })
    .await?;
    Ok(json_body(body))
}
