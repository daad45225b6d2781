//! HTTP facade over the channel simulator.
//!
//! | route                | body              | reply                               |
//! |----------------------|-------------------|-------------------------------------|
//! | `GET /recommend`     | `?env=&wall=&freq=` | example scenario                  |
//! | `POST /validate`     | scenario          | violation list                      |
//! | `POST /simulate`     | [`api::SimRequest`] | rate reports, echoed config       |
//! | `POST /heatmap`      | [`api::HeatmapRequest`] | `202` with a job id           |
//! | `GET /heatmap/{id}`  |                   | progress or the finished grid       |
//!
//! The heatmap job table is the only shared state. Finished jobs are dropped
//! once older than the configured TTL.

pub mod api;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use risim_core::channel::ChannelConfig;
use risim_core::geometry::{recommend_positions, validate_scenario, Scenario, Violation};
use risim_core::metrics::{
    dbm_to_watts, dbw_to_watts, effective_gains, linear_to_db, rate_heatmap_with_progress, report_from_gains, Heatmap,
    RxGrid,
};
use serde::de::DeserializeOwned;
use uuid::Uuid;

use api::*;

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_realizations: u64,
    /// Largest number of points along either grid axis.
    pub max_grid_side: usize,
    pub max_histogram_bins: usize,
    pub job_ttl: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_realizations: 10_000,
            max_grid_side: 64,
            max_histogram_bins: 1000,
            job_ttl: Duration::from_secs(600),
        }
    }
}

#[derive(Debug)]
struct Job {
    config: HeatmapRequest,
    done: usize,
    total: usize,
    finished: Option<Instant>,
    outcome: Option<Result<Heatmap, ErrorBody>>,
}

type Jobs = Arc<Mutex<HashMap<Uuid, Job>>>;

#[derive(Clone, Default)]
pub struct AppState {
    limits: Limits,
    jobs: Jobs,
}

impl AppState {
    pub fn new(limits: Limits) -> Self {
        Self {
            limits,
            jobs: Jobs::default(),
        }
    }

    fn prune(&self) {
        let ttl = self.limits.job_ttl;
        self.jobs
            .lock()
            .unwrap()
            .retain(|_, j| j.finished.is_none_or(|t| t.elapsed() <= ttl));
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/recommend", get(recommend))
        .route("/validate", post(validate))
        .route("/simulate", post(simulate))
        .route("/heatmap", post(create_heatmap))
        .route("/heatmap/{id}", get(heatmap_status))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route") })
        .with_state(state)
}

/// Structured error reply.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.into(),
                message: message.into(),
                violations: Vec::new(),
            },
        }
    }

    fn violations(v: Vec<Violation>) -> Self {
        let mut e = Self::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "INVALID_SCENARIO",
            format!("scenario has {} violation(s)", v.len()),
        );
        e.body.violations = v;
        e
    }

    fn limit(message: String) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "LIMIT_EXCEEDED", message)
    }
}

impl From<risim_core::Error> for ApiError {
    fn from(e: risim_core::Error) -> Self {
        match e {
            risim_core::Error::InvalidScenario(v) => ApiError::violations(v),
            other => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "INVALID_PARAMETER", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorResponse {
            schema_version: SCHEMA_VERSION,
            error: self.body,
        };
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", e.to_string()))
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
}

async fn recommend(query: Result<Query<RecommendQuery>, QueryRejection>) -> ApiResult<Json<RecommendResponse>> {
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "BAD_REQUEST", e.body_text()))?;
    let mut scenario = recommend_positions(q.env, q.wall);
    if let Some(band) = q.freq {
        scenario.band = band;
    }
    Ok(Json(RecommendResponse {
        schema_version: SCHEMA_VERSION,
        scenario,
    }))
}

async fn validate(body: Bytes) -> ApiResult<Json<ValidateResponse>> {
    let scenario: Scenario = parse_body(&body)?;
    let violations = validate_scenario(&scenario);
    Ok(Json(ValidateResponse {
        schema_version: SCHEMA_VERSION,
        valid: violations.is_empty(),
        violations,
    }))
}

fn channel_config(
    limits: &Limits,
    scenario: &Scenario,
    realizations: u64,
    seed: u64,
    options: risim_core::channel::ChannelOptions,
) -> ApiResult<ChannelConfig> {
    if realizations > limits.max_realizations {
        return Err(ApiError::limit(format!(
            "{realizations} realizations requested, at most {} allowed",
            limits.max_realizations
        )));
    }
    let cfg = ChannelConfig::new(scenario.clone(), realizations, seed).with_options(options);
    cfg.validate()?;
    Ok(cfg)
}

fn histogram(gains: &[f64], spec: HistogramSpec, n0_w: f64, rule: risim_core::metrics::ProfileRule) -> SnrHistogram {
    let pt = dbw_to_watts(spec.pt_dbw);
    let db: Vec<f64> = gains
        .iter()
        .filter(|&&g| g > 0.0)
        .map(|&g| linear_to_db(pt * g / n0_w))
        .collect();
    let (min_db, max_db) = if db.is_empty() {
        (0.0, 0.0)
    } else {
        db.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    };
    let mut counts = vec![0u64; spec.bins];
    if !db.is_empty() {
        let width = (max_db - min_db) / spec.bins as f64;
        for v in &db {
            let i = if width > 0.0 {
                ((v - min_db) / width) as usize
            } else {
                0
            };
            counts[i.min(spec.bins - 1)] += 1;
        }
    }
    SnrHistogram {
        rule,
        pt_dbw: spec.pt_dbw,
        min_db,
        max_db,
        counts,
        zero_gain: (gains.len() - db.len()) as u64,
    }
}

fn run_simulation(limits: Limits, req: SimRequest) -> ApiResult<SimResponse> {
    let cfg = channel_config(&limits, &req.scenario, req.realizations, req.seed, req.options)?;
    if req.rules.is_empty() || req.pt_dbw.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "INVALID_PARAMETER",
            "rules and pt_dbw must be non-empty",
        ));
    }
    if let Some(h) = req.histogram {
        if h.bins == 0 || h.bins > limits.max_histogram_bins {
            return Err(ApiError::limit(format!(
                "histogram bins must be in 1..={}",
                limits.max_histogram_bins
            )));
        }
    }
    let n0 = dbm_to_watts(req.noise_dbm);
    let mut reports = Vec::new();
    let mut histograms = Vec::new();
    for &rule in &req.rules {
        let gains = effective_gains(&cfg, rule)?;
        for &pt in &req.pt_dbw {
            reports.push(report_from_gains(&gains, rule, dbw_to_watts(pt), n0)?);
        }
        if let Some(spec) = req.histogram {
            histograms.push(histogram(&gains, spec, n0, rule));
        }
    }
    Ok(SimResponse {
        schema_version: SCHEMA_VERSION,
        config: req,
        reports,
        violations: Vec::new(),
        histograms,
    })
}

async fn simulate(State(state): State<AppState>, body: Bytes) -> ApiResult<Json<SimResponse>> {
    let req: SimRequest = parse_body(&body)?;
    let limits = state.limits;
    blocking(move || run_simulation(limits, req)).await.map(Json)
}

async fn create_heatmap(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<JobCreated>)> {
    let req: HeatmapRequest = parse_body(&body)?;
    let limits = state.limits;
    let cfg = channel_config(&limits, &req.scenario, req.realizations, req.seed, req.options)?;
    let (nx, ny) = (req.grid.xs.len(), req.grid.ys.len());
    if nx == 0 || ny == 0 || nx > limits.max_grid_side || ny > limits.max_grid_side {
        return Err(ApiError::limit(format!(
            "grid is {nx}×{ny}, each side must be in 1..={}",
            limits.max_grid_side
        )));
    }
    let cell_violations: Vec<Violation> = req
        .points()
        .flat_map(|rx| {
            validate_scenario(&Scenario {
                rx,
                ..req.scenario.clone()
            })
        })
        .collect();
    if !cell_violations.is_empty() {
        return Err(ApiError::violations(cell_violations));
    }

    state.prune();
    let id = Uuid::new_v4();
    let total = nx * ny;
    let grid = RxGrid {
        xs: req.grid.xs.clone(),
        ys: req.grid.ys.clone(),
        z: req.grid.z.unwrap_or(req.scenario.rx.z),
    };
    let (rule, pt, n0) = (req.rule, dbw_to_watts(req.pt_dbw), dbm_to_watts(req.noise_dbm));
    state.jobs.lock().unwrap().insert(
        id,
        Job {
            config: req,
            done: 0,
            total,
            finished: None,
            outcome: None,
        },
    );

    let jobs = state.jobs.clone();
    tokio::task::spawn_blocking(move || {
        let progress = |done, _| {
            if let Some(j) = jobs.lock().unwrap().get_mut(&id) {
                j.done = done;
            }
        };
        let outcome =
            rate_heatmap_with_progress(&cfg, &grid, rule, pt, n0, progress).map_err(|e| ApiError::from(e).body);
        if let Some(j) = jobs.lock().unwrap().get_mut(&id) {
            j.finished = Some(Instant::now());
            j.outcome = Some(outcome);
        }
    });

    Ok((
        StatusCode::ACCEPTED,
        Json(JobCreated {
            schema_version: SCHEMA_VERSION,
            job_id: id,
            total,
        }),
    ))
}

async fn heatmap_status(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<JobReport>> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "JOB_NOT_FOUND", format!("no heatmap job `{id}`"));
    let id = Uuid::parse_str(&id).map_err(|_| not_found())?;
    state.prune();
    let jobs = state.jobs.lock().unwrap();
    let job = jobs.get(&id).ok_or_else(not_found)?;
    let (status, result, error) = match &job.outcome {
        None => (JobStatus::Running, None, None),
        Some(Ok(map)) => (JobStatus::Done, Some(map.clone()), None),
        Some(Err(e)) => (JobStatus::Failed, None, Some(e.clone())),
    };
    Ok(Json(JobReport {
        schema_version: SCHEMA_VERSION,
        job_id: id,
        status,
        done: job.done,
        total: job.total,
        config: job.config.clone(),
        result,
        error,
    }))
}
