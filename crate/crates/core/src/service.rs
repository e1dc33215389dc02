//! HTTP interface to a running session: preference queries against an
//! immutable model snapshot, true evaluations and optimization steps.
//!
//! Reads clone an `Arc` to the current snapshot and never wait on a step.
//! Writes (evaluate, step) are serialized by a single session lock; a
//! write that finds the lock held is answered with 409.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::error::Error;
use crate::gp::SurrogateSet;
use crate::metrics::preference_grid;
use crate::problems::ProblemSpec;
use crate::psm::PsmParams;
use crate::runner::Runner;
use crate::scalarization::normalize_preference;

pub const MAX_FRONT_COUNT: usize = 10_000;
#[derive(Debug)]
pub struct Snapshot {
    pub problem: ProblemSpec,
    pub psm: PsmParams,
    pub surrogates: SurrogateSet,
    pub iteration: usize,
    pub hv: f64,
}

impl Snapshot {
    fn from_runner(runner: &Runner) -> Option<Self> {
        Some(Self {
            problem: runner.problem().clone(),
            psm: runner.psm()?.clone(),
            surrogates: runner.surrogates()?.clone(),
            iteration: runner.records().last().map_or(0, |r| r.iteration),
            hv: runner.records().last().map_or(0.0, |r| r.hv),
        })
    }
}

#[derive(Clone)]
pub struct AppState {
    snapshot: Arc<RwLock<Option<Arc<Snapshot>>>>,
    runner: Arc<Mutex<Runner>>,
    session_id: Arc<str>,
}

impl AppState {
    pub fn new(runner: Runner) -> Self {
        let snapshot = Snapshot::from_runner(&runner).map(Arc::new);
        let session_id = format!("{}-{}", runner.config().run_name(), runner.evaluations());
        Self {
            snapshot: Arc::new(RwLock::new(snapshot)),
            runner: Arc::new(Mutex::new(runner)),
            session_id: session_id.into(),
        }
    }

    pub fn snapshot(&self) -> Option<Arc<Snapshot>> {
        self.snapshot.read().expect("snapshot lock").clone()
    }

    /// The session lock; holding it makes writes answer 409.
    pub fn runner(&self) -> Arc<Mutex<Runner>> {
        self.runner.clone()
    }

    fn publish(&self, runner: &Runner) {
        let next = Snapshot::from_runner(runner).map(Arc::new);
        *self.snapshot.write().expect("snapshot lock") = next;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub remaining: Option<usize>,
}

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
                remaining: None,
            },
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    fn no_session() -> Self {
        Self::new(StatusCode::NOT_FOUND, "no_session", "no trained model is loaded")
    }

    fn busy() -> Self {
        Self::new(StatusCode::CONFLICT, "step_in_flight", "an optimization step is running")
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExhausted { .. } => {
                let mut err = Self::new(StatusCode::FORBIDDEN, "budget_exhausted", e.to_string());
                err.body.remaining = Some(0);
                err
            }
            Error::Bounds { .. } | Error::Dimension { .. } | Error::InvalidArgument(_) => {
                Self::bad_request(e.to_string())
            }
            other => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

fn preference(pref: &[f64], m: usize) -> std::result::Result<Vec<f64>, ApiError> {
    normalize_preference(pref, m).map_err(|e| ApiError::bad_request(e.to_string()))
}

fn parse_list(text: &str) -> std::result::Result<Vec<f64>, ApiError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| ApiError::bad_request(format!("'{v}' is not a number"))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionResponse {
    pub r: Vec<f64>,
    pub x: Vec<f64>,
    pub predicted_mean: Vec<f64>,
    pub predicted_std: Vec<f64>,
}

async fn solution(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult<SolutionResponse> {
    let snap = app.snapshot().ok_or_else(ApiError::no_session)?;
    let raw = q.get("pref").ok_or_else(|| ApiError::bad_request("missing 'pref' parameter"))?;
    let r = preference(&parse_list(raw)?, snap.problem.m)?;
    let (lo, hi) = snap.problem.bounds();
    let x = snap.problem.snap(&snap.psm.forward(&r, lo, hi)?.x);
    let (predicted_mean, predicted_std) = snap.surrogates.predict(&x)?;
    Ok(Json(SolutionResponse {
        r,
        x,
        predicted_mean,
        predicted_std,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub r: Vec<f64>,
    pub predicted_mean: Vec<f64>,
}

async fn front(State(app): State<AppState>, Query(q): Query<HashMap<String, String>>) -> ApiResult<Vec<FrontPoint>> {
    let snap = app.snapshot().ok_or_else(ApiError::no_session)?;
    let count: usize = q
        .get("count")
        .ok_or_else(|| ApiError::bad_request("missing 'count' parameter"))?
        .parse()
        .map_err(|_| ApiError::bad_request("count must be a positive integer"))?;
    if count == 0 || count > MAX_FRONT_COUNT {
        return Err(ApiError::bad_request(format!("count must be in 1..={MAX_FRONT_COUNT}")));
    }
    let (lo, hi) = snap.problem.bounds();
    let points = preference_grid(count, snap.problem.m)?
        .into_iter()
        .map(|r| {
            let x = snap.problem.snap(&snap.psm.forward(&r, lo, hi)?.x);
            Ok(FrontPoint {
                predicted_mean: snap.surrogates.means(&x)?,
                r,
            })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    Ok(Json(points))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    pub y: Vec<f64>,
    pub archive_size: usize,
    pub remaining: usize,
}

async fn evaluate(
    State(app): State<AppState>,
    body: std::result::Result<Json<EvaluateRequest>, JsonRejection>,
) -> ApiResult<EvaluateResponse> {
    let Json(req) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let mut runner = app.runner.try_lock().map_err(|_| ApiError::busy())?;
    let y = runner.evaluate_manual(&req.x)?;
    Ok(Json(EvaluateResponse {
        y,
        archive_size: runner.archive().len(),
        remaining: runner.remaining_budget(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub iteration: usize,
    pub hv: f64,
    pub lhd: f64,
    pub med: Option<f64>,
    pub evaluations: usize,
}

async fn step(State(app): State<AppState>) -> ApiResult<StepResponse> {
    let guard = app.runner.clone().try_lock_owned().map_err(|_| ApiError::busy())?;
    let app2 = app.clone();
    let outcome = tokio::task::spawn_blocking(move || {
        let mut runner = guard;
        let record = runner.step_psl();
        if record.is_ok() {
            app2.publish(&runner);
        }
        record
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    let record = outcome?;
    Ok(Json(StepResponse {
        iteration: record.iteration,
        hv: record.hv,
        lhd: record.lhd,
        med: record.med,
        evaluations: record.evaluations,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub session_id: String,
    pub problem: String,
    pub m: usize,
    pub n: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub reference_point: Vec<f64>,
    pub budget: usize,
    pub remaining: usize,
    pub archive_size: usize,
    pub iteration: usize,
    pub hv: f64,
    pub stepping: bool,
    pub has_model: bool,
}

async fn session(State(app): State<AppState>) -> ApiResult<SessionInfo> {
    let snap = app.snapshot();
    let Ok(runner) = app.runner.try_lock() else {
        // mid-step: answer from the snapshot only
        let snap = snap.ok_or_else(ApiError::busy)?;
        return Ok(Json(SessionInfo {
            session_id: app.session_id.to_string(),
            problem: snap.problem.id.to_string(),
            m: snap.problem.m,
            n: snap.problem.n,
            lower: snap.problem.lower.clone(),
            upper: snap.problem.upper.clone(),
            reference_point: snap.problem.reference_point.clone(),
            budget: 0,
            remaining: 0,
            archive_size: 0,
            iteration: snap.iteration,
            hv: snap.hv,
            stepping: true,
            has_model: true,
        }));
    };
    let p = runner.problem();
    Ok(Json(SessionInfo {
        session_id: app.session_id.to_string(),
        problem: p.id.to_string(),
        m: p.m,
        n: p.n,
        lower: p.lower.clone(),
        upper: p.upper.clone(),
        reference_point: p.reference_point.clone(),
        budget: runner.budget(),
        remaining: runner.remaining_budget(),
        archive_size: runner.archive().len(),
        iteration: runner.records().last().map_or(0, |r| r.iteration),
        hv: runner.records().last().map_or(0.0, |r| r.hv),
        stepping: false,
        has_model: snap.is_some(),
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchivePoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub stage: String,
}

async fn archive(State(app): State<AppState>) -> ApiResult<Vec<ArchivePoint>> {
    let runner = app.runner.try_lock().map_err(|_| ApiError::busy())?;
    Ok(Json(
        runner
            .archive()
            .rows
            .iter()
            .map(|r| ArchivePoint {
                x: r.x.clone(),
                y: r.y.clone(),
                stage: r.stage.name().into(),
            })
            .collect(),
    ))
}

async fn truth_front(State(app): State<AppState>) -> ApiResult<Vec<Vec<f64>>> {
    let runner = app.runner.try_lock().map_err(|_| ApiError::busy())?;
    if !runner.problem().id.is_synthetic() {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "no_truth", "true front is only served for synthetic problems"));
    }
    Ok(Json(runner.front().to_vec()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/solution", get(solution))
        .route("/front", get(front))
        .route("/evaluate", post(evaluate))
        .route("/step", post(step))
        .route("/session", get(session))
        .route("/archive", get(archive))
        .route("/truth_front", get(truth_front))
        .with_state(state)
}

/// Serves `runner` on `addr` until the process ends.
pub async fn serve(runner: Runner, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(runner))).await
}
