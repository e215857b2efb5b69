//! `/v1` routes and their JSON wire types.

use std::time::Duration;

use axum::extract::rejection::{JsonRejection, PathRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use epistemic_core::safety::{AuditRecord, PendingEntry, Verdict};
use epistemic_core::{
    canonical_hash, Assertion, BeliefFragment, Coord, Error, FragmentBlueprint, FragmentId, FragmentKind,
    InjectionRequest, MetaReport, Metrics, ReasonCode, SectorId, Status, Strategy, TickReport,
};
use serde::{Deserialize, Serialize};

use crate::Service;

/// Longest a `GET /v1/audit` long-poll may wait.
const MAX_WAIT_MS: u64 = 30_000;
const MAX_TICKS: u32 = 10_000;

#[derive(FromRequest)]
#[from_request(via(axum::Json), rejection(ApiError))]
struct Json<T>(T);

impl<T: Serialize> IntoResponse for Json<T> {
    fn into_response(self) -> Response {
        axum::Json(self.0).into_response()
    }
}

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Query), rejection(ApiError))]
struct Query<T>(T);

#[derive(FromRequestParts)]
#[from_request(via(axum::extract::Path), rejection(ApiError))]
struct Path<T>(T);

/// Error response: `{"error": <code>, "message": <text>}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    message: &'a str,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    pub(crate) fn queue_full() -> Self {
        Self::new(StatusCode::TOO_MANY_REQUESTS, "queue_full", "the command queue is full")
    }

    pub(crate) fn unavailable() -> Self {
        Self::new(
            StatusCode::SERVICE_UNAVAILABLE,
            "unavailable",
            "the engine writer has stopped",
        )
    }

    fn malformed(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "malformed_request", message)
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }

    pub fn code(&self) -> &'static str {
        self.code
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Unauthorized(_) => StatusCode::UNAUTHORIZED,
            Error::UnknownFragment(_)
            | Error::NotActive(_)
            | Error::UnknownPending(_)
            | Error::AlreadyResolved(_)
            | Error::UnknownSector(_)
            | Error::BuiltinSector(_) => StatusCode::CONFLICT,
            _ => StatusCode::BAD_REQUEST,
        };
        Self::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::malformed(r.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(r: QueryRejection) -> Self {
        Self::malformed(r.body_text())
    }
}

impl From<PathRejection> for ApiError {
    fn from(r: PathRejection) -> Self {
        Self::malformed(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            message: &self.message,
        };
        (self.status, axum::Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub(crate) fn router(service: Service) -> Router {
    Router::new()
        .route("/v1/state", get(state))
        .route("/v1/inject", post(inject))
        .route("/v1/tick", post(tick))
        .route("/v1/metrics", get(metrics))
        .route("/v1/audit", get(audit))
        .route("/v1/pending", get(pending))
        .route("/v1/pending/{id}/approve", post(approve))
        .route("/v1/pending/{id}/reject", post(reject))
        .route("/v1/beliefs/{id}/retire", post(retire))
        .route("/v1/sectors/{name}/annihilate", post(annihilate))
        .route("/v1/reflect", post(reflect))
        .with_state(service)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateQuery {
    sector: Option<String>,
    k: Option<u8>,
    status: Option<Status>,
}

#[derive(Serialize, Deserialize)]
pub struct StateView {
    pub tick: u64,
    pub hash: String,
    pub fragments: Vec<BeliefFragment>,
}

async fn state(State(svc): State<Service>, Query(q): Query<StateQuery>) -> ApiResult<StateView> {
    let engine = svc.snapshot();
    let sector = q.sector.as_deref().map(SectorId::new).transpose()?;
    let fragments = engine
        .manifold()
        .query(engine.state(), sector.as_ref(), q.k, q.status)?
        .into_iter()
        .cloned()
        .collect();
    Ok(Json(StateView {
        tick: engine.state().tick(),
        hash: canonical_hash(engine.state()),
        fragments,
    }))
}

async fn metrics(State(svc): State<Service>) -> ApiResult<Metrics> {
    Ok(Json(svc.snapshot().metrics()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FragmentBody {
    text: String,
    kind: FragmentKind,
    sector: SectorId,
    k: u8,
    assertion: Option<Assertion>,
    ttl: Option<u32>,
    #[serde(default)]
    pinned: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetBody {
    sector: SectorId,
    k: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InjectBody {
    strategy: Strategy,
    source: String,
    token: String,
    priority: f64,
    fragment: FragmentBody,
    target: Option<TargetBody>,
}

#[derive(Serialize, Deserialize)]
pub struct InjectResponse {
    pub record: AuditRecord,
    pub pending_id: Option<u64>,
    pub metrics: Metrics,
}

/// Status for an audited submission: auth failures are 401 and requests the
/// engine refused as malformed are 400; pipeline outcomes are 200.
fn submission_status(record: &AuditRecord) -> StatusCode {
    match record.reason_codes.first() {
        Some(ReasonCode::Auth(_)) => StatusCode::UNAUTHORIZED,
        Some(
            ReasonCode::MissingTtl
            | ReasonCode::MissingTarget
            | ReasonCode::WrongKind
            | ReasonCode::InvalidRequest
            | ReasonCode::UnknownSector
            | ReasonCode::LayerOutOfRange,
        ) => StatusCode::BAD_REQUEST,
        _ => StatusCode::OK,
    }
}

async fn inject(State(svc): State<Service>, Json(body): Json<InjectBody>) -> Result<Response, ApiError> {
    if body.strategy == Strategy::Naive {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "naive_not_exposed",
            "the naive strategy is not available over the service",
        ));
    }
    let f = body.fragment;
    // The wire fragment has no anchor; it is admitted at its priority.
    let mut bp = FragmentBlueprint::new(f.text, f.kind, Coord::new(f.sector, f.k)).with_anchor(body.priority);
    bp.assertion = f.assertion;
    bp.pinned = f.pinned;
    let mut request = InjectionRequest::new(bp, body.strategy, &body.source, body.priority);
    request.ttl = f.ttl;
    request.target = body.target.map(|t| Coord::new(t.sector, t.k));
    let token = body.token;

    let response = svc
        .exec(move |engine| {
            let submission = engine.submit(&request, &token);
            InjectResponse {
                record: submission.record,
                pending_id: submission.pending_id,
                metrics: engine.metrics(),
            }
        })
        .await?;
    Ok((submission_status(&response.record), axum::Json(response)).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TickBody {
    #[serde(default = "one")]
    count: u32,
}

fn one() -> u32 {
    1
}

#[derive(Serialize, Deserialize)]
pub struct TickResponse {
    pub reports: Vec<TickReport>,
    pub metrics: Metrics,
}

async fn tick(State(svc): State<Service>, Json(body): Json<TickBody>) -> ApiResult<TickResponse> {
    if body.count == 0 || body.count > MAX_TICKS {
        return Err(ApiError::malformed(format!("count must be in 1..={MAX_TICKS}")));
    }
    let response = svc
        .exec(move |engine| {
            let reports = (0..body.count).map(|_| engine.tick()).collect();
            TickResponse {
                reports,
                metrics: engine.metrics(),
            }
        })
        .await?;
    Ok(Json(response))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditQuery {
    #[serde(default)]
    since: u64,
    #[serde(default)]
    wait: u64,
}

#[derive(Serialize, Deserialize)]
pub struct AuditPage {
    /// Records with `seq > since`.
    pub records: Vec<AuditRecord>,
    pub last_seq: u64,
}

/// Returns records after `since`. With `wait` (ms) and nothing new, holds
/// the request until a record arrives or the wait elapses.
async fn audit(State(svc): State<Service>, Query(q): Query<AuditQuery>) -> ApiResult<AuditPage> {
    let mut rx = svc.subscribe();
    let deadline = tokio::time::Instant::now() + Duration::from_millis(q.wait.min(MAX_WAIT_MS));
    loop {
        let engine = rx.borrow_and_update().clone();
        let records = engine.audit().since(q.since);
        if !records.is_empty() || tokio::time::Instant::now() >= deadline {
            return Ok(Json(AuditPage {
                records: records.to_vec(),
                last_seq: engine.audit().last_seq(),
            }));
        }
        match tokio::time::timeout_at(deadline, rx.changed()).await {
            Ok(Ok(())) => continue,
            Ok(Err(_)) => return Err(ApiError::unavailable()),
            Err(_) => {}
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct PendingList {
    pub pending: Vec<PendingEntry>,
}

async fn pending(State(svc): State<Service>) -> ApiResult<PendingList> {
    let engine = svc.snapshot();
    Ok(Json(PendingList {
        pending: engine.pending().list_open().cloned().collect(),
    }))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActorBody {
    actor: String,
    token: String,
}

#[derive(Serialize, Deserialize)]
pub struct RecordResponse {
    pub record: AuditRecord,
    pub metrics: Metrics,
}

async fn review(svc: Service, id: u64, verdict: Verdict, body: ActorBody) -> ApiResult<RecordResponse> {
    let response = svc
        .exec(move |engine| {
            engine
                .resolve_pending(id, verdict, &body.actor, &body.token)
                .map(|record| RecordResponse {
                    record,
                    metrics: engine.metrics(),
                })
        })
        .await??;
    Ok(Json(response))
}

async fn approve(
    State(svc): State<Service>,
    Path(id): Path<u64>,
    Json(body): Json<ActorBody>,
) -> ApiResult<RecordResponse> {
    review(svc, id, Verdict::Approve, body).await
}

async fn reject(
    State(svc): State<Service>,
    Path(id): Path<u64>,
    Json(body): Json<ActorBody>,
) -> ApiResult<RecordResponse> {
    review(svc, id, Verdict::Reject, body).await
}

async fn retire(
    State(svc): State<Service>,
    Path(id): Path<u64>,
    Json(body): Json<ActorBody>,
) -> ApiResult<RecordResponse> {
    let response = svc
        .exec(move |engine| {
            engine
                .retire(FragmentId(id), &body.actor, &body.token)
                .map(|record| RecordResponse {
                    record,
                    metrics: engine.metrics(),
                })
        })
        .await??;
    Ok(Json(response))
}

async fn annihilate(
    State(svc): State<Service>,
    Path(name): Path<String>,
    Json(body): Json<ActorBody>,
) -> ApiResult<RecordResponse> {
    let sector = SectorId::new(&name)?;
    let response = svc
        .exec(move |engine| {
            engine
                .annihilate_sector(&sector, &body.actor, &body.token)
                .map(|record| RecordResponse {
                    record,
                    metrics: engine.metrics(),
                })
        })
        .await??;
    Ok(Json(response))
}

#[derive(Serialize, Deserialize)]
pub struct ReflectResponse {
    pub meta_report_id: Option<FragmentId>,
    pub report: MetaReport,
    pub reason_codes: Vec<ReasonCode>,
    pub metrics: Metrics,
}

async fn reflect(State(svc): State<Service>) -> ApiResult<ReflectResponse> {
    let response = svc
        .exec(|engine| {
            let outcome = engine.reflect();
            ReflectResponse {
                meta_report_id: outcome.meta_report_id,
                report: outcome.report,
                reason_codes: outcome.reason_codes,
                metrics: engine.metrics(),
            }
        })
        .await?;
    Ok(Json(response))
}
