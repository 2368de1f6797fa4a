use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Path, Query, Request, State};
use axum::middleware::{self, Next};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use fairlens_core::audit::{AuditEvent, AuditReport, ChainVerification, Finding, LedgerEntry, CANONICAL_DISCLAIMER};
use fairlens_core::engine::{Criterion, GroupMetrics, MetricResult, SliceFilter};
use fairlens_core::rng::{SeededRng, RNG_ALGORITHM};
use fairlens_core::{Digest32, Timestamp};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::auth::{require_auditor, require_vendor, resolve, Role};
use crate::badge::{evaluate, BadgeStatus};
use crate::clock::Clock;
use crate::config::RegistryConfig;
use crate::error::RegistryError;
use crate::store::{ServiceRegistration, Store};

const DEFAULT_PAGE: usize = 50;
const MAX_PAGE: usize = 500;
const ATTR_PREFIX: &str = "attr.";

pub(crate) struct AppState {
    pub config: RegistryConfig,
    pub clock: Arc<dyn Clock>,
    pub store: Mutex<Store>,
}

type Shared = Arc<AppState>;
type ApiResult<T> = Result<T, RegistryError>;

impl AppState {
    fn store(&self) -> MutexGuard<'_, Store> {
        // A panic mid-request leaves the store as consistent as the files.
        self.store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }

    fn role(&self, headers: &HeaderMap) -> ApiResult<Role> {
        Ok(resolve(&self.config.tokens, headers)?)
    }

    fn badge(&self, store: &Store, service_id: &str) -> ApiResult<BadgeStatus> {
        evaluate(store, service_id, self.clock.now(), &self.config.issuers)
    }
}

pub(crate) fn router(state: Shared) -> Router {
    Router::new()
        .route("/v1/services", post(register_service))
        .route("/v1/services/{id}", get(get_service))
        .route("/v1/services/{id}/reports", get(list_reports))
        .route("/v1/services/{id}/metrics", get(query_metrics))
        .route("/v1/services/{id}/badge", get(badge))
        .route("/v1/reports", post(submit_report))
        .route("/v1/reports/{digest}", get(get_report))
        .route("/v1/reports/{digest}/audits", post(record_audit_event))
        .route("/v1/ledger", get(list_ledger))
        .route("/v1/ledger/verify", get(verify_ledger))
        .route("/v1/audit-sample", get(audit_sample))
        .layer(middleware::from_fn_with_state(state.clone(), reject_bad_tokens))
        .with_state(state)
}

/// A token that is presented must be valid, even on public endpoints.
async fn reject_bad_tokens(State(state): State<Shared>, request: Request, next: Next) -> Response {
    match state.role(request.headers()) {
        Ok(_) => next.run(request).await,
        Err(e) => e.into_response(),
    }
}

fn params(query: Result<Query<Vec<(String, String)>>, QueryRejection>) -> ApiResult<Vec<(String, String)>> {
    query
        .map(|Query(pairs)| pairs)
        .map_err(|e| RegistryError::Unprocessable(format!("query string: {e}")))
}

fn parse_digest(raw: &str) -> ApiResult<Digest32> {
    Digest32::from_hex(raw).map_err(|_| RegistryError::NotFound(format!("report {raw}")))
}

fn parse_number<T: std::str::FromStr>(name: &str, raw: &str) -> ApiResult<T> {
    raw.parse()
        .map_err(|_| RegistryError::Unprocessable(format!("{name} must be a non-negative integer, got {raw:?}")))
}

fn only_known(pairs: &[(String, String)], known: &[&str]) -> ApiResult<()> {
    match pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        Some((k, _)) => Err(RegistryError::Unprocessable(format!("unknown query parameter {k:?}"))),
        None => Ok(()),
    }
}

fn single<'a>(pairs: &'a [(String, String)], name: &str) -> ApiResult<Option<&'a str>> {
    let mut values = pairs.iter().filter(|(k, _)| k == name).map(|(_, v)| v.as_str());
    let first = values.next();
    if values.next().is_some() {
        return Err(RegistryError::Unprocessable(format!("{name} given more than once")));
    }
    Ok(first)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegisterRequest {
    service_id: String,
    #[serde(default)]
    vendor_id: Option<String>,
    #[serde(default)]
    display_name: Option<String>,
    #[serde(default)]
    audit_frequency_seconds: Option<u64>,
}

async fn register_service(State(state): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let role = state.role(&headers)?;
    let vendor = require_vendor(&role)?.to_string();
    let req: RegisterRequest =
        serde_json::from_slice(&body).map_err(|e| RegistryError::field("body", e.to_string()))?;
    if req.vendor_id.as_ref().is_some_and(|v| *v != vendor) {
        return Err(RegistryError::Forbidden("vendors may only register their own services".into()));
    }
    let slug_ok = !req.service_id.is_empty()
        && req.service_id.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-' || b == b'_');
    if !slug_ok {
        return Err(RegistryError::field("service_id", "must be a non-empty slug of [a-z0-9_-]"));
    }
    let frequency = req.audit_frequency_seconds.unwrap_or(state.config.default_audit_frequency_seconds);
    if frequency == 0 {
        return Err(RegistryError::field("audit_frequency_seconds", "must be positive"));
    }
    let registration = ServiceRegistration {
        display_name: req.display_name.unwrap_or_else(|| req.service_id.clone()),
        service_id: req.service_id,
        vendor_id: vendor,
        audit_frequency_seconds: frequency,
        created_at: state.clock.now(),
    };
    let stored = state.store().register_service(registration)?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

async fn get_service(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<serde_json::Value>> {
    let store = state.store();
    let service = store
        .service(&id)
        .ok_or_else(|| RegistryError::NotFound(format!("service {id:?}")))?;
    let reports = store.reports_of(&id);
    Ok(Json(json!({
        "registration": service,
        "report_count": reports.len(),
        "latest_report_digest": reports.first().map(|r| r.digest),
    })))
}

#[derive(Serialize)]
struct SubmitResponse {
    digest: Digest32,
    ledger_index: u64,
    url: String,
}

async fn submit_report(State(state): State<Shared>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let role = state.role(&headers)?;
    let vendor = require_vendor(&role)?;
    let report =
        AuditReport::from_json(&body).map_err(|e| RegistryError::field("body", format!("not an audit report: {e}")))?;
    let now = state.clock.now();
    let outcome = state.store().submit(
        vendor,
        report,
        now,
        state.config.default_audit_frequency_seconds,
        &state.config.issuers,
    )?;
    let status = if outcome.created { StatusCode::CREATED } else { StatusCode::OK };
    let response = SubmitResponse {
        digest: outcome.digest,
        ledger_index: outcome.ledger_index,
        url: format!("/v1/reports/{}", outcome.digest),
    };
    Ok((status, Json(response)).into_response())
}

async fn get_report(State(state): State<Shared>, Path(digest): Path<String>) -> ApiResult<Response> {
    let digest = parse_digest(&digest)?;
    let bytes = state.store().report_bytes(&digest)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], bytes).into_response())
}

async fn list_reports(
    State(state): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<Json<crate::store::ReportPage>> {
    let pairs = params(query)?;
    only_known(&pairs, &["cursor", "limit"])?;
    let limit = match single(&pairs, "limit")? {
        Some(raw) => parse_number::<usize>("limit", raw)?,
        None => DEFAULT_PAGE,
    };
    if limit == 0 || limit > MAX_PAGE {
        return Err(RegistryError::Unprocessable(format!("limit must be in 1..={MAX_PAGE}")));
    }
    let cursor = single(&pairs, "cursor")?.filter(|c| !c.is_empty());
    Ok(Json(state.store().list_reports(&id, cursor, limit)?))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AuditRequest {
    finding: Finding,
    #[serde(default)]
    note: String,
}

#[derive(Serialize)]
struct AuditResponse {
    event: AuditEvent,
    ledger_index: u64,
    badge: BadgeStatus,
}

async fn record_audit_event(
    State(state): State<Shared>,
    Path(digest): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<Response> {
    let role = state.role(&headers)?;
    let auditor = require_auditor(&role)?;
    let digest = parse_digest(&digest)?;
    let req: AuditRequest =
        serde_json::from_slice(&body).map_err(|e| RegistryError::field("body", e.to_string()))?;
    let mut store = state.store();
    let (event, entry) = store.record_audit(&digest, auditor, req.finding, req.note, state.clock.now())?;
    let service_id = store.record(&digest).map(|r| r.service_id.clone()).unwrap_or_default();
    let badge = state.badge(&store, &service_id)?;
    let response = AuditResponse {
        event,
        ledger_index: entry.index,
        badge,
    };
    Ok((StatusCode::CREATED, Json(response)).into_response())
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum SliceStatus {
    Ok,
    NotComputed,
}

#[derive(Serialize)]
struct MetricsResponse {
    service_id: String,
    report_digest: Digest32,
    report_timestamp: Timestamp,
    filter: SliceFilter,
    slice_key: String,
    criterion: Option<Criterion>,
    status: SliceStatus,
    user_count: Option<u64>,
    metrics: Option<GroupMetrics>,
    results: Vec<MetricResult>,
    available_slices: Vec<String>,
    reason: Option<String>,
    disclaimer: &'static str,
}

/// Builds the conjunctive filter from repeatable `attr.<name>=<value>` parameters.
fn parse_filter(pairs: &[(String, String)]) -> ApiResult<(SliceFilter, Option<Criterion>)> {
    let mut filter = SliceFilter::all();
    for (key, value) in pairs {
        if key == "criterion" {
            continue;
        }
        let Some(name) = key.strip_prefix(ATTR_PREFIX) else {
            return Err(RegistryError::Unprocessable(format!("unknown query parameter {key:?}")));
        };
        if name.is_empty() || value.is_empty() {
            return Err(RegistryError::Unprocessable(format!("empty attribute name or value in {key:?}")));
        }
        if filter.constrains(name) {
            return Err(RegistryError::Unprocessable(format!("attribute {name:?} given more than once")));
        }
        filter = filter.with(name, value.as_str());
    }
    let criterion = single(pairs, "criterion")?
        .map(|raw| raw.parse::<Criterion>().map_err(|e| RegistryError::Unprocessable(e.to_string())))
        .transpose()?;
    Ok((filter, criterion))
}

async fn query_metrics(
    State(state): State<Shared>,
    Path(id): Path<String>,
    query: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<Json<MetricsResponse>> {
    let (filter, criterion) = parse_filter(&params(query)?)?;
    let store = state.store();
    if store.service(&id).is_none() {
        return Err(RegistryError::NotFound(format!("service {id:?}")));
    }
    let latest = store
        .latest_report(&id)
        .ok_or_else(|| RegistryError::NotFound(format!("service {id:?} has no reports")))?
        .clone();
    let report = store.load_report(&latest.digest)?.fairness_report;
    drop(store);

    let mut response = MetricsResponse {
        service_id: id,
        report_digest: latest.digest,
        report_timestamp: latest.timestamp,
        slice_key: filter.key(),
        filter,
        criterion,
        status: SliceStatus::NotComputed,
        user_count: None,
        metrics: None,
        results: Vec::new(),
        available_slices: Vec::new(),
        reason: None,
        disclaimer: CANONICAL_DISCLAIMER,
    };
    if let Some(c) = criterion.filter(|c| !report.config.criteria.contains(c)) {
        response.reason = Some(format!("criterion {c} was not computed in the latest report"));
        response.available_slices = report.slices.iter().map(|s| s.key.clone()).collect();
        return Ok(Json(response));
    }
    match report.slice(&response.filter) {
        Some(slice) => {
            response.status = SliceStatus::Ok;
            response.user_count = Some(slice.user_count);
            response.metrics = Some(slice.metrics);
            response.results = slice
                .results
                .iter()
                .filter(|r| criterion.is_none_or(|c| r.criterion == c))
                .cloned()
                .collect();
        }
        None => {
            response.reason = Some("slice was not precomputed in the latest report".into());
            response.available_slices = report.slices.iter().map(|s| s.key.clone()).collect();
        }
    }
    Ok(Json(response))
}

async fn badge(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult<Json<BadgeStatus>> {
    let store = state.store();
    Ok(Json(state.badge(&store, &id)?))
}

#[derive(Serialize)]
struct LedgerPage {
    total: u64,
    entries: Vec<LedgerEntry>,
}

async fn list_ledger(
    State(state): State<Shared>,
    query: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<Json<LedgerPage>> {
    let pairs = params(query)?;
    only_known(&pairs, &["from", "limit"])?;
    let from = single(&pairs, "from")?.map(|v| parse_number::<usize>("from", v)).transpose()?.unwrap_or(0);
    let limit = single(&pairs, "limit")?
        .map(|v| parse_number::<usize>("limit", v))
        .transpose()?
        .unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(RegistryError::Unprocessable(format!("limit must be in 1..={MAX_PAGE}")));
    }
    let store = state.store();
    let entries = store.ledger().entries();
    Ok(Json(LedgerPage {
        total: entries.len() as u64,
        entries: entries.iter().skip(from).take(limit).cloned().collect(),
    }))
}

#[derive(Serialize)]
struct VerifyResponse {
    #[serde(flatten)]
    verification: ChainVerification,
    head_entry_hash: Option<Digest32>,
    entry_count: u64,
}

async fn verify_ledger(State(state): State<Shared>) -> Json<VerifyResponse> {
    let store = state.store();
    Json(VerifyResponse {
        verification: store.verify_ledger_file(),
        head_entry_hash: store.ledger().head().map(|e| e.entry_hash),
        entry_count: store.ledger().len() as u64,
    })
}

#[derive(Serialize)]
struct SampleResponse {
    services: Vec<String>,
    requested: usize,
    seed: u64,
    truncated: bool,
    note: Option<String>,
    rng: &'static str,
}

/// `n` distinct items, uniformly, by a partial Fisher–Yates pass over the
/// sorted population.
pub fn sample_services(mut population: Vec<String>, n: usize, seed: u64) -> Vec<String> {
    population.sort();
    let k = n.min(population.len());
    let mut rng = SeededRng::new(seed);
    for i in 0..k {
        let j = i + rng.below((population.len() - i) as u64) as usize;
        population.swap(i, j);
    }
    population.truncate(k);
    population
}

async fn audit_sample(
    State(state): State<Shared>,
    headers: HeaderMap,
    query: Result<Query<Vec<(String, String)>>, QueryRejection>,
) -> ApiResult<Json<SampleResponse>> {
    let role = state.role(&headers)?;
    require_auditor(&role)?;
    let pairs = params(query)?;
    only_known(&pairs, &["n", "seed"])?;
    let n = single(&pairs, "n")?
        .ok_or_else(|| RegistryError::Unprocessable("n is required".into()))
        .and_then(|v| parse_number::<usize>("n", v))?;
    let seed = single(&pairs, "seed")?
        .ok_or_else(|| RegistryError::Unprocessable("seed is required".into()))
        .and_then(|v| parse_number::<u64>("seed", v))?;
    let population = state.store().service_ids();
    let truncated = n > population.len();
    let note = truncated.then(|| format!("requested {n} but only {} services are registered", population.len()));
    Ok(Json(SampleResponse {
        services: sample_services(population, n, seed),
        requested: n,
        seed,
        truncated,
        note,
        rng: RNG_ALGORITHM,
    }))
}
