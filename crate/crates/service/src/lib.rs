//! HTTP API over the EVINGCA library for interactive parameter tuning.
//!
//! | Method | Path | Body | Response |
//! |---|---|---|---|
//! | `GET` | `/health` | | `{"status": "ok"}` |
//! | `POST` | `/datasets` | generator spec, CSV JSON, or `text/csv` | `201 {id, name, n, d, has_truth, scaler}` |
//! | `GET` | `/datasets` | | list of dataset summaries |
//! | `GET` | `/datasets/{id}` | | summary plus `last_run` |
//! | `GET` | `/datasets/{id}/points?dims=i,j` | | `{dims, n_total, indices, points, truth}` |
//! | `POST` | `/datasets/{id}/cluster` | clustering config | `{labels, n_clusters, runtime_s, ari, nmi, report, config}` |
//!
//! Errors are `{"error": message}` plus `"field"` when a config field is out
//! of range; unknown ids give 404. Clustering runs on one dataset are
//! serialized; runs on different datasets proceed concurrently.

mod error;
mod state;

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use evingca::data::{generate, parse_csv, scale, SyntheticKind, SyntheticSpec};
use evingca::engine::{cluster, EngineError};
use evingca::metrics::{ari, nmi};
use evingca::{Dataset, EvingcaConfig, RunReport, ScalerKind};
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;
pub use state::{Entry, SessionState};

/// Most points returned by the points endpoint.
pub const MAX_DISPLAY_POINTS: usize = 20_000;

/// Largest accepted request body.
pub const MAX_BODY_BYTES: usize = 64 * 1024 * 1024;

pub type AppState = Arc<SessionState>;

/// The API router with CORS open to localhost origins.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/datasets", post(create_dataset).get(list_datasets))
        .route("/datasets/{id}", get(dataset_summary))
        .route("/datasets/{id}/points", get(points))
        .route("/datasets/{id}/cluster", post(run_cluster))
        .layer(DefaultBodyLimit::max(MAX_BODY_BYTES))
        .layer(cors())
        .with_state(state)
}

fn cors() -> CorsLayer {
    CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin: &HeaderValue, _| {
            is_local_origin(origin)
        }))
        .allow_methods([Method::GET, Method::POST])
        .allow_headers([header::CONTENT_TYPE])
}

fn is_local_origin(origin: &HeaderValue) -> bool {
    let Ok(origin) = origin.to_str() else {
        return false;
    };
    let host = origin
        .strip_prefix("http://")
        .or_else(|| origin.strip_prefix("https://"))
        .unwrap_or("");
    let host = host.rsplit_once(':').map_or(host, |(h, port)| {
        if port.chars().all(|c| c.is_ascii_digit()) {
            h
        } else {
            host
        }
    });
    matches!(host, "localhost" | "127.0.0.1" | "[::1]")
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(Arc::new(SessionState::new()))).await
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

/// Body of `POST /datasets` when sent as JSON: either a generator spec
/// (`kind`, optional `n`, `seed`, `noise`) or inline CSV text (`csv`,
/// optional `label_column`). Both accept `scaler` (default `minmax`) and
/// `name`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateDataset {
    pub kind: Option<SyntheticKind>,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub noise: Option<f64>,
    pub csv: Option<String>,
    pub label_column: Option<String>,
    pub scaler: Option<ScalerKind>,
    pub name: Option<String>,
}

/// Query parameters of a `text/csv` upload.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvQuery {
    pub label_column: Option<String>,
    pub scaler: Option<ScalerKind>,
    pub name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub name: String,
    pub n: usize,
    pub d: usize,
    pub has_truth: bool,
    pub scaler: ScalerKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_run: Option<RunReport>,
}

fn summary(entry: &Entry, last_run: Option<RunReport>) -> DatasetSummary {
    let ds = &entry.dataset;
    DatasetSummary {
        id: entry.id.clone(),
        name: ds.name().to_string(),
        n: ds.len(),
        d: ds.dim(),
        has_truth: ds.labels().is_some(),
        scaler: ds.scaler_applied(),
        last_run,
    }
}

async fn create_dataset(
    State(state): State<AppState>,
    Query(query): Query<CsvQuery>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<(StatusCode, Json<DatasetSummary>), ApiError> {
    let is_csv = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/csv"));
    let request = if is_csv {
        let text = std::str::from_utf8(&body).map_err(|_| ApiError::bad_request("CSV body is not UTF-8"))?;
        CreateDataset {
            csv: Some(text.to_string()),
            label_column: query.label_column,
            scaler: query.scaler,
            name: query.name,
            ..Default::default()
        }
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))?
    };
    let ds = tokio::task::spawn_blocking(move || build_dataset(request))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))??;
    let entry = state.register(ds);
    Ok((StatusCode::CREATED, Json(summary(&entry, None))))
}

fn build_dataset(req: CreateDataset) -> Result<Dataset, ApiError> {
    let raw = match (req.kind, req.csv) {
        (Some(kind), None) => {
            if req.label_column.is_some() {
                return Err(ApiError::invalid_field("label_column", "only valid with csv"));
            }
            let mut spec = SyntheticSpec::new(kind, req.n.unwrap_or(kind.default_points()), req.seed.unwrap_or(42));
            if let Some(noise) = req.noise {
                spec = spec.with_noise(noise);
            }
            generate(&spec).map_err(|e| ApiError::bad_request(e.to_string()))?
        }
        (None, Some(csv)) => {
            if req.n.is_some() || req.seed.is_some() || req.noise.is_some() {
                return Err(ApiError::bad_request("n, seed and noise apply only to generator specs"));
            }
            parse_csv(csv.as_bytes(), "upload", req.label_column.as_deref())
                .map_err(|e| ApiError::bad_request(e.to_string()))?
        }
        _ => return Err(ApiError::bad_request("provide exactly one of kind or csv")),
    };
    let raw = match req.name {
        Some(name) => raw.with_name(name),
        None => raw,
    };
    Ok(scale(&raw, req.scaler.unwrap_or_default()))
}

async fn list_datasets(State(state): State<AppState>) -> Json<Vec<DatasetSummary>> {
    Json(state.entries().iter().map(|e| summary(e, None)).collect())
}

async fn dataset_summary(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<DatasetSummary>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let last = entry.last_run.lock().await.clone();
    Ok(Json(summary(&entry, last)))
}

#[derive(Debug, Deserialize)]
pub struct PointsQuery {
    /// Two comma-separated column indices, e.g. `0,1`.
    pub dims: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PointsResponse {
    pub dims: [usize; 2],
    pub n_total: usize,
    /// Row index of each returned point; a stride sample when the dataset
    /// exceeds [`MAX_DISPLAY_POINTS`].
    pub indices: Vec<usize>,
    pub points: Vec<[f64; 2]>,
    pub truth: Option<Vec<i64>>,
}

fn parse_dims(raw: Option<&str>, d: usize) -> Result<[usize; 2], ApiError> {
    let Some(raw) = raw else {
        return Ok([0, 1.min(d - 1)]);
    };
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let bad = || ApiError::invalid_field("dims", format!("expected two column indices below {d}, got {raw:?}"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let i: usize = parts[0].parse().map_err(|_| bad())?;
    let j: usize = parts[1].parse().map_err(|_| bad())?;
    if i >= d || j >= d {
        return Err(bad());
    }
    Ok([i, j])
}

async fn points(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(query): Query<PointsQuery>,
) -> Result<Json<PointsResponse>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let ds = &entry.dataset;
    let dims = parse_dims(query.dims.as_deref(), ds.dim())?;
    let stride = ds.len().div_ceil(MAX_DISPLAY_POINTS).max(1);
    let indices: Vec<usize> = (0..ds.len()).step_by(stride).collect();
    let points = indices
        .iter()
        .map(|&i| {
            let row = ds.row(i);
            [row[dims[0]], row[dims[1]]]
        })
        .collect();
    let truth = ds.labels().map(|l| indices.iter().map(|&i| l[i]).collect());
    Ok(Json(PointsResponse {
        dims,
        n_total: ds.len(),
        indices,
        points,
        truth,
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClusterResponse {
    /// One label per row of the full dataset; `-1` is noise.
    pub labels: Vec<i64>,
    pub n_clusters: usize,
    pub runtime_s: f64,
    /// Present when the dataset has ground truth.
    pub ari: Option<f64>,
    pub nmi: Option<f64>,
    pub report: RunReport,
    pub config: EvingcaConfig,
}

async fn run_cluster(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ClusterResponse>, ApiError> {
    let entry = state.get(&id).ok_or_else(|| ApiError::not_found(&id))?;
    let cfg: EvingcaConfig = if body.iter().all(u8::is_ascii_whitespace) {
        EvingcaConfig::for_dataset(entry.dataset.len())
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid config: {e}")))?
    };
    cfg.validate().map_err(engine_error)?;

    let mut last_run = entry.last_run.lock().await;
    let ds = entry.dataset.clone();
    let run_cfg = cfg.clone();
    let out = tokio::task::spawn_blocking(move || cluster(&ds, &run_cfg))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(engine_error)?;
    *last_run = Some(out.report.clone());
    drop(last_run);

    let truth = entry.dataset.labels();
    let score = |f: fn(&[i64], &[i64]) -> Result<f64, _>| truth.and_then(|t| f(t, &out.labels.labels).ok());
    Ok(Json(ClusterResponse {
        ari: score(ari),
        nmi: score(nmi),
        n_clusters: out.labels.n_clusters,
        runtime_s: out.report.runtime_s,
        labels: out.labels.labels,
        report: out.report,
        config: cfg,
    }))
}

fn engine_error(e: EngineError) -> ApiError {
    match e.field() {
        Some(field) => ApiError::invalid_field(field, e.to_string()),
        None => ApiError::unprocessable(e.to_string()),
    }
}
