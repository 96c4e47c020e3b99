//! HTTP service: application registration, planning and similarity scoring.
//!
//! | method | path            | body                   | success                   |
//! |--------|-----------------|------------------------|---------------------------|
//! | GET    | `/health`       |                        | 200 `{"status":"ok"}`     |
//! | GET    | `/applications` |                        | 200 [`ApplicationList`]   |
//! | POST   | `/applications` | [`RegisterRequest`]    | 201 [`ApplicationSummary`]|
//! | POST   | `/plans`        | [`PlanRequest`]        | 200 `ProvisioningPlan`    |
//! | POST   | `/similarity`   | [`SimilarityRequest`]  | 200 `DissimilarityResult` |
//!
//! Every failure is JSON of the form [`ErrorBody`]: 400 for malformed or
//! invalid input, 404 for unknown ids, 409 for duplicate registrations, 422
//! for models that do not fit the request, 500 for storage faults.

use std::collections::BTreeMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use provision_core::configurator::{provision, ProvisionRequest, ProvisioningPlan};
use provision_core::predictor::ModelArtifact;
use provision_core::similarity::{dissimilarity_score, CallGraph};
use provision_core::simulator::{PlatformParams, SloPolicy};
use provision_core::{ConfigSpace, DissimilarityResult, FunctionSpec, PriceTable};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;

use crate::config::ServiceConfig;
use crate::store::{ApplicationSummary, RegistryStore, StoreError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDetail {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: ErrorDetail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterRequest {
    pub id: String,
    pub call_graph: CallGraph,
    /// A model artifact document.
    #[serde(default)]
    pub model: Option<serde_json::Value>,
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApplicationList {
    pub applications: Vec<ApplicationSummary>,
}

/// A provisioning request whose prices and platform parameters default to
/// the service configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub spec: FunctionSpec,
    #[serde(default)]
    pub call_graph: Option<CallGraph>,
    pub space: ConfigSpace,
    #[serde(default)]
    pub prices: Option<PriceTable>,
    #[serde(default)]
    pub policy: SloPolicy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub params: Option<PlatformParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRequest {
    pub a: CallGraph,
    pub b: CallGraph,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code.into(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<provision_core::Error> for ApiError {
    fn from(e: provision_core::Error) -> Self {
        use provision_core::Error as E;
        let (status, code) = match &e {
            E::InvalidInput(_) => (StatusCode::BAD_REQUEST, "invalid_input"),
            E::GraphTooLarge { .. } => (StatusCode::BAD_REQUEST, "graph_too_large"),
            E::IncompatibleModel(_) => (StatusCode::UNPROCESSABLE_ENTITY, "incompatible_model"),
            E::Integrity { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "integrity"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            StoreError::Conflict(_) => ApiError::new(StatusCode::CONFLICT, "conflict", e.to_string()),
            StoreError::Core(core) => core.into(),
            StoreError::Io { .. } => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()),
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<D: DeserializeOwned>(body: &Bytes) -> ApiResult<D> {
    serde_json::from_slice(body).map_err(|e| {
        let code = if e.is_syntax() || e.is_eof() {
            "malformed_json"
        } else {
            "invalid_request"
        };
        ApiError::new(StatusCode::BAD_REQUEST, code, e.to_string())
    })
}

pub struct AppState {
    pub store: RegistryStore,
    pub config: ServiceConfig,
    // Registrations go through one writer at a time.
    writer: Mutex<()>,
}

impl AppState {
    pub fn new(store: RegistryStore, config: ServiceConfig) -> Self {
        AppState {
            store,
            config,
            writer: Mutex::new(()),
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/applications", get(list_applications).post(register_application))
        .route("/plans", axum::routing::post(create_plan))
        .route("/similarity", axum::routing::post(similarity))
        .fallback(not_found)
        .method_not_allowed_fallback(method_not_allowed)
        .with_state(state)
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed")
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into() })
}

// Store access is blocking file I/O.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
    })?
}

async fn list_applications(State(state): State<Arc<AppState>>) -> ApiResult<Json<ApplicationList>> {
    let store = state.store.clone();
    let applications = blocking(move || Ok(store.list()?)).await?;
    Ok(Json(ApplicationList { applications }))
}

async fn register_application(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<ApplicationSummary>)> {
    let req: RegisterRequest = parse_body(&body)?;
    let model = match &req.model {
        Some(doc) => Some(ModelArtifact::from_json(&doc.to_string()).map_err(|e| {
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_model", e.to_string())
        })?),
        None => None,
    };
    let summary = ApplicationSummary {
        id: req.id.clone(),
        has_model: model.is_some(),
        nodes: req.call_graph.node_count(),
        edges: req.call_graph.edge_count(),
        metadata: req.metadata.clone(),
    };
    let _guard = state.writer.lock().await;
    let store = state.store.clone();
    blocking(move || Ok(store.register(&req.id, &req.call_graph, model.as_ref(), req.metadata)?)).await?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn create_plan(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<Json<ProvisioningPlan>> {
    let req: PlanRequest = parse_body(&body)?;
    let params = req.params.unwrap_or_else(|| state.config.params.clone());
    let core_req = ProvisionRequest {
        spec: req.spec,
        call_graph: req.call_graph,
        space: req.space,
        prices: req.prices.unwrap_or(state.config.prices),
        policy: req.policy,
        seed: req.seed,
    };
    let store = state.store.clone();
    let threshold = state.config.threshold;
    let plan = blocking(move || {
        let registry = store.load_registry(threshold)?;
        Ok(provision(&core_req, &registry, &params)?)
    })
    .await?;
    Ok(Json(plan))
}

async fn similarity(body: Bytes) -> ApiResult<Json<DissimilarityResult>> {
    let req: SimilarityRequest = parse_body(&body)?;
    let res = blocking(move || Ok(dissimilarity_score::<f64>(&req.a, &req.b))).await?;
    Ok(Json(res))
}

/// Binds the configured address and serves until interrupted.
pub async fn serve(config: ServiceConfig) -> anyhow::Result<()> {
    config.validate()?;
    let store = RegistryStore::open(&config.registry_path)?;
    store.load_registry(config.threshold)?;
    let listener = tokio::net::TcpListener::bind(config.addr()).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    let app = router(Arc::new(AppState::new(store, config)));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
