//! Routing gateway: loads one checkpoint and serves routing decisions with
//! concept rationales over JSON/HTTP.
//!
//! Endpoints:
//!
//! - `POST /route` — body per [`RouteRequest`]; exactly one of `embedding`
//!   or `text` (the latter requires a configured embedding client).
//!   Optional `intervention` overrides one concept group. Errors come back
//!   as `{"code", "message"}`.
//! - `GET /health` — liveness plus the checkpoint version.
//! - `GET /info` — checkpoint metadata: kind, lambda, parameter count,
//!   schema, catalog, requests served.
//!
//! The loaded checkpoint is immutable; request handling shares it behind an
//! `Arc` and identical requests produce identical decision fields. Model
//! swaps happen by restart.

pub mod embed;

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crouter_core::dataset::{ConceptSchema, GroupName, ModelCatalog};
use crouter_core::routers::{Checkpoint, PolicyKind, Rationale, RouterPolicy, TrainMetadata};

use embed::{EmbedError, EmbeddingClient, EmbeddingClientConfig};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServiceConfig {
    #[serde(default = "default_bind_addr")]
    pub bind_addr: String,
    pub checkpoint_path: PathBuf,
    #[serde(default)]
    pub embedding: Option<EmbeddingClientConfig>,
}

fn default_bind_addr() -> String {
    "127.0.0.1:8080".to_string()
}

impl ServiceConfig {
    pub fn new(checkpoint_path: impl Into<PathBuf>) -> Self {
        Self {
            bind_addr: default_bind_addr(),
            checkpoint_path: checkpoint_path.into(),
            embedding: None,
        }
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self, ServiceError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ServiceError::Startup(format!("{}: {e}", path.display())))?;
        let mut config: ServiceConfig = serde_json::from_str(&text)
            .map_err(|e| ServiceError::Startup(format!("{}: {e}", path.display())))?;
        config.apply_env_overrides();
        Ok(config)
    }

    /// Environment variables win over the file: `BIND_ADDR`,
    /// `CHECKPOINT_PATH`, `EMBED_ENDPOINT`, `EMBED_TIMEOUT_MS`.
    pub fn apply_env_overrides(&mut self) {
        if let Ok(bind) = std::env::var("BIND_ADDR") {
            self.bind_addr = bind;
        }
        if let Ok(path) = std::env::var("CHECKPOINT_PATH") {
            self.checkpoint_path = PathBuf::from(path);
        }
        if let Ok(endpoint) = std::env::var("EMBED_ENDPOINT") {
            let timeout_ms = std::env::var("EMBED_TIMEOUT_MS")
                .ok()
                .and_then(|v| v.parse().ok())
                .or(self.embedding.as_ref().map(|e| e.timeout_ms))
                .unwrap_or(2_000);
            let expected_dim = self.embedding.as_ref().map(|e| e.expected_dim).unwrap_or(0);
            let retries = self.embedding.as_ref().map(|e| e.retries).unwrap_or(2);
            self.embedding = Some(EmbeddingClientConfig {
                endpoint,
                timeout_ms,
                expected_dim,
                retries,
            });
        } else if let (Some(embedding), Some(ms)) = (
            self.embedding.as_mut(),
            std::env::var("EMBED_TIMEOUT_MS")
                .ok()
                .and_then(|v| v.parse::<u64>().ok()),
        ) {
            embedding.timeout_ms = ms;
        }
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("startup failed: {0}")]
    Startup(String),
    #[error(transparent)]
    Core(#[from] crouter_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Wire format for errors.
#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                code: code.to_string(),
                message: message.into(),
            },
        }
    }

    fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<crouter_core::Error> for ApiError {
    fn from(err: crouter_core::Error) -> Self {
        use crouter_core::Error as E;
        match &err {
            E::Shape(_) | E::Schema(_) | E::Value(_) | E::Contract(_) => {
                ApiError::bad_request("invalid_request", err.to_string())
            }
            _ => ApiError::new(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal_error",
                err.to_string(),
            ),
        }
    }
}

impl From<EmbedError> for ApiError {
    fn from(err: EmbedError) -> Self {
        match &err {
            EmbedError::Upstream { .. } => {
                ApiError::new(StatusCode::BAD_GATEWAY, "upstream_embedding_error", err.to_string())
            }
            EmbedError::Dimension { .. } => ApiError::new(
                StatusCode::BAD_GATEWAY,
                "embedding_integrity_error",
                err.to_string(),
            ),
            EmbedError::Config(_) => {
                ApiError::bad_request("embedding_not_configured", err.to_string())
            }
        }
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

pub struct ServiceState {
    pub policy: RouterPolicy,
    pub kind: PolicyKind,
    pub checkpoint_version: u32,
    pub metadata: TrainMetadata,
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
    pub param_count: usize,
    pub embedding_client: Option<EmbeddingClient>,
    pub requests_served: AtomicU64,
}

/// Embedding width the loaded policy expects, when it has one (the random
/// policy accepts any width).
fn policy_input_dim(policy: &RouterPolicy) -> Option<usize> {
    match policy {
        RouterPolicy::Bottleneck(r) => Some(r.concept_head.in_dim()),
        RouterPolicy::BlackBox(r) => Some(r.head.in_dim()),
        RouterPolicy::Knn(r) => r.embeddings.first().map(Vec::len),
        RouterPolicy::Factorization(r) => Some(r.projection.in_dim()),
        RouterPolicy::Random(_) | RouterPolicy::Oracle => None,
    }
}

/// Loads the checkpoint, builds the optional embedding client, and checks
/// the client dimension against the checkpoint.
pub fn build_state(config: &ServiceConfig) -> Result<ServiceState, ServiceError> {
    let checkpoint = Checkpoint::load(&config.checkpoint_path)
        .map_err(|e| ServiceError::Startup(e.to_string()))?;
    let kind = checkpoint.kind();
    let version = checkpoint.version;
    let metadata = checkpoint.metadata.clone();
    let schema = checkpoint.schema.clone();
    let catalog = checkpoint.catalog.clone();
    let policy = checkpoint
        .into_policy()
        .map_err(|e| ServiceError::Startup(e.to_string()))?;
    let param_count = policy.param_count();

    let embedding_client = match &config.embedding {
        None => None,
        Some(cfg) => {
            let mut cfg = cfg.clone();
            if cfg.expected_dim == 0 {
                // Fill from the checkpoint when the config leaves it unset.
                cfg.expected_dim = policy_input_dim(&policy).ok_or_else(|| {
                    ServiceError::Startup(
                        "embedding expected_dim not set and the checkpoint does not fix one"
                            .into(),
                    )
                })?;
            }
            if let Some(dim) = policy_input_dim(&policy) {
                if cfg.expected_dim != dim {
                    return Err(ServiceError::Startup(format!(
                        "embedding client dimension {} does not match checkpoint dimension {dim}",
                        cfg.expected_dim
                    )));
                }
            }
            Some(EmbeddingClient::from_config(&cfg).map_err(|e| ServiceError::Startup(e.to_string()))?)
        }
    };

    Ok(ServiceState {
        policy,
        kind,
        checkpoint_version: version,
        metadata,
        schema,
        catalog,
        param_count,
        embedding_client,
        requests_served: AtomicU64::new(0),
    })
}

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub group: GroupName,
    #[serde(rename = "override")]
    pub override_values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteRequest {
    pub request_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervention: Option<InterventionSpec>,
    /// When set, the response carries the full concept vector.
    #[serde(default)]
    pub verbose: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelScore {
    pub model: String,
    pub score: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteResponse {
    pub request_id: String,
    pub model: String,
    pub scores: Vec<ModelScore>,
    pub rationale: Option<Rationale>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub concepts: Option<Vec<f64>>,
    pub checkpoint_version: u32,
    pub processing_time_ms: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub checkpoint_version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct InfoResponse {
    pub checkpoint_version: u32,
    pub kind: PolicyKind,
    pub lambda: f64,
    pub seed: u64,
    pub param_count: usize,
    pub schema: ConceptSchema,
    pub catalog: ModelCatalog,
    pub requests_served: u64,
}

// ---------------------------------------------------------------------------
// Handlers
// ---------------------------------------------------------------------------

async fn health(State(state): State<Arc<ServiceState>>) -> Json<HealthResponse> {
    Json(HealthResponse {
        status: "ok".into(),
        checkpoint_version: state.checkpoint_version,
    })
}

async fn info(State(state): State<Arc<ServiceState>>) -> Json<InfoResponse> {
    Json(InfoResponse {
        checkpoint_version: state.checkpoint_version,
        kind: state.kind,
        lambda: state.metadata.lambda,
        seed: state.metadata.seed,
        param_count: state.param_count,
        schema: state.schema.clone(),
        catalog: state.catalog.clone(),
        requests_served: state.requests_served.load(Ordering::Relaxed),
    })
}

async fn route(
    State(state): State<Arc<ServiceState>>,
    Json(request): Json<RouteRequest>,
) -> Result<Json<RouteResponse>, ApiError> {
    let start = Instant::now();
    state.requests_served.fetch_add(1, Ordering::Relaxed);

    let embedding = match (&request.embedding, &request.text) {
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request(
                "invalid_request",
                "provide exactly one of 'embedding' or 'text', not both",
            ))
        }
        (None, None) => {
            return Err(ApiError::bad_request(
                "invalid_request",
                "provide exactly one of 'embedding' or 'text'",
            ))
        }
        (Some(embedding), None) => embedding.clone(),
        (None, Some(text)) => match &state.embedding_client {
            None => {
                return Err(ApiError::bad_request(
                    "embedding_not_configured",
                    "text routing requires an embedding client; configure 'embedding' \
                     in the service config or set EMBED_ENDPOINT",
                ))
            }
            Some(client) => client.embed(text).await?,
        },
    };

    let decision = match &request.intervention {
        None => state.policy.route(&embedding)?,
        Some(spec) => {
            state
                .policy
                .route_with_intervention(&embedding, spec.group, &spec.override_values)?
        }
    };

    let scores = state
        .catalog
        .models
        .iter()
        .zip(&decision.scores)
        .map(|(m, &score)| ModelScore {
            model: m.name.clone(),
            score,
        })
        .collect();

    Ok(Json(RouteResponse {
        request_id: request.request_id,
        model: decision.model_name,
        scores,
        rationale: decision.rationale,
        concepts: if request.verbose {
            decision.concepts
        } else {
            None
        },
        checkpoint_version: state.checkpoint_version,
        processing_time_ms: start.elapsed().as_secs_f64() * 1e3,
    }))
}

/// Builds the router; exposed so tests can serve on an ephemeral port.
pub fn app(state: Arc<ServiceState>) -> axum::Router {
    axum::Router::new()
        .route("/route", post(route))
        .route("/health", get(health))
        .route("/info", get(info))
        .with_state(state)
}

/// Binds and serves forever.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(build_state(&config)?);
    let listener = tokio::net::TcpListener::bind(&config.bind_addr)
        .await
        .map_err(|e| ServiceError::Startup(format!("bind {}: {e}", config.bind_addr)))?;
    eprintln!(
        "serving {} checkpoint v{} on http://{}",
        state.kind,
        state.checkpoint_version,
        listener.local_addr()?
    );
    axum::serve(listener, app(state))
        .await
        .map_err(ServiceError::Io)?;
    Ok(())
}

/// Synchronous wrapper owning its runtime; used by the CLI.
pub fn serve_blocking(config: ServiceConfig) -> Result<(), ServiceError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(config))
}
