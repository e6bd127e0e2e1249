//! Read-only HTTP facade over the cache. `POST /repos` is the only mutating
//! endpoint; it runs the same analysis as the `analyze` command in the
//! background.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use archdelta_core::repo::locator_repo_id;
use archdelta_core::store::{self, to_versioned_json, CacheLayout};
use archdelta_core::views::ViewKind;
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::analyze::{analyze, AnalyzeOptions};
use crate::payload::{self, AppError};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Job {
    Building,
    Failed(String),
}

pub struct ServiceState {
    cache: CacheLayout,
    jobs: Mutex<HashMap<String, Job>>,
    analyze_jobs: Option<usize>,
}

impl ServiceState {
    pub fn new(cache: CacheLayout, analyze_jobs: Option<usize>) -> Arc<Self> {
        Arc::new(ServiceState {
            cache,
            jobs: Mutex::new(HashMap::new()),
            analyze_jobs,
        })
    }

    /// Marks `repo_id` as being analyzed; false when it already is.
    pub fn begin_job(&self, repo_id: &str) -> bool {
        let mut jobs = self.jobs.lock().unwrap_or_else(|e| e.into_inner());
        if jobs.get(repo_id) == Some(&Job::Building) {
            return false;
        }
        jobs.insert(repo_id.to_owned(), Job::Building);
        true
    }

    fn job(&self, repo_id: &str) -> Option<Job> {
        self.jobs
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .get(repo_id)
            .cloned()
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn json_bytes(status: StatusCode, bytes: Vec<u8>) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    let body = to_versioned_json(&ErrorBody {
        error: message.into(),
    })
    .unwrap_or_default();
    json_bytes(status, body)
}

impl IntoResponse for AppError {
    fn into_response(self) -> Response {
        use archdelta_core::Error as E;
        let status = match &self {
            AppError::Usage(_) | AppError::Core(E::InvalidArgument(_)) => StatusCode::BAD_REQUEST,
            AppError::Core(
                E::SnapshotNotCached { .. }
                | E::RepoNotCached(_)
                | E::UnknownTag(_)
                | E::UnknownScope(_),
            ) => StatusCode::NOT_FOUND,
            AppError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        error(status, self.to_string())
    }
}

/// Maps a cache miss to 503 while the repository is still being analyzed.
fn respond(state: &ServiceState, repo_id: &str, result: payload::AppResult<Vec<u8>>) -> Response {
    match result {
        Ok(bytes) => json_bytes(StatusCode::OK, bytes),
        Err(e) if e.is_missing_cache() && state.job(repo_id) == Some(Job::Building) => error(
            StatusCode::SERVICE_UNAVAILABLE,
            format!("{repo_id} is still being analyzed"),
        ),
        Err(e) => e.into_response(),
    }
}

fn parse_kind(kind: Option<&str>, default: Option<ViewKind>) -> Result<ViewKind, String> {
    match (kind, default) {
        (Some(k), _) => ViewKind::from_str(k).map_err(|e| e.to_string()),
        (None, Some(d)) => Ok(d),
        (None, None) => Err("missing query parameter 'kind'".into()),
    }
}

async fn health() -> &'static str {
    "ok"
}

#[derive(Debug, Deserialize)]
struct AnalyzeRequest {
    locator: String,
    #[serde(default)]
    tags: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
struct RepoSummary {
    repo_id: String,
    locator: Option<String>,
    tags: Vec<String>,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn summary(state: &ServiceState, repo_id: &str) -> Option<RepoSummary> {
    let manifest = store::load_manifest(&state.cache, repo_id).ok();
    let job = state.job(repo_id);
    if manifest.is_none() && job.is_none() {
        return None;
    }
    let (status, error) = match job {
        Some(Job::Building) => ("building", None),
        Some(Job::Failed(e)) => ("failed", Some(e)),
        None => ("ready", None),
    };
    Some(RepoSummary {
        repo_id: repo_id.to_owned(),
        locator: manifest.as_ref().map(|m| m.locator.clone()),
        tags: manifest
            .map(|m| m.tags.into_iter().map(|t| t.name).collect())
            .unwrap_or_default(),
        status,
        error,
    })
}

#[derive(Debug, Serialize)]
struct Accepted {
    repo_id: String,
    status: &'static str,
}

async fn post_repo(State(state): State<Arc<ServiceState>>, body: Bytes) -> Response {
    let req: AnalyzeRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => {
            return error(
                StatusCode::BAD_REQUEST,
                format!("invalid request body: {e}"),
            )
        }
    };
    let repo_id = locator_repo_id(&req.locator);
    if !state.begin_job(&repo_id) {
        let body = to_versioned_json(&Accepted {
            repo_id,
            status: "building",
        })
        .unwrap_or_default();
        return json_bytes(StatusCode::CONFLICT, body);
    }
    let worker = state.clone();
    let id = repo_id.clone();
    tokio::task::spawn_blocking(move || {
        let opts = AnalyzeOptions {
            locator: req.locator,
            tags: req.tags,
            jobs: worker.analyze_jobs,
        };
        let result = analyze(&worker.cache, &opts);
        let mut jobs = worker.jobs.lock().unwrap_or_else(|e| e.into_inner());
        match result {
            Ok(_) => {
                jobs.remove(&id);
            }
            Err(e) => {
                log::error!("analysis of {id} failed: {e}");
                jobs.insert(id, Job::Failed(e.to_string()));
            }
        }
    });
    let body = to_versioned_json(&Accepted {
        repo_id,
        status: "building",
    })
    .unwrap_or_default();
    json_bytes(StatusCode::ACCEPTED, body)
}

#[derive(Debug, Serialize)]
struct RepoList {
    repos: Vec<RepoSummary>,
}

async fn list_repos(State(state): State<Arc<ServiceState>>) -> Response {
    let mut ids = match state.cache.repo_ids() {
        Ok(ids) => ids,
        Err(e) => return AppError::from(e).into_response(),
    };
    ids.extend(
        state
            .jobs
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .keys()
            .cloned(),
    );
    ids.sort();
    ids.dedup();
    let repos = ids.iter().filter_map(|id| summary(&state, id)).collect();
    json_bytes(
        StatusCode::OK,
        to_versioned_json(&RepoList { repos }).unwrap_or_default(),
    )
}

async fn get_repo(State(state): State<Arc<ServiceState>>, Path(id): Path<String>) -> Response {
    match summary(&state, &id) {
        Some(s) => json_bytes(StatusCode::OK, to_versioned_json(&s).unwrap_or_default()),
        None => error(
            StatusCode::NOT_FOUND,
            format!("repository not cached: {id}"),
        ),
    }
}

async fn get_tags(State(state): State<Arc<ServiceState>>, Path(id): Path<String>) -> Response {
    let result = payload::tags_json(&state.cache, &id);
    respond(&state, &id, result)
}

async fn get_tree(
    State(state): State<Arc<ServiceState>>,
    Path((id, tag)): Path<(String, String)>,
) -> Response {
    let result = payload::tree_json(&state.cache, &id, &tag);
    respond(&state, &id, result)
}

#[derive(Debug, Deserialize)]
struct ViewQuery {
    kind: Option<String>,
    #[serde(default)]
    path: String,
}

async fn get_view(
    State(state): State<Arc<ServiceState>>,
    Path((id, tag)): Path<(String, String)>,
    Query(q): Query<ViewQuery>,
) -> Response {
    let kind = match parse_kind(q.kind.as_deref(), None) {
        Ok(k) => k,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let result = payload::view_json(&state.cache, &id, &tag, kind, &q.path);
    respond(&state, &id, result)
}

#[derive(Debug, Deserialize)]
struct DiffQuery {
    base: Option<String>,
    head: Option<String>,
    kind: Option<String>,
    #[serde(default)]
    path: String,
}

async fn get_diff(
    State(state): State<Arc<ServiceState>>,
    Path(id): Path<String>,
    Query(q): Query<DiffQuery>,
) -> Response {
    let kind = match parse_kind(q.kind.as_deref(), Some(ViewKind::Directory)) {
        Ok(k) => k,
        Err(e) => return error(StatusCode::BAD_REQUEST, e),
    };
    let (Some(base), Some(head)) = (q.base, q.head) else {
        return error(
            StatusCode::BAD_REQUEST,
            "query parameters 'base' and 'head' are required",
        );
    };
    let result = payload::diff_json(&state.cache, &id, &base, &head, kind, &q.path);
    respond(&state, &id, result)
}

async fn get_cohesion(
    State(state): State<Arc<ServiceState>>,
    Path((id, tag)): Path<(String, String)>,
) -> Response {
    let result = payload::cohesion_json(&state.cache, &id, &tag);
    respond(&state, &id, result)
}

/// `None` allows any origin.
pub fn cors(origin: Option<&str>) -> CorsLayer {
    let layer = CorsLayer::new()
        .allow_methods(tower_http::cors::Any)
        .allow_headers(tower_http::cors::Any);
    match origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => layer.allow_origin(AllowOrigin::exact(o)),
        None => layer.allow_origin(tower_http::cors::Any),
    }
}

pub fn router(state: Arc<ServiceState>, cors: CorsLayer) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/repos", get(list_repos).post(post_repo))
        .route("/repos/:id", get(get_repo))
        .route("/repos/:id/tags", get(get_tags))
        .route("/repos/:id/tags/:tag/tree", get(get_tree))
        .route("/repos/:id/tags/:tag/view", get(get_view))
        .route("/repos/:id/tags/:tag/cohesion", get(get_cohesion))
        .route("/repos/:id/diff", get(get_diff))
        .layer(cors)
        .with_state(state)
}

/// Serves until interrupted. Binding failures are returned before anything
/// is served.
pub async fn serve(
    cache: CacheLayout,
    addr: SocketAddr,
    cors_origin: Option<String>,
    analyze_jobs: Option<usize>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!(
        "serving {} on http://{}",
        cache.root().display(),
        listener.local_addr()?
    );
    let app = router(
        ServiceState::new(cache, analyze_jobs),
        cors(cors_origin.as_deref()),
    );
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
