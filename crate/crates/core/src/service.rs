// SPDX-License-Identifier: MIT
//! Local JSON-over-HTTP service.
//!
//! Models live in a directory, one `<name>.cdag` file each. Every response
//! about a stored model carries its content hash (SHA-256 of the file) in the
//! `ETag` header; a `PUT` with an `If-Match` header only succeeds while that
//! hash is still current.
//!
//! | method | path | body |
//! |--------|------|------|
//! | GET  | `/models` | |
//! | GET  | `/models/{name}` | |
//! | PUT  | `/models/{name}` | DSL text or JSON document |
//! | POST | `/models/{name}/analyze` | `{exposure?, outcome?}` |
//! | POST | `/models/{name}/dsep` | `{x, y, given?}` |
//! | POST | `/models/{name}/implications` | `{scope?, max_given?}` |
//! | POST | `/models/{name}/requirements` | `{exposure?, outcome?}` |
//! | GET  | `/models/{name}/export?format=dot\|json\|dsl` | |
//!
//! Errors are `{"error": {"code": ..., "message": ..., ...}}` with status 400
//! (invalid model or request), 404 (unknown model) or 409 (stale hash).

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::api;
use crate::dsl::{is_identifier, serialize, DslError, Format, ModelDocument};
use crate::graph::{to_dot, CausalDag, GraphError};
use crate::Error;

pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Store {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl Store {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{name}.cdag"))
    }

    fn lock(&self, name: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.locks
            .lock()
            .expect("lock table poisoned")
            .entry(name.to_string())
            .or_default()
            .clone()
    }
}

type Shared = Arc<Store>;

/// Error response body.
struct ApiError {
    status: StatusCode,
    body: serde_json::Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: json!({ "error": { "code": code, "message": message.into() } }),
        }
    }

    fn with(mut self, key: &str, value: serde_json::Value) -> Self {
        self.body["error"][key] = value;
        self
    }

    fn not_found(name: &str) -> Self {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_model",
            format!("no model named `{name}`"),
        )
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, json_response(api::to_json(&self.body))).into_response()
    }
}

fn dsl_error(e: &DslError) -> ApiError {
    let mut err = ApiError::new(StatusCode::BAD_REQUEST, e.code(), e.message());
    if let Some(p) = e.position {
        err = err
            .with("line", json!(p.line))
            .with("column", json!(p.column));
    }
    if let Some(id) = e.identifier() {
        err = err.with("identifier", json!(id));
    }
    err
}

fn graph_error(e: &GraphError) -> ApiError {
    let err = ApiError::new(StatusCode::BAD_REQUEST, graph_code(e), e.to_string());
    match e {
        GraphError::Cycle { witness } => err.with("witness", json!(witness)),
        GraphError::UnknownNode(n) | GraphError::DanglingEndpoint(n) => {
            err.with("identifier", json!(n))
        }
        _ => err,
    }
}

fn graph_code(e: &GraphError) -> &'static str {
    match e {
        GraphError::Cycle { .. } => "cycle",
        GraphError::DanglingEndpoint(_) => "unknown_endpoint",
        GraphError::UnknownNode(_) => "unknown_node",
        GraphError::DisturbanceWithParent { .. } => "disturbance_with_parent",
        GraphError::DuplicateNode(_) => "duplicate_node",
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        if let Some(g) = e.graph() {
            return graph_error(g);
        }
        match &e {
            Error::Dsl(d) => dsl_error(d),
            Error::Io(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string()),
            _ => ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()),
        }
    }
}

fn json_response(body: String) -> Response {
    let mut r = body.into_response();
    r.headers_mut().insert(
        header::CONTENT_TYPE,
        HeaderValue::from_static("application/json"),
    );
    r
}

fn with_hash(mut r: Response, hash: &str) -> Response {
    if let Ok(v) = HeaderValue::from_str(&format!("\"{hash}\"")) {
        r.headers_mut().insert(header::ETAG, v);
    }
    r
}

fn check_name(name: &str) -> Result<(), ApiError> {
    if is_identifier(name) {
        Ok(())
    } else {
        Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_name",
            format!("`{name}` is not a valid model name"),
        ))
    }
}

struct Loaded {
    doc: ModelDocument,
    dag: CausalDag,
    hash: String,
}

async fn read_model(store: &Store, name: &str) -> Result<(String, String), ApiError> {
    check_name(name)?;
    let text = match tokio::fs::read_to_string(store.path(name)).await {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(ApiError::not_found(name))
        }
        Err(e) => return Err(Error::Io(e).into()),
    };
    let hash = content_hash(text.as_bytes());
    Ok((text, hash))
}

async fn load(store: &Store, name: &str) -> Result<Loaded, ApiError> {
    let (text, hash) = read_model(store, name).await?;
    let doc = ModelDocument::parse_any(&text).map_err(|e| dsl_error(&e))?;
    let dag = CausalDag::build(&doc).map_err(|e| graph_error(&e))?;
    Ok(Loaded { doc, dag, hash })
}

fn parse_body<T: for<'de> Deserialize<'de> + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))
}

#[derive(Serialize)]
struct ModelEntry {
    name: String,
    hash: String,
}

async fn list_models(State(store): State<Shared>) -> Result<Response, ApiError> {
    let mut entries = Vec::new();
    let mut dir = tokio::fs::read_dir(&store.dir).await.map_err(Error::Io)?;
    while let Some(entry) = dir.next_entry().await.map_err(Error::Io)? {
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("cdag") {
            continue;
        }
        let Some(name) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if !is_identifier(name) {
            continue;
        }
        let bytes = tokio::fs::read(&path).await.map_err(Error::Io)?;
        entries.push(ModelEntry {
            name: name.to_string(),
            hash: content_hash(&bytes),
        });
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(json_response(api::to_json(&json!({ "models": entries }))))
}

async fn get_model(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let body = json!({ "name": name, "hash": m.hash, "document": m.doc });
    Ok(with_hash(json_response(api::to_json(&body)), &m.hash))
}

fn if_match(headers: &HeaderMap) -> Option<String> {
    headers
        .get(header::IF_MATCH)
        .and_then(|v| v.to_str().ok())
        .map(|v| v.trim().trim_matches('"').to_string())
}

async fn put_model(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    check_name(&name)?;
    let text = std::str::from_utf8(&body).map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "invalid_utf8",
            "model body is not UTF-8",
        )
    })?;
    let doc = ModelDocument::parse_any(text).map_err(|e| dsl_error(&e))?;
    CausalDag::build(&doc).map_err(|e| graph_error(&e))?;
    let canonical = serialize(&doc, Format::Dsl);
    let new_hash = content_hash(canonical.as_bytes());

    let lock = store.lock(&name);
    let _guard = lock.lock().await;
    let current = match read_model(&store, &name).await {
        Ok((_, h)) => Some(h),
        Err(e) if e.status == StatusCode::NOT_FOUND => None,
        Err(e) => return Err(e),
    };
    if let Some(expected) = if_match(&headers) {
        if current.as_deref() != Some(expected.as_str()) {
            let err = ApiError::new(
                StatusCode::CONFLICT,
                "stale_hash",
                "the model changed since it was read",
            );
            return Err(err.with("current", json!(current)));
        }
    }
    write_atomically(&store.path(&name), canonical.as_bytes())
        .await
        .map_err(Error::Io)?;
    let status = if current.is_some() {
        StatusCode::OK
    } else {
        StatusCode::CREATED
    };
    let body = json!({ "name": name, "hash": new_hash });
    let mut r = with_hash(json_response(api::to_json(&body)), &new_hash);
    *r.status_mut() = status;
    Ok(r)
}

async fn write_atomically(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("cdag.tmp");
    tokio::fs::write(&tmp, bytes).await?;
    tokio::fs::rename(&tmp, path).await
}

async fn analyze(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let req: api::RolesRequest = parse_body(&body)?;
    let report = api::analyze(&m.dag, &req)?;
    Ok(with_hash(json_response(api::to_json(&report)), &m.hash))
}

async fn dsep(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let req: api::DsepRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "invalid_request", e.to_string()))?;
    let resp = api::dsep(&m.dag, &req)?;
    Ok(with_hash(json_response(api::to_json(&resp)), &m.hash))
}

async fn implications(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let req: api::ImplicationsRequest = parse_body(&body)?;
    let resp = api::implications(&m.dag, &req)?;
    Ok(with_hash(json_response(api::to_json(&resp)), &m.hash))
}

async fn requirements(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let req: api::RolesRequest = parse_body(&body)?;
    let resp = api::requirements(&m.dag, &req)?;
    Ok(with_hash(json_response(api::to_json(&resp)), &m.hash))
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn export(
    State(store): State<Shared>,
    UrlPath(name): UrlPath<String>,
    Query(q): Query<ExportQuery>,
) -> Result<Response, ApiError> {
    let m = load(&store, &name).await?;
    let (body, content_type) = match q.format.as_deref().unwrap_or("json") {
        "dot" => (to_dot(&m.dag), "text/vnd.graphviz"),
        "json" => (serialize(&m.doc, Format::Json), "application/json"),
        "dsl" => (serialize(&m.doc, Format::Dsl), "text/plain; charset=utf-8"),
        other => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "invalid_format",
                format!("unknown export format `{other}`; use dot, json or dsl"),
            ))
        }
    };
    let mut r = body.into_response();
    r.headers_mut()
        .insert(header::CONTENT_TYPE, HeaderValue::from_static(content_type));
    Ok(with_hash(r, &m.hash))
}

/// Routes over the models stored in `dir`.
pub fn router(dir: impl Into<PathBuf>) -> Router {
    let store = Arc::new(Store {
        dir: dir.into(),
        locks: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/models", get(list_models))
        .route("/models/{name}", get(get_model).put(put_model))
        .route("/models/{name}/analyze", post(analyze))
        .route("/models/{name}/dsep", post(dsep))
        .route("/models/{name}/implications", post(implications))
        .route("/models/{name}/requirements", post(requirements))
        .route("/models/{name}/export", get(export))
        .with_state(store)
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr, dir: PathBuf) -> std::io::Result<()> {
    std::fs::create_dir_all(&dir)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(dir)).await
}
