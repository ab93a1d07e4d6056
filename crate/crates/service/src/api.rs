use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{delete, get, post, put};
use axum::{Json, Router};
use modsynth_core::export::ExportFormat;
use modsynth_core::taxonomy::TaxonomyDoc;
use modsynth_core::Request;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::services::ServeDir;

use crate::app::{App, CreateProject};
use crate::error::ServiceError;

type Shared = State<Arc<App>>;
type ApiResult<T> = Result<T, ServiceError>;

const PLACEHOLDER: &str = "<!doctype html><title>modsynth</title><p>modsynth service is running. \
No UI bundle is configured; use the REST API under <code>/projects</code>.</p>\n";

pub fn router(app: Arc<App>) -> Router {
    let api = Router::new()
        .route("/projects", post(create_project))
        .route("/projects/{pid}", get(get_project))
        .route("/projects/{pid}/taxonomy", put(put_taxonomy))
        .route("/projects/{pid}/taxonomy/nodes/{node}", delete(delete_node))
        .route("/projects/{pid}/components/{cid}", put(put_component).get(get_component).delete(delete_component))
        .route("/projects/{pid}/requests", post(submit))
        .route("/projects/{pid}/requests/{rid}", get(get_request))
        .route("/projects/{pid}/requests/{rid}/results", get(results_page))
        .route("/projects/{pid}/requests/{rid}/document", get(results_document))
        .route("/projects/{pid}/requests/{rid}/results/{index}/assemble", post(assemble_one))
        .route("/projects/{pid}/requests/{rid}/assemble-all", post(assemble_all))
        .route("/artifacts/{id}", get(artifact));
    let api = match app.config().ui_dir.clone() {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER) })),
    };
    api.with_state(app)
}

/// JSON body parsing with our error shape instead of axum's plain-text one.
fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let text = if body.is_empty() { &b"{}"[..] } else { &body[..] };
    let de = &mut serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let message = if path == "." { e.inner().to_string() } else { format!("{path}: {}", e.inner()) };
        ServiceError::validation(message)
    })
}

async fn create_project(State(app): Shared, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let body: CreateProject = parse(&body)?;
    Ok((StatusCode::CREATED, Json(app.create_project(body)?)))
}

async fn get_project(State(app): Shared, Path(pid): Path<String>) -> ApiResult<Json<Value>> {
    Ok(Json(app.project_summary(&pid)?))
}

async fn put_taxonomy(State(app): Shared, Path(pid): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let doc: TaxonomyDoc = parse(&body)?;
    Ok(Json(json!({"revision": app.put_taxonomy(&pid, doc)?})))
}

async fn delete_node(State(app): Shared, Path((pid, node)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({"revision": app.delete_taxonomy_node(&pid, &node)?})))
}

async fn put_component(
    State(app): Shared,
    Path((pid, cid)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let value: Value = parse(&body)?;
    let (revision, warnings) = app.put_component(&pid, &cid, value)?;
    Ok(Json(json!({"revision": revision, "warnings": warnings})))
}

async fn get_component(State(app): Shared, Path((pid, cid)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    Ok(Json(json!(app.get_component(&pid, &cid)?)))
}

async fn delete_component(State(app): Shared, Path((pid, cid)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    Ok(Json(json!({"revision": app.delete_component(&pid, &cid)?})))
}

async fn submit(State(app): Shared, Path(pid): Path<String>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let request: Request = parse(&body)?;
    Ok((StatusCode::ACCEPTED, Json(json!(app.submit(&pid, request)?))))
}

async fn get_request(State(app): Shared, Path((pid, rid)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    Ok(Json(json!(app.request(&pid, &rid)?)))
}

#[derive(Debug, Deserialize)]
struct PageQuery {
    #[serde(default)]
    page: usize,
    page_size: Option<usize>,
}

async fn results_page(
    State(app): Shared,
    Path((pid, rid)): Path<(String, String)>,
    Query(q): Query<PageQuery>,
) -> ApiResult<Json<Value>> {
    Ok(Json(json!(app.results_page(&pid, &rid, q.page, q.page_size)?)))
}

async fn results_document(State(app): Shared, Path((pid, rid)): Path<(String, String)>) -> ApiResult<Response> {
    let doc = app.results_document(&pid, &rid)?;
    Ok(([(header::CONTENT_TYPE, "application/json")], doc.as_str().to_owned()).into_response())
}

#[derive(Debug, Deserialize)]
struct FormatQuery {
    format: Option<String>,
}

impl FormatQuery {
    fn format(&self) -> ApiResult<ExportFormat> {
        self.format.as_deref().unwrap_or("scene-json").parse().map_err(ServiceError::validation)
    }
}

async fn assemble_one(
    State(app): Shared,
    Path((pid, rid, index)): Path<(String, String, usize)>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Json<Value>> {
    let format = q.format()?;
    let out = tokio::task::spawn_blocking(move || app.assemble_result(&pid, &rid, index, format))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(json!(out)))
}

async fn assemble_all(
    State(app): Shared,
    Path((pid, rid)): Path<(String, String)>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Json<Value>> {
    let format = q.format()?;
    let out = tokio::task::spawn_blocking(move || app.assemble_all(&pid, &rid, format))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(json!({"artifacts": out})))
}

async fn artifact(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let (bytes, media) = app.artifact(&id)?;
    Ok(([(header::CONTENT_TYPE, media)], bytes).into_response())
}
