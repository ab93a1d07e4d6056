//! Projects, revisions, the solve queue and artifacts, independent of HTTP.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use modsynth_core::assembler::assemble;
use modsynth_core::component::{
    load_catalog, parse_component_value, to_canonical_json, validate_component, Diagnostic,
};
use modsynth_core::export::{export, ExportFormat, MeshCache};
use modsynth_core::pipeline::{check_request, program_for, solve_with, ResultRow, ResultsDocument, SolveError};
use modsynth_core::repo_gen::RepoGenError;
use modsynth_core::taxonomy::{Taxonomy, TaxonomyDoc};
use modsynth_core::{Catalog, ComponentSpec, Count, Request};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::sync::mpsc;

use crate::error::ServiceError;
use crate::store::DocumentStore;

const PROJECTS: &str = "projects";
const REVISIONS: &str = "revisions";
const REQUESTS: &str = "requests";
const RESULTS: &str = "results";
const ARTIFACTS: &str = "artifacts";

#[derive(Debug, Clone)]
pub struct Config {
    pub expansion_cap: u64,
    pub page_size: usize,
    /// Directory served at `/`; a placeholder page when unset.
    pub ui_dir: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config { expansion_cap: modsynth_core::pipeline::DEFAULT_EXPANSION_CAP, page_size: 50, ui_dir: None }
    }
}

/// Persisted form of one catalog revision.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CatalogDoc {
    #[serde(default)]
    pub taxonomies: Vec<Taxonomy>,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
    /// Directory that relative mesh references resolve against.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<PathBuf>,
}

impl CatalogDoc {
    fn of(catalog: &Catalog) -> Self {
        CatalogDoc {
            taxonomies: catalog.taxonomies().to_vec(),
            components: catalog.components().cloned().collect(),
            root: catalog.root().map(PathBuf::from),
        }
    }

    fn into_catalog(self) -> Result<Catalog, ServiceError> {
        let catalog =
            Catalog::new(self.taxonomies, self.components).map_err(|e| ServiceError::validation(e.to_string()))?;
        Ok(match self.root {
            Some(r) => catalog.with_root(r),
            None => catalog,
        })
    }
}

/// Body of `POST /projects`: either a server-side catalog directory or
/// inline documents.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateProject {
    #[serde(default)]
    pub catalog_path: Option<PathBuf>,
    #[serde(default)]
    pub taxonomies: Vec<Taxonomy>,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Queued,
    Solving,
    Done,
    Failed,
}

impl Status {
    fn in_flight(self) -> bool {
        matches!(self, Status::Queued | Status::Solving)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: Count,
    pub truncated: bool,
    pub results: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: String,
    /// Catalog revision the request is pinned to.
    pub revision: usize,
    pub request: Request,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProjectDoc {
    id: String,
    revisions: usize,
}

struct RequestEntry {
    record: RequestRecord,
    rows: Vec<ResultRow>,
    /// Canonical results document once the solve is done.
    document: Option<Arc<String>>,
}

struct Project {
    id: String,
    revisions: Vec<Arc<Catalog>>,
    requests: Vec<RequestEntry>,
}

impl Project {
    fn current(&self) -> &Arc<Catalog> {
        self.revisions.last().expect("projects have at least one revision")
    }

    fn busy(&self) -> bool {
        self.requests.iter().any(|r| r.record.status.in_flight())
    }

    fn request_index(&self, rid: &str) -> Result<usize, ServiceError> {
        self.requests
            .iter()
            .position(|r| r.record.id == rid)
            .ok_or_else(|| ServiceError::NotFound(format!("request `{rid}`")))
    }
}

struct ProjectHandle {
    state: Mutex<Project>,
    jobs: mpsc::UnboundedSender<usize>,
}

impl ProjectHandle {
    fn lock(&self) -> MutexGuard<'_, Project> {
        self.state.lock().expect("project lock poisoned")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultsPage {
    pub status: Status,
    pub count: Option<Count>,
    pub truncated: Option<bool>,
    pub page: usize,
    pub page_size: usize,
    pub total_rows: usize,
    pub rows: Vec<ResultRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArtifactRef {
    pub id: String,
    pub index: usize,
    pub url: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub struct App {
    store: Arc<dyn DocumentStore>,
    config: Config,
    projects: Mutex<BTreeMap<String, Arc<ProjectHandle>>>,
    meshes: Arc<MeshCache>,
}

fn key(pid: &str, rest: &str) -> String {
    format!("{pid}-{rest}.json")
}

fn decode<T: serde::de::DeserializeOwned>(bytes: &[u8], what: &str) -> Result<T, ServiceError> {
    serde_json::from_slice(bytes).map_err(|e| ServiceError::Internal(format!("corrupt {what}: {e}")))
}

fn persist_record(store: &dyn DocumentStore, pid: &str, record: &RequestRecord) -> Result<(), ServiceError> {
    store.put(REQUESTS, &key(pid, &record.id), to_canonical_json(record).as_bytes())?;
    Ok(())
}

impl App {
    /// Opens `store`, reloading projects and re-queueing solves that were
    /// in flight. Must run inside a Tokio runtime.
    pub fn open(store: Arc<dyn DocumentStore>, config: Config) -> Result<Arc<App>, ServiceError> {
        let app =
            Arc::new(App { store, config, projects: Mutex::new(BTreeMap::new()), meshes: Arc::new(MeshCache::new()) });
        for k in app.store.list(PROJECTS)? {
            let bytes = app.store.get(PROJECTS, &k)?.unwrap_or_default();
            let doc: ProjectDoc = decode(&bytes, &k)?;
            app.load_project(doc)?;
        }
        Ok(app)
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    fn load_project(&self, doc: ProjectDoc) -> Result<(), ServiceError> {
        let mut revisions = Vec::new();
        for n in 0..doc.revisions {
            let k = key(&doc.id, &n.to_string());
            let bytes = self
                .store
                .get(REVISIONS, &k)?
                .ok_or_else(|| ServiceError::Internal(format!("missing revision {k}")))?;
            revisions.push(Arc::new(decode::<CatalogDoc>(&bytes, &k)?.into_catalog()?));
        }
        let prefix = format!("{}-", doc.id);
        let mut records: Vec<RequestRecord> = Vec::new();
        for k in self.store.list(REQUESTS)?.into_iter().filter(|k| k.starts_with(&prefix)) {
            let bytes = self.store.get(REQUESTS, &k)?.unwrap_or_default();
            records.push(decode(&bytes, &k)?);
        }
        records.sort_by_key(|r| r.id.trim_start_matches('r').parse::<usize>().unwrap_or(usize::MAX));
        let mut requests = Vec::new();
        let mut pending = Vec::new();
        for (i, mut record) in records.into_iter().enumerate() {
            let (mut rows, mut document) = (Vec::new(), None);
            match record.status {
                Status::Done => {
                    let bytes = self.store.get(RESULTS, &key(&doc.id, &record.id))?.unwrap_or_default();
                    let text = String::from_utf8(bytes).map_err(|e| ServiceError::Internal(e.to_string()))?;
                    rows = decode::<ResultsDocument>(text.as_bytes(), "results")?.results;
                    document = Some(Arc::new(text));
                }
                Status::Queued | Status::Solving => {
                    record.status = Status::Queued;
                    pending.push(i);
                }
                Status::Failed => {}
            }
            requests.push(RequestEntry { record, rows, document });
        }
        let handle = self.spawn_project(Project { id: doc.id.clone(), revisions, requests });
        for i in pending {
            let _ = handle.jobs.send(i);
        }
        self.projects.lock().expect("registry poisoned").insert(doc.id, handle);
        Ok(())
    }

    fn spawn_project(&self, project: Project) -> Arc<ProjectHandle> {
        let (tx, mut rx) = mpsc::unbounded_channel::<usize>();
        let handle = Arc::new(ProjectHandle { state: Mutex::new(project), jobs: tx });
        let worker = Arc::downgrade(&handle);
        let store = self.store.clone();
        let cap = self.config.expansion_cap;
        tokio::spawn(async move {
            while let Some(index) = rx.recv().await {
                let Some(handle) = worker.upgrade() else { break };
                let store = store.clone();
                let _ = tokio::task::spawn_blocking(move || run_job(&*store, &handle, index, cap)).await;
            }
        });
        handle
    }

    fn project(&self, pid: &str) -> Result<Arc<ProjectHandle>, ServiceError> {
        self.projects
            .lock()
            .expect("registry poisoned")
            .get(pid)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("project `{pid}`")))
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.lock().expect("registry poisoned").keys().cloned().collect()
    }

    pub fn create_project(&self, body: CreateProject) -> Result<Value, ServiceError> {
        let catalog = match body.catalog_path {
            Some(path) => {
                if !body.taxonomies.is_empty() || !body.components.is_empty() {
                    return Err(ServiceError::validation("give either catalog_path or inline documents"));
                }
                load_catalog(&[&path]).map_err(|e| ServiceError::validation(e.to_string()))?.with_root(path)
            }
            None => {
                Catalog::new(body.taxonomies, body.components).map_err(|e| ServiceError::validation(e.to_string()))?
            }
        };
        let errors: Vec<Diagnostic> = catalog
            .components()
            .flat_map(|c| {
                validate_component(&catalog, c)
                    .into_iter()
                    .filter(Diagnostic::is_error)
                    .map(|d| Diagnostic { pointer: format!("/components/{}{}", c.id, d.pointer), ..d })
            })
            .collect();
        if !errors.is_empty() {
            return Err(ServiceError::Validation {
                message: "catalog has errors".into(),
                details: Some(json!(errors)),
            });
        }
        let mut registry = self.projects.lock().expect("registry poisoned");
        let mut n = registry.len() + 1;
        while registry.contains_key(&format!("p{n}")) {
            n += 1;
        }
        let pid = format!("p{n}");
        self.store.put(REVISIONS, &key(&pid, "0"), to_canonical_json(&CatalogDoc::of(&catalog)).as_bytes())?;
        self.store.put(
            PROJECTS,
            &format!("{pid}.json"),
            to_canonical_json(&ProjectDoc { id: pid.clone(), revisions: 1 }).as_bytes(),
        )?;
        let handle =
            self.spawn_project(Project { id: pid.clone(), revisions: vec![Arc::new(catalog)], requests: Vec::new() });
        registry.insert(pid.clone(), handle);
        Ok(json!({"id": pid, "revision": 0}))
    }

    pub fn project_summary(&self, pid: &str) -> Result<Value, ServiceError> {
        let handle = self.project(pid)?;
        let p = handle.lock();
        let catalog = p.current();
        Ok(json!({
            "id": p.id,
            "revision": p.revisions.len() - 1,
            "taxonomies": catalog.taxonomies().iter().map(TaxonomyDoc::from).collect::<Vec<_>>(),
            "components": catalog.components().map(|c| c.id.clone()).collect::<Vec<_>>(),
            "requests": p.requests.iter().map(|r| &r.record).collect::<Vec<_>>(),
        }))
    }

    /// Applies `edit` to the current catalog as a new revision.
    fn revise(
        &self,
        pid: &str,
        edit: impl FnOnce(&Catalog) -> Result<Catalog, ServiceError>,
    ) -> Result<usize, ServiceError> {
        let handle = self.project(pid)?;
        let mut p = handle.lock();
        if p.busy() {
            return Err(ServiceError::conflict("a solve is queued or running on this project"));
        }
        let next = edit(p.current())?;
        let n = p.revisions.len();
        self.store.put(REVISIONS, &key(pid, &n.to_string()), to_canonical_json(&CatalogDoc::of(&next)).as_bytes())?;
        self.store.put(
            PROJECTS,
            &format!("{pid}.json"),
            to_canonical_json(&ProjectDoc { id: pid.to_string(), revisions: n + 1 }).as_bytes(),
        )?;
        p.revisions.push(Arc::new(next));
        Ok(n)
    }

    /// Adds or replaces the taxonomy with the document's name.
    pub fn put_taxonomy(&self, pid: &str, doc: TaxonomyDoc) -> Result<usize, ServiceError> {
        let taxonomy = Taxonomy::try_from(doc).map_err(|e| ServiceError::validation(e.to_string()))?;
        self.revise(pid, |catalog| {
            let mut parts: Vec<Taxonomy> =
                catalog.taxonomies().iter().filter(|t| t.name() != taxonomy.name()).cloned().collect();
            parts.push(taxonomy);
            let next = catalog.with_taxonomies(parts).map_err(|e| ServiceError::validation(e.to_string()))?;
            let dropped: Vec<&String> =
                catalog.taxonomy().nodes().iter().filter(|n| !next.taxonomy().contains(n)).collect();
            let users: Vec<String> = dropped.iter().flat_map(|n| catalog.components_referencing(n)).collect();
            if !users.is_empty() {
                return Err(referenced(&dropped.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", "), users));
            }
            Ok(next)
        })
    }

    pub fn delete_taxonomy_node(&self, pid: &str, node: &str) -> Result<usize, ServiceError> {
        self.revise(pid, |catalog| {
            if !catalog.taxonomy().contains(node) {
                return Err(ServiceError::NotFound(format!("taxonomy node `{node}`")));
            }
            let users = catalog.components_referencing(node);
            if !users.is_empty() {
                return Err(referenced(node, users));
            }
            let parts = catalog
                .taxonomies()
                .iter()
                .map(|t| if t.contains(node) { t.without_node(node) } else { Ok(t.clone()) })
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ServiceError::validation(e.to_string()))?;
            catalog.with_taxonomies(parts).map_err(|e| ServiceError::validation(e.to_string()))
        })
    }

    /// Returns the revision and any warnings.
    pub fn put_component(&self, pid: &str, cid: &str, body: Value) -> Result<(usize, Vec<Diagnostic>), ServiceError> {
        let spec = parse_component_value(body).map_err(|e| ServiceError::validation(e.to_string()))?;
        if spec.id != cid {
            return Err(ServiceError::validation(format!("body id `{}` does not match path `{cid}`", spec.id)));
        }
        let mut warnings = Vec::new();
        let rev = self.revise(pid, |catalog| {
            let next = catalog.with_component(spec.clone());
            let diags = validate_component(&next, &spec);
            if diags.iter().any(Diagnostic::is_error) {
                return Err(ServiceError::Validation {
                    message: format!("component `{cid}` is invalid"),
                    details: Some(json!(diags)),
                });
            }
            warnings = diags;
            Ok(next)
        })?;
        Ok((rev, warnings))
    }

    pub fn get_component(&self, pid: &str, cid: &str) -> Result<ComponentSpec, ServiceError> {
        let handle = self.project(pid)?;
        let p = handle.lock();
        p.current().component(cid).cloned().ok_or_else(|| ServiceError::NotFound(format!("component `{cid}`")))
    }

    pub fn delete_component(&self, pid: &str, cid: &str) -> Result<usize, ServiceError> {
        self.revise(pid, |catalog| {
            if catalog.component(cid).is_none() {
                return Err(ServiceError::NotFound(format!("component `{cid}`")));
            }
            Ok(catalog.without_component(cid))
        })
    }

    /// Validates and queues `request` against the current revision.
    pub fn submit(&self, pid: &str, request: Request) -> Result<RequestRecord, ServiceError> {
        let handle = self.project(pid)?;
        let mut p = handle.lock();
        let revision = p.revisions.len() - 1;
        check_request(p.current(), &request, self.config.expansion_cap).map_err(|e| match e {
            SolveError::Expansion(RepoGenError::ExpansionTooLarge { size, cap }) => {
                ServiceError::TooLarge { size, cap }
            }
            other => ServiceError::validation(other.to_string()),
        })?;
        let record = RequestRecord {
            id: format!("r{}", p.requests.len() + 1),
            revision,
            request,
            status: Status::Queued,
            summary: None,
            error: None,
        };
        persist_record(&*self.store, pid, &record)?;
        p.requests.push(RequestEntry { record: record.clone(), rows: Vec::new(), document: None });
        handle.jobs.send(p.requests.len() - 1).map_err(|_| ServiceError::Internal("solve queue closed".into()))?;
        Ok(record)
    }

    pub fn request(&self, pid: &str, rid: &str) -> Result<RequestRecord, ServiceError> {
        let handle = self.project(pid)?;
        let p = handle.lock();
        let i = p.request_index(rid)?;
        Ok(p.requests[i].record.clone())
    }

    /// Polls until the request leaves the queue or `timeout` passes.
    pub async fn wait(&self, pid: &str, rid: &str, timeout: Duration) -> Result<RequestRecord, ServiceError> {
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            let record = self.request(pid, rid)?;
            if !record.status.in_flight() || tokio::time::Instant::now() >= deadline {
                return Ok(record);
            }
            tokio::time::sleep(Duration::from_millis(5)).await;
        }
    }

    pub fn results_page(
        &self,
        pid: &str,
        rid: &str,
        page: usize,
        page_size: Option<usize>,
    ) -> Result<ResultsPage, ServiceError> {
        let page_size = page_size.unwrap_or(self.config.page_size);
        if page_size == 0 || page_size > 1000 {
            return Err(ServiceError::validation("page_size must be between 1 and 1000"));
        }
        let handle = self.project(pid)?;
        let p = handle.lock();
        let entry = &p.requests[p.request_index(rid)?];
        let start = page.saturating_mul(page_size).min(entry.rows.len());
        let end = (start + page_size).min(entry.rows.len());
        Ok(ResultsPage {
            status: entry.record.status,
            count: entry.record.summary.as_ref().map(|s| s.count),
            truncated: entry.record.summary.as_ref().map(|s| s.truncated),
            page,
            page_size,
            total_rows: entry.rows.len(),
            rows: entry.rows[start..end].to_vec(),
        })
    }

    /// The canonical results document, byte-identical to the CLI's output.
    pub fn results_document(&self, pid: &str, rid: &str) -> Result<Arc<String>, ServiceError> {
        let handle = self.project(pid)?;
        let p = handle.lock();
        let entry = &p.requests[p.request_index(rid)?];
        entry.document.clone().ok_or_else(|| match entry.record.status {
            Status::Failed => ServiceError::conflict(format!("request `{rid}` failed")),
            _ => ServiceError::conflict(format!("request `{rid}` has not finished")),
        })
    }

    fn row(&self, pid: &str, rid: &str, index: usize) -> Result<(ResultRow, usize, Arc<Catalog>), ServiceError> {
        let handle = self.project(pid)?;
        let p = handle.lock();
        let entry = &p.requests[p.request_index(rid)?];
        let row = entry
            .rows
            .get(index)
            .cloned()
            .ok_or_else(|| ServiceError::NotFound(format!("result {index} of `{rid}`")))?;
        Ok((row, entry.record.revision, p.revisions[entry.record.revision].clone()))
    }

    /// Assembles and exports one result. Ids depend only on the inputs, so
    /// repeated calls return the same artifact.
    pub fn assemble_result(
        &self,
        pid: &str,
        rid: &str,
        index: usize,
        format: ExportFormat,
    ) -> Result<ArtifactRef, ServiceError> {
        let (row, revision, catalog) = self.row(pid, rid, index)?;
        let id = artifact_id(pid, rid, index, revision, format);
        let program = program_for(&row, &catalog).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let scene = assemble(&program, &catalog).map_err(|e| ServiceError::Internal(e.to_string()))?;
        let out = export(&scene, format, &catalog, &self.meshes);
        if self.store.get(ARTIFACTS, &id)?.is_none() {
            self.store.put(ARTIFACTS, &id, &out.bytes)?;
        }
        Ok(ArtifactRef { url: format!("/artifacts/{id}"), id, index, warnings: out.warnings })
    }

    pub fn assemble_all(&self, pid: &str, rid: &str, format: ExportFormat) -> Result<Vec<ArtifactRef>, ServiceError> {
        let rows = {
            let handle = self.project(pid)?;
            let p = handle.lock();
            p.requests[p.request_index(rid)?].rows.len()
        };
        (0..rows).map(|i| self.assemble_result(pid, rid, i, format)).collect()
    }

    pub fn artifact(&self, id: &str) -> Result<(Vec<u8>, &'static str), ServiceError> {
        let media = if id.ends_with(".glb") { ExportFormat::Gltf } else { ExportFormat::SceneJson }.media_type();
        let bytes = self
            .store
            .get(ARTIFACTS, id)
            .ok()
            .flatten()
            .ok_or_else(|| ServiceError::NotFound(format!("artifact `{id}`")))?;
        Ok((bytes, media))
    }
}

fn referenced(node: &str, components: Vec<String>) -> ServiceError {
    ServiceError::Conflict { message: format!("taxonomy node `{node}` is referenced by components"), components }
}

fn artifact_id(pid: &str, rid: &str, index: usize, revision: usize, format: ExportFormat) -> String {
    let digest = Sha256::digest(format!("{pid}\0{rid}\0{index}\0{revision}\0{format}").as_bytes());
    format!("{}.{}", hex::encode(&digest[..16]), format.extension())
}

fn run_job(store: &dyn DocumentStore, handle: &ProjectHandle, index: usize, cap: u64) {
    let (pid, catalog, request) = {
        let mut p = handle.lock();
        let pid = p.id.clone();
        let revision = p.requests[index].record.revision;
        let catalog = p.revisions[revision].clone();
        let entry = &mut p.requests[index];
        entry.record.status = Status::Solving;
        entry.rows.clear();
        let _ = persist_record(store, &pid, &entry.record);
        (pid, catalog, entry.record.request.clone())
    };
    let outcome = solve_with(&catalog, &request, cap, |row| {
        handle.lock().requests[index].rows.push(row.clone());
    });
    let mut p = handle.lock();
    let entry = &mut p.requests[index];
    match outcome {
        Ok(out) => {
            let text = out.document.to_json();
            match store.put(RESULTS, &key(&pid, &entry.record.id), text.as_bytes()) {
                Ok(()) => {
                    entry.record.status = Status::Done;
                    entry.record.summary = Some(Summary {
                        count: out.document.count,
                        truncated: out.document.truncated,
                        results: out.document.results.len(),
                        elapsed_ms: out.elapsed.as_secs_f64() * 1e3,
                    });
                    entry.rows = out.document.results;
                    entry.document = Some(Arc::new(text));
                }
                Err(e) => {
                    entry.record.status = Status::Failed;
                    entry.record.error = Some(e.to_string());
                }
            }
        }
        Err(e) => {
            entry.record.status = Status::Failed;
            entry.record.error = Some(e.to_string());
        }
    }
    let _ = persist_record(store, &pid, &entry.record);
}
