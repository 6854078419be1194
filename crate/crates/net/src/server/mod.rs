//! Annotation HTTP service.
//!
//! Domain labelling:
//!
//! | route | |
//! |---|---|
//! | `GET /items?annotator=` | batch items the annotator has not labelled yet |
//! | `POST /labels` | one `DomainLabel`; 201, 409 `{"existing": ...}` or 422 `{"error": ...}` |
//! | `GET /progress?annotator=` | label counts |
//! | `GET /export?format=jsonl\|csv` | all labels sorted by `(segment_id, annotator)` |
//!
//! MQM/DA evaluation (only when an MQM batch is configured, 404 otherwise):
//! `GET /taxonomy`, `POST /mqm/score`, `GET /mqm/items?system=`,
//! `POST /mqm/evaluations`, `GET /mqm/export`.
//!
//! Anything else falls through to the static UI directory when one is set.

mod mqm;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::SecondsFormat;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::oneshot;
use tower_http::services::ServeDir;

use crisismine_core::threshold::{
    labels_to_csv, labels_to_jsonl, AnnotationBatch, DomainLabel, DomainLabelKind, LabelJournal, Submission,
};
use crisismine_core::{Error, Result};

pub use mqm::{parse_mqm_items_jsonl, MqmItem};

pub(crate) fn error_response(status: StatusCode, message: impl std::fmt::Display) -> Response {
    (status, Json(json!({ "error": message.to_string() }))).into_response()
}

fn internal(e: Error) -> Response {
    error_response(StatusCode::INTERNAL_SERVER_ERROR, e)
}

/// State behind the annotation API. Both journals are append-only files;
/// appends are serialized by their mutexes.
pub struct AnnotationService {
    batch: AnnotationBatch,
    journal: Mutex<LabelJournal>,
    mqm: Option<mqm::MqmTask>,
    ui_dir: Option<PathBuf>,
}

impl AnnotationService {
    /// Opens (or creates) the label journal. Journal entries for ids outside
    /// the batch are rejected.
    pub fn open(batch: AnnotationBatch, journal_path: &Path) -> Result<Self> {
        let journal = LabelJournal::open(journal_path)?;
        let stray: Vec<String> = journal
            .labels()
            .iter()
            .filter(|l| !batch.contains(&l.segment_id))
            .map(|l| l.segment_id.clone())
            .collect();
        if !stray.is_empty() {
            return Err(Error::Data(format!(
                "journal {} labels ids outside the batch: {}",
                journal_path.display(),
                stray.join(", ")
            )));
        }
        Ok(AnnotationService {
            batch,
            journal: Mutex::new(journal),
            mqm: None,
            ui_dir: None,
        })
    }

    pub fn with_mqm(mut self, items: Vec<MqmItem>, journal_path: &Path) -> Result<Self> {
        self.mqm = Some(mqm::MqmTask::open(items, journal_path)?);
        Ok(self)
    }

    pub fn with_ui_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.ui_dir = Some(dir.into());
        self
    }

    pub fn router(mut self) -> Router {
        let ui_dir = self.ui_dir.take();
        let router = Router::new()
            .route("/items", get(items))
            .route("/labels", post(submit_label))
            .route("/progress", get(progress))
            .route("/export", get(export))
            .merge(mqm::routes())
            .with_state(Arc::new(self));
        match ui_dir {
            Some(dir) => router.fallback_service(ServeDir::new(dir)),
            None => router,
        }
    }

    /// Labels sorted by `(segment_id, annotator)`.
    pub fn labels_sorted(&self) -> Vec<DomainLabel> {
        let mut labels = self.journal.lock().unwrap().labels().to_vec();
        labels.sort_by(|a, b| (&a.segment_id, &a.annotator).cmp(&(&b.segment_id, &b.annotator)));
        labels
    }
}

type Shared = Arc<AnnotationService>;

#[derive(Debug, Deserialize)]
struct AnnotatorQuery {
    annotator: Option<String>,
}

async fn items(State(s): State<Shared>, Query(q): Query<AnnotatorQuery>) -> Response {
    let journal = s.journal.lock().unwrap();
    let pending: Vec<_> = s
        .batch
        .items
        .iter()
        .filter(|it| match &q.annotator {
            Some(a) => journal.get(&it.segment_id, a).is_none(),
            None => !journal.labels().iter().any(|l| l.segment_id == it.segment_id),
        })
        .cloned()
        .collect();
    Json(pending).into_response()
}

async fn submit_label(State(s): State<Shared>, body: String) -> Response {
    let mut label: DomainLabel = match serde_json::from_str(&body) {
        Ok(l) => l,
        Err(e) => return error_response(StatusCode::UNPROCESSABLE_ENTITY, e),
    };
    if let Err(problem) = label.check() {
        return error_response(StatusCode::UNPROCESSABLE_ENTITY, problem);
    }
    if !s.batch.contains(&label.segment_id) {
        return error_response(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("`{}` is not in the annotation batch", label.segment_id),
        );
    }
    if label.timestamp.is_none() {
        label.timestamp = Some(chrono::Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true));
    }
    let outcome = s.journal.lock().unwrap().submit(label.clone());
    match outcome {
        Ok(Submission::Accepted) => (StatusCode::CREATED, Json(json!({ "accepted": label }))).into_response(),
        Ok(Submission::Conflict(existing)) => {
            (StatusCode::CONFLICT, Json(json!({ "existing": existing }))).into_response()
        }
        Err(e) => internal(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub total_items: usize,
    /// Items with at least one label.
    pub labelled_items: usize,
    pub labels: usize,
    pub in_domain: usize,
    pub out_of_domain: usize,
    pub by_annotator: BTreeMap<String, usize>,
    /// Items still pending for the queried annotator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<usize>,
}

async fn progress(State(s): State<Shared>, Query(q): Query<AnnotatorQuery>) -> Response {
    let journal = s.journal.lock().unwrap();
    let labels = journal.labels();
    let labelled: std::collections::HashSet<&str> = labels.iter().map(|l| l.segment_id.as_str()).collect();
    let mut by_annotator = BTreeMap::new();
    for l in labels {
        *by_annotator.entry(l.annotator.clone()).or_insert(0) += 1;
    }
    let pending = q.annotator.as_ref().map(|a| {
        s.batch
            .items
            .iter()
            .filter(|it| journal.get(&it.segment_id, a).is_none())
            .count()
    });
    Json(Progress {
        total_items: s.batch.items.len(),
        labelled_items: labelled.len(),
        labels: labels.len(),
        in_domain: labels.iter().filter(|l| l.label == DomainLabelKind::InDomain).count(),
        out_of_domain: labels.iter().filter(|l| l.label == DomainLabelKind::OutOfDomain).count(),
        by_annotator,
        pending,
    })
    .into_response()
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(State(s): State<Shared>, Query(q): Query<ExportQuery>) -> Response {
    let labels = s.labels_sorted();
    match q.format.as_deref().unwrap_or("jsonl") {
        "jsonl" => ([(header::CONTENT_TYPE, "application/x-ndjson")], labels_to_jsonl(&labels)).into_response(),
        "csv" => ([(header::CONTENT_TYPE, "text/csv")], labels_to_csv(&labels)).into_response(),
        other => error_response(StatusCode::BAD_REQUEST, format!("unknown export format `{other}`")),
    }
}

/// A server running on its own thread and tokio runtime.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Binds `addr` (port 0 picks a free port) and serves `router` until
    /// [`ServerHandle::shutdown`] or drop.
    pub fn spawn(router: Router, addr: SocketAddr) -> Result<Self> {
        let listener = std::net::TcpListener::bind(addr).map_err(|e| bind_error(addr, e))?;
        listener.set_nonblocking(true).map_err(|e| bind_error(addr, e))?;
        let addr = listener.local_addr().map_err(|e| bind_error(addr, e))?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::Builder::new()
            .name(format!("http-{addr}"))
            .spawn(move || {
                let rt = tokio::runtime::Builder::new_multi_thread()
                    .worker_threads(2)
                    .enable_all()
                    .build()?;
                rt.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener)?;
                    axum::serve(listener, router)
                        .with_graceful_shutdown(async {
                            rx.await.ok();
                        })
                        .await
                })
            })
            .map_err(|e| bind_error(addr, e))?;
        Ok(ServerHandle {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) -> Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> Result<()> {
        if let Some(tx) = self.shutdown.take() {
            tx.send(()).ok();
        }
        match self.thread.take().map(JoinHandle::join) {
            Some(Ok(Err(e))) => Err(bind_error(self.addr, e)),
            Some(Err(_)) => Err(Error::Data(format!("server thread for {} panicked", self.addr))),
            _ => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

fn bind_error(addr: SocketAddr, e: std::io::Error) -> Error {
    Error::io(format!("<socket {addr}>"), e)
}

/// Serves `router` on the current thread until Ctrl-C. `on_bound` receives
/// the bound address before the first request is accepted.
pub fn serve_until_interrupted(router: Router, addr: SocketAddr, on_bound: impl FnOnce(SocketAddr)) -> Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| bind_error(addr, e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        on_bound(listener.local_addr()?);
        axum::serve(listener, router)
            .with_graceful_shutdown(async {
                tokio::signal::ctrl_c().await.ok();
            })
            .await
    })
    .map_err(|e| bind_error(addr, e))
}
