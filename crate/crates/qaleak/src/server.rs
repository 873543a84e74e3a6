//! HTTP API consumed by the annotation front end.
//!
//! ```text
//! GET  /api/sample                   sample metadata and progress
//! GET  /api/next?annotator=NAME      next item for NAME, 204 when done
//! GET  /api/item/{test_id}           one item with its candidates
//! POST /api/annotate                 record a verdict (201, 400, 404)
//! GET  /api/progress                 per-annotator counts
//! GET  /api/agreement?a=NAME&b=NAME  agreement and Cohen's kappa
//! ```
//!
//! Every mutation goes through [`AnnotationStore::append`] under one lock, so
//! writes are serialized and reads see a consistent snapshot.

use std::collections::BTreeMap;
use std::future::Future;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use qaleak_core::{
    cohens_kappa, AnnotationError, AnnotationRecord, CandidateSet, DatasetSplit, Label,
    Progress,
};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::error::Error;
use crate::store::AnnotationStore;

pub struct AppState {
    store: Mutex<AnnotationStore>,
    train: DatasetSplit,
    test: DatasetSplit,
    candidates: BTreeMap<String, CandidateSet>,
}

impl AppState {
    pub fn new(
        store: AnnotationStore,
        train: DatasetSplit,
        test: DatasetSplit,
        candidates: BTreeMap<String, CandidateSet>,
    ) -> Self {
        Self {
            store: Mutex::new(store),
            train,
            test,
            candidates,
        }
    }

    fn store(&self) -> MutexGuard<'_, AnnotationStore> {
        self.store.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SampleInfo {
    pub dataset: String,
    pub seed: u64,
    pub algorithm: String,
    pub size: usize,
    pub progress: Progress,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CandidateView {
    pub train_id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub score: u32,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ItemView {
    pub test_id: String,
    pub question: String,
    pub answers: Vec<String>,
    pub candidates: Vec<CandidateView>,
}

/// POST body; the server fills in a missing timestamp.
#[derive(Debug, Deserialize)]
struct AnnotateRequest {
    test_id: String,
    annotator: String,
    label: Label,
    #[serde(default)]
    matched_train_ids: Vec<String>,
    #[serde(default)]
    auto: bool,
    #[serde(default)]
    timestamp: Option<DateTime<Utc>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, message: impl ToString) -> Response {
    (
        status,
        Json(ErrorBody {
            error: message.to_string(),
        }),
    )
        .into_response()
}

fn annotation_status(e: &AnnotationError) -> StatusCode {
    match e {
        AnnotationError::UnknownTestId(_) => StatusCode::NOT_FOUND,
        _ => StatusCode::BAD_REQUEST,
    }
}

pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/sample", get(sample))
        .route("/api/next", get(next))
        .route("/api/item/{test_id}", get(item))
        .route("/api/annotate", post(annotate))
        .route("/api/progress", get(progress))
        .route("/api/agreement", get(agreement))
        .with_state(state);
    match ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    state: Arc<AppState>,
    listener: TcpListener,
    ui_dir: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state, ui_dir))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn sample(State(state): State<Arc<AppState>>) -> Json<SampleInfo> {
    let store = state.store();
    let sample = store.log().sample();
    Json(SampleInfo {
        dataset: sample.dataset.clone(),
        seed: sample.seed,
        algorithm: sample.algorithm.clone(),
        size: sample.len(),
        progress: store.log().progress(),
    })
}

fn item_view(state: &AppState, test_id: &str) -> Option<ItemView> {
    let item = state.test.get(test_id)?;
    let candidates = state
        .candidates
        .get(test_id)
        .map(|set| {
            set.candidates
                .iter()
                .filter_map(|c| {
                    let train = state.train.get(&c.train_id)?;
                    Some(CandidateView {
                        train_id: c.train_id.clone(),
                        question: train.question.clone(),
                        answers: train.answers.clone(),
                        score: c.score,
                    })
                })
                .collect()
        })
        .unwrap_or_default();
    Some(ItemView {
        test_id: item.id.clone(),
        question: item.question.clone(),
        answers: item.answers.clone(),
        candidates,
    })
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next(State(state): State<Arc<AppState>>, Query(q): Query<NextQuery>) -> Response {
    let Some(annotator) = q.annotator.filter(|a| !a.trim().is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "annotator query parameter is required");
    };
    let next = state.store().log().next_for(&annotator).map(str::to_string);
    match next.and_then(|id| item_view(&state, &id)) {
        Some(view) => Json(view).into_response(),
        None => StatusCode::NO_CONTENT.into_response(),
    }
}

async fn item(State(state): State<Arc<AppState>>, Path(test_id): Path<String>) -> Response {
    if !state.store().log().sample().contains(&test_id) {
        return error(StatusCode::NOT_FOUND, format!("test id {test_id:?} is not in the sample"));
    }
    match item_view(&state, &test_id) {
        Some(view) => Json(view).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("unknown test id {test_id:?}")),
    }
}

async fn annotate(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let request: AnnotateRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, format!("malformed annotation: {e}")),
    };
    if request.auto {
        return error(StatusCode::BAD_REQUEST, "automatic labels cannot be submitted");
    }
    let record = AnnotationRecord {
        test_id: request.test_id,
        annotator: request.annotator,
        label: request.label,
        matched_train_ids: request.matched_train_ids,
        auto: false,
        timestamp: request.timestamp.unwrap_or_else(Utc::now),
        metadata: request.metadata,
    };
    let result = state.store().append(record);
    match result {
        Ok(ack) => (StatusCode::CREATED, Json(ack)).into_response(),
        Err(Error::Annotation(e)) => error(annotation_status(&e), e),
        Err(e) => {
            log::error!("failed to persist annotation: {e}");
            error(StatusCode::INTERNAL_SERVER_ERROR, e)
        }
    }
}

async fn progress(State(state): State<Arc<AppState>>) -> Json<Progress> {
    Json(state.store().log().progress())
}

#[derive(Deserialize)]
struct AgreementQuery {
    a: String,
    b: String,
}

async fn agreement(State(state): State<Arc<AppState>>, Query(q): Query<AgreementQuery>) -> Response {
    let (labels_a, labels_b) = {
        let store = state.store();
        (store.log().labels_of(&q.a), store.log().labels_of(&q.b))
    };
    match cohens_kappa(&labels_a, &labels_b) {
        Ok(agreement) => Json(agreement).into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e),
    }
}
