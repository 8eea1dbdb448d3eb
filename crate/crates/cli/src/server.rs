//! The HTTP API.
//!
//! Papers live in memory keyed by `paper_id`. Each paper's index is built on
//! first use behind a once-only latch, so concurrent first requests build it
//! once and later requests see the same session.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Deserialize;
use serde_json::json;

use d2s_core::dense_ir::DEFAULT_TOP_K;
use d2s_core::doc_model::{ingest_paper, PaperDoc};
use d2s_core::generation::{drafts_to_deck_json, drafts_to_markdown, Generator, GeneratorTag, SlideDraft, SlideOptions};
use d2s_core::keyword_tree::HeaderTree;
use d2s_core::pipeline::PaperSession;
use d2s_core::Error;

use crate::Runtime;

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub kind: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, message: impl Into<String>) -> Self {
        ApiError { status, kind: kind.into(), message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("no paper {id}"))
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Schema(_)
            | Error::Json(_)
            | Error::EmptyDocument
            | Error::EmptyTitle
            | Error::InvalidK(_)
            | Error::AlphaOutOfRange(_) => StatusCode::BAD_REQUEST,
            Error::ServiceUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
            Error::Timeout(_) => StatusCode::GATEWAY_TIMEOUT,
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.kind(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.kind, "message": self.message }).to_string();
        (self.status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
    }
}

struct PaperEntry {
    doc: PaperDoc,
    session: OnceLock<Result<Arc<PaperSession>, ApiError>>,
}

pub struct AppState {
    runtime: Runtime,
    papers: RwLock<HashMap<String, Arc<PaperEntry>>>,
}

impl AppState {
    pub fn new(runtime: Runtime) -> Self {
        AppState { runtime, papers: RwLock::new(HashMap::new()) }
    }

    /// Registers a paper; false if the id is taken.
    pub fn insert(&self, doc: PaperDoc) -> bool {
        let mut papers = self.papers.write().expect("paper map poisoned");
        if papers.contains_key(&doc.paper_id) {
            return false;
        }
        let entry = PaperEntry { doc: doc.clone(), session: OnceLock::new() };
        papers.insert(doc.paper_id, Arc::new(entry));
        true
    }

    fn entry(&self, id: &str) -> Result<Arc<PaperEntry>, ApiError> {
        self.papers
            .read()
            .expect("paper map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }
}

type Shared = Arc<AppState>;

/// Runs `f` with the paper's session on the blocking pool, building the
/// session first if needed.
async fn with_session<T, F>(state: &Shared, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&PaperSession, &Runtime) -> Result<T, ApiError> + Send + 'static,
{
    let entry = state.entry(id)?;
    let state = state.clone();
    tokio::task::spawn_blocking(move || {
        let session = entry
            .session
            .get_or_init(|| {
                PaperSession::build(entry.doc.clone(), &state.runtime.config, state.runtime.encoder.clone())
                    .map(Arc::new)
                    .map_err(ApiError::from)
            })
            .clone()?;
        f(&session, &state.runtime)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))?
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn health() -> Response {
    json_response(StatusCode::OK, json!({ "status": "ok" }).to_string())
}

async fn upload_paper(State(state): State<Shared>, body: Bytes) -> Result<Response, ApiError> {
    let doc = ingest_paper(&body)?;
    let id = doc.paper_id.clone();
    if !state.insert(doc) {
        return Err(ApiError::new(StatusCode::CONFLICT, "Conflict", format!("paper {id} already exists")));
    }
    Ok(json_response(StatusCode::CREATED, json!({ "paper_id": id }).to_string()))
}

async fn outline(State(state): State<Shared>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let entry = state.entry(&id)?;
    let tree = HeaderTree::build(&entry.doc);
    Ok(json_response(StatusCode::OK, serde_json::to_string(&tree.to_outline()).expect("outline serializes")))
}

fn default_k() -> usize {
    DEFAULT_TOP_K
}

#[derive(Deserialize)]
struct SlideRequest {
    title: String,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default)]
    generator: GeneratorTag,
}

fn parse_body<'a, T: Deserialize<'a>>(body: &'a [u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::from(Error::Schema(e.to_string())))
}

async fn draft_slide(
    State(state): State<Shared>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: SlideRequest = parse_body(&body)?;
    let body = with_session(&state, &id, move |session, rt| {
        let generator = match req.generator {
            GeneratorTag::Extractive => Generator::Extractive,
            GeneratorTag::Remote => Generator::Remote(rt.generator.clone().ok_or_else(|| {
                ApiError::new(StatusCode::BAD_REQUEST, "RemoteNotConfigured", "D2S_GEN_URL is not set")
            })?),
        };
        let options = SlideOptions { k: req.k, ..rt.config.slide };
        Ok(session.draft(&req.title, &options, &generator)?.to_json())
    })
    .await?;
    Ok(json_response(StatusCode::OK, body))
}

#[derive(Deserialize)]
struct FigureQuery {
    title: String,
    top: Option<usize>,
}

async fn figures(
    State(state): State<Shared>,
    Path(id): Path<String>,
    Query(q): Query<FigureQuery>,
) -> Result<Response, ApiError> {
    let body = with_session(&state, &id, move |session, rt| {
        let top = q.top.unwrap_or(rt.config.slide.recommendations);
        let ranking = session.figures(&q.title, rt.config.slide.match_threshold)?.top(top);
        Ok(serde_json::to_string(&ranking).expect("ranking serializes"))
    })
    .await?;
    Ok(json_response(StatusCode::OK, body))
}

#[derive(Deserialize)]
struct ExportRequest {
    deck_id: String,
    slides: Vec<SlideDraft>,
}

async fn export_deck(headers: HeaderMap, body: Bytes) -> Result<Response, ApiError> {
    let req: ExportRequest = parse_body(&body)?;
    if req.slides.is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "EmptyDeck", "deck has no slides"));
    }
    let wants_markdown = headers
        .get(header::ACCEPT)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.contains("text/markdown"));
    if wants_markdown {
        let md = drafts_to_markdown(&req.slides);
        return Ok((StatusCode::OK, [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")], md).into_response());
    }
    Ok(json_response(StatusCode::OK, drafts_to_deck_json(&req.deck_id, &req.slides)?))
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/papers", post(upload_paper))
        .route("/papers/{id}/outline", get(outline))
        .route("/papers/{id}/slides", post(draft_slide))
        .route("/papers/{id}/figures", get(figures))
        .route("/decks/export", post(export_deck))
        .with_state(state)
}

pub async fn serve(runtime: Runtime, host: &str, port: u16, papers: Vec<PaperDoc>) -> anyhow::Result<()> {
    let state = Arc::new(AppState::new(runtime));
    for doc in papers {
        let id = doc.paper_id.clone();
        if !state.insert(doc) {
            anyhow::bail!("duplicate paper id {id}");
        }
    }
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state)).await?;
    Ok(())
}
