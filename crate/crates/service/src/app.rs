use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, FromRequest, Multipart, Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{watch, Semaphore};
use trackmate_core::llm::{chat_turn, music_feedback_graph, open_session, ChatBackend, MockBackend, Persona};
use trackmate_core::llm::{refine_report, PromptTemplate, RubricScores, ThoughtGraph};
use trackmate_core::report::{analyze_track, build_report};
use trackmate_core::semantics::PluginClassifier;
use trackmate_core::{decode_audio, AnalysisConfig, AudioClip};

use crate::backend::HttpBackend;
use crate::config::ServiceConfig;
use crate::store::{is_session_id, is_track_id, now_unix, track_id_for, FileStore, RefinementInfo};
use crate::store::{SessionRecord, TrackRecord};
use crate::ServiceError;

/// Room for multipart framing on top of the file-size limit.
const MULTIPART_SLACK: usize = 64 * 1024;

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        tracing::error!("internal error: {e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no {what} with id {id}"))
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        Self::internal(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

#[derive(Debug, Clone)]
enum JobState {
    Running,
    Done(Box<TrackRecord>),
    Failed(ApiError),
}

/// Which backend the service talks to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Http,
    Mock,
    None,
}

/// Builds the configured backend: the mock fixture wins over a URL.
pub fn backend_from_config(cfg: &ServiceConfig) -> Result<(Option<Arc<dyn ChatBackend>>, BackendKind), ServiceError> {
    if let Some(path) = &cfg.mock_fixture {
        let mock = MockBackend::from_file(path).map_err(|e| ServiceError::Mock(format!("{}: {e}", path.display())))?;
        return Ok((Some(Arc::new(mock)), BackendKind::Mock));
    }
    Ok(match &cfg.backend_url {
        Some(url) => (
            Some(Arc::new(HttpBackend::new(url, cfg.api_key.clone(), &cfg.model, cfg.backend_timeout()))),
            BackendKind::Http,
        ),
        None => (None, BackendKind::None),
    })
}

struct Inner {
    config: ServiceConfig,
    store: FileStore,
    backend: Option<Arc<dyn ChatBackend>>,
    backend_kind: BackendKind,
    analysis: AnalysisConfig,
    template: PromptTemplate,
    graph: ThoughtGraph,
    jobs: Mutex<HashMap<String, watch::Receiver<JobState>>>,
    session_locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    workers: Arc<Semaphore>,
    fetcher: ureq::Agent,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

impl AppState {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        let (backend, kind) = backend_from_config(&config)?;
        Self::with_backend(config, backend, kind)
    }

    pub fn with_backend(
        config: ServiceConfig,
        backend: Option<Arc<dyn ChatBackend>>,
        backend_kind: BackendKind,
    ) -> Result<Self, ServiceError> {
        let store = FileStore::open(&config.store_dir)?;
        let analysis = AnalysisConfig {
            plugin: config
                .plugin_cmd
                .clone()
                .map(|command| PluginClassifier { command, timeout: std::time::Duration::from_secs(10) }),
            ..AnalysisConfig::default()
        };
        let template =
            PromptTemplate { persona: Persona { producer_tone: config.persona }, ..PromptTemplate::default() };
        let fetcher = ureq::Agent::config_builder()
            .timeout_global(Some(config.fetch_timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        let workers = Arc::new(Semaphore::new(config.workers.max(1)));
        let backend_kind = if backend.is_some() { backend_kind } else { BackendKind::None };
        Ok(Self {
            inner: Arc::new(Inner {
                config,
                store,
                backend,
                backend_kind,
                analysis,
                template,
                graph: music_feedback_graph(),
                jobs: Mutex::default(),
                session_locks: Mutex::default(),
                workers,
                fetcher,
            }),
        })
    }

    pub fn store(&self) -> &FileStore {
        &self.inner.store
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.inner.config
    }

    fn backend(&self) -> Result<Arc<dyn ChatBackend>, ApiError> {
        self.inner
            .backend
            .clone()
            .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no chat backend configured"))
    }

    fn session_lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.inner.session_locks.lock().unwrap().entry(id.to_owned()).or_default().clone()
    }

    fn job(&self, id: &str) -> Option<JobState> {
        self.inner.jobs.lock().unwrap().get(id).map(|rx| rx.borrow().clone())
    }

    /// Joins the running job for `id` or starts one.
    fn start_job(&self, id: String, filename: String, bytes: Bytes, clip: AudioClip) -> watch::Receiver<JobState> {
        let mut jobs = self.inner.jobs.lock().unwrap();
        if let Some(rx) = jobs.get(&id) {
            if matches!(*rx.borrow(), JobState::Running) {
                return rx.clone();
            }
        }
        // A job that finished after the caller's store check.
        if let Ok(Some(rec)) = self.inner.store.track(&id) {
            return watch::channel(JobState::Done(Box::new(rec))).1;
        }
        let (tx, rx) = watch::channel(JobState::Running);
        jobs.insert(id.clone(), rx.clone());
        drop(jobs);

        let state = self.clone();
        tokio::spawn(async move {
            let permit = state.inner.workers.clone().acquire_owned().await;
            let worker = state.clone();
            let job_id = id.clone();
            let joined = tokio::task::spawn_blocking(move || worker.run_job(job_id, filename, &bytes, &clip)).await;
            drop(permit);
            let outcome = match joined {
                Ok(Ok(rec)) => JobState::Done(Box::new(rec)),
                Ok(Err(e)) => JobState::Failed(e),
                Err(e) => JobState::Failed(ApiError::internal(format!("analysis task failed: {e}"))),
            };
            if matches!(outcome, JobState::Done(_)) {
                state.inner.jobs.lock().unwrap().remove(&id);
            }
            let _ = tx.send(outcome);
        });
        rx
    }

    fn run_job(&self, id: String, filename: String, bytes: &[u8], clip: &AudioClip) -> Result<TrackRecord, ApiError> {
        let bundle = analyze_track(clip, &self.inner.analysis)
            .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
        let (mut report, refinement) = match &self.inner.backend {
            Some(b) => match refine_report(&bundle, b.as_ref()) {
                Ok(r) => (
                    r.report,
                    RefinementInfo::Refined {
                        depth: r.depth,
                        defaulted: r.defaulted,
                        interpretation: r.interpretation,
                    },
                ),
                Err(e) => {
                    tracing::warn!(track = %id, "refinement failed, storing depth 3: {e}");
                    (build_report(&bundle, 3), RefinementInfo::Failed { depth: 3, error: e.to_string() })
                }
            },
            None => (build_report(&bundle, 3), RefinementInfo::Skipped { depth: 3 }),
        };
        report.track_meta.source_hash = Some(id.clone());
        let record =
            TrackRecord { track_id: id, original_filename: filename, created_at: now_unix(), report, refinement };
        self.inner.store.put_track(&record, bytes, "wav", &bundle)?;
        tracing::info!(track = %record.track_id, depth = record.refinement.depth(), "track stored");
        Ok(record)
    }
}

pub fn router(state: AppState) -> Router {
    let limit = state.inner.config.max_upload_bytes.saturating_add(MULTIPART_SLACK);
    Router::new()
        .route("/healthz", get(healthz))
        .route("/tracks", post(upload_track))
        .route("/tracks/{id}/report", get(get_report))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .layer(DefaultBodyLimit::max(limit))
        .with_state(state)
}

async fn healthz(State(s): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({ "status": "ok", "backend": s.inner.backend_kind }))
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("invalid request body: {e}")))
}

fn too_large(limit: usize) -> ApiError {
    ApiError::new(StatusCode::PAYLOAD_TOO_LARGE, format!("upload exceeds the {limit}-byte limit"))
}

#[derive(Deserialize)]
struct SourceUrl {
    source_url: String,
}

async fn read_multipart(mut mp: Multipart) -> Result<(Bytes, String), ApiError> {
    let reject = |e: axum::extract::multipart::MultipartError| ApiError::new(e.status(), e.body_text());
    while let Some(field) = mp.next_field().await.map_err(reject)? {
        if field.name() == Some("file") || field.file_name().is_some() {
            let name = field.file_name().unwrap_or("upload").to_owned();
            return Ok((field.bytes().await.map_err(reject)?, name));
        }
    }
    Err(ApiError::new(StatusCode::BAD_REQUEST, "multipart body has no file field"))
}

fn fetch(agent: &ureq::Agent, url: &str, limit: usize) -> Result<(Bytes, String), ApiError> {
    let unprocessable = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, m);
    if !(url.starts_with("http://") || url.starts_with("https://")) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "source_url must be an http(s) URL"));
    }
    let mut resp = agent.get(url).call().map_err(|e| unprocessable(format!("fetching source_url: {e}")))?;
    if !resp.status().is_success() {
        return Err(unprocessable(format!("fetching source_url: HTTP {}", resp.status())));
    }
    let bytes = resp.body_mut().with_config().limit(limit as u64).read_to_vec().map_err(|e| match e {
        ureq::Error::BodyExceedsLimit(_) => too_large(limit),
        e => unprocessable(format!("fetching source_url: {e}")),
    })?;
    let path = url.split(['?', '#']).next().unwrap_or(url);
    let name = path.rsplit('/').next().filter(|s| !s.is_empty()).unwrap_or("download").to_owned();
    Ok((Bytes::from(bytes), name))
}

fn extension(filename: &str) -> Option<&str> {
    std::path::Path::new(filename).extension().and_then(|e| e.to_str())
}

#[derive(Serialize)]
struct Pending<'a> {
    track_id: &'a str,
    status: &'static str,
    poll: String,
}

fn pending(id: &str) -> Response {
    let poll = format!("/tracks/{id}/report");
    let location = [(header::LOCATION, poll.clone())];
    (StatusCode::ACCEPTED, location, Json(Pending { track_id: id, status: "pending", poll })).into_response()
}

async fn upload_track(State(s): State<AppState>, req: Request) -> Result<Response, ApiError> {
    let limit = s.inner.config.max_upload_bytes;
    let ctype =
        req.headers().get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("").to_ascii_lowercase();
    let (bytes, filename) = if ctype.starts_with("multipart/form-data") {
        let mp = Multipart::from_request(req, &s).await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        read_multipart(mp).await?
    } else if ctype.starts_with("application/json") {
        let body = Bytes::from_request(req, &s).await.map_err(|e| ApiError::new(e.status(), e.body_text()))?;
        let SourceUrl { source_url } = parse_body(&body)?;
        let agent = s.inner.fetcher.clone();
        tokio::task::spawn_blocking(move || fetch(&agent, &source_url, limit)).await.map_err(ApiError::internal)??
    } else {
        return Err(ApiError::new(
            StatusCode::UNSUPPORTED_MEDIA_TYPE,
            "expected multipart/form-data with a file, or JSON with source_url",
        ));
    };
    if bytes.len() > limit {
        return Err(too_large(limit));
    }

    let id = track_id_for(&bytes);
    if let Some(rec) = s.inner.store.track(&id)? {
        return Ok((StatusCode::OK, Json(rec)).into_response());
    }
    let decode_bytes = bytes.clone();
    let hint = extension(&filename).map(str::to_owned);
    let clip = tokio::task::spawn_blocking(move || decode_audio(&decode_bytes, hint.as_deref()))
        .await
        .map_err(ApiError::internal)?
        .map_err(|e| ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, e.to_string()))?;

    let mut rx = s.start_job(id.clone(), filename, bytes, clip);
    let waited = tokio::time::timeout(s.inner.config.sync_wait(), async {
        rx.wait_for(|st| !matches!(st, JobState::Running)).await.map(|st| st.clone())
    })
    .await;
    match waited {
        Err(_) => Ok(pending(&id)),
        Ok(Err(_)) => Err(ApiError::internal("analysis job vanished")),
        Ok(Ok(JobState::Done(rec))) => Ok((StatusCode::CREATED, Json(*rec)).into_response()),
        Ok(Ok(JobState::Failed(e))) => Err(e),
        Ok(Ok(JobState::Running)) => unreachable!(),
    }
}

#[derive(Deserialize)]
struct ReportQuery {
    depth: Option<u8>,
}

async fn get_report(
    State(s): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ReportQuery>,
) -> Result<Response, ApiError> {
    if q.depth.is_some_and(|d| !(1..=3).contains(&d)) {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "depth must be 1, 2 or 3"));
    }
    if !is_track_id(&id) {
        return Err(ApiError::not_found("track", &id));
    }
    let Some(rec) = s.inner.store.track(&id)? else {
        return match s.job(&id) {
            Some(JobState::Running) => Ok(pending(&id)),
            Some(JobState::Failed(e)) => Err(e),
            _ => Err(ApiError::not_found("track", &id)),
        };
    };
    let report = match q.depth {
        None => rec.report,
        Some(d) => {
            let bundle =
                s.inner.store.bundle(&id)?.ok_or_else(|| ApiError::internal("track has no stored analysis"))?;
            let mut r = build_report(&bundle, d);
            r.track_meta.source_hash = Some(id);
            r
        }
    };
    Ok(Json(report).into_response())
}

#[derive(Deserialize)]
struct CreateSession {
    track_id: String,
}

#[derive(Serialize)]
struct SessionCreated {
    session_id: String,
    track_id: String,
    scores: Option<RubricScores>,
    opening: String,
    score_retries: u32,
}

async fn create_session(State(s): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let CreateSession { track_id } = parse_body(&body)?;
    if !is_track_id(&track_id) {
        return Err(ApiError::not_found("track", &track_id));
    }
    let track = s.inner.store.track(&track_id)?.ok_or_else(|| ApiError::not_found("track", &track_id))?;
    let backend = s.backend()?;
    let session_id = uuid::Uuid::new_v4().to_string();
    let worker = s.clone();
    let sid = session_id.clone();
    let opened = tokio::task::spawn_blocking(move || {
        open_session(sid, track.report, &worker.inner.template, Some(&worker.inner.graph), backend.as_ref())
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(|e| {
        tracing::warn!("opening session failed: {e}");
        ApiError::new(StatusCode::BAD_GATEWAY, e.to_string())
    })?;

    let now = now_unix();
    let record = SessionRecord {
        session_id: session_id.clone(),
        track_id: track_id.clone(),
        created_at: now,
        updated_at: now,
        session: opened.session,
    };
    s.inner.store.put_session(&record)?;
    let body = SessionCreated {
        session_id,
        track_id,
        scores: record.session.scores,
        opening: opened.opening,
        score_retries: opened.score_retries,
    };
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionRecord>, ApiError> {
    if !is_session_id(&id) {
        return Err(ApiError::not_found("session", &id));
    }
    s.inner.store.session(&id)?.map(Json).ok_or_else(|| ApiError::not_found("session", &id))
}

#[derive(Deserialize)]
struct PostMessage {
    text: String,
}

#[derive(Serialize)]
struct Reply {
    reply: String,
    history_len: usize,
}

async fn post_message(State(s): State<AppState>, Path(id): Path<String>, body: Bytes) -> Result<Json<Reply>, ApiError> {
    let PostMessage { text } = parse_body(&body)?;
    if text.trim().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "message text is empty"));
    }
    if !is_session_id(&id) {
        return Err(ApiError::not_found("session", &id));
    }
    let lock = s.session_lock(&id);
    let _guard = lock.lock().await;
    let mut record = s.inner.store.session(&id)?.ok_or_else(|| ApiError::not_found("session", &id))?;
    let backend = s.backend()?;
    let (mut record, reply) = tokio::task::spawn_blocking(move || {
        let reply = chat_turn(&mut record.session, &text, backend.as_ref());
        (record, reply)
    })
    .await
    .map_err(ApiError::internal)?;
    let reply = reply.map_err(|e| ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()))?;
    record.updated_at = now_unix();
    s.inner.store.put_session(&record)?;
    Ok(Json(Reply { reply, history_len: record.session.history.len() }))
}
