//! HTTP/JSON API over a data directory.
//!
//! Errors are returned as `{"error": {"code": "...", "message": "..."}}`.
//! List endpoints take `limit` (default 50, at most 1000) and `offset` and
//! answer `{"items": [...], "total", "limit", "offset"}`.

use std::collections::{BTreeMap, HashSet};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{FromRequest, FromRequestParts, Path as UrlPath, Request, State};
use axum::http::request::Parts;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sillon_core::classify::{ClassWeighting, SplitConfig, TrainConfig};
use sillon_core::evaluate::EvalReport;
use sillon_core::index::{query_terms, ParentKind, SearchFilters};
use sillon_core::taxonomy::{ControversyClass, InfoClass, TargetKind, Task};
use tower_http::cors::{Any, CorsLayer};

use crate::config::{Config, ConfigError};
use crate::domain::{now, Annotation, Channel, Comment, Extra, ParentRef, Sentence, TargetRef, Timestamp, VideoRecord};
use crate::ingest::{register_channel, sync_channel, IngestError, Provider, ProviderError, SyncError, SyncLocks};
use crate::models::{self, DatasetSource, ModelError, ModelMeta, TrainRequest};
use crate::pipeline::{build_index, latest_models, majority_labels, read_index, IndexSnapshot};
use crate::store::{Change, SharedStore, Store, StoreError};

pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 1000;

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.code, "message": self.message } });
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::InvariantViolation(_) => Self::bad_request("invalid", e.to_string()),
            StoreError::DanglingReference { .. } => Self::not_found(e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::NotFound(_) => Self::not_found(e.to_string()),
            _ => Self::new(StatusCode::BAD_GATEWAY, "provider_error", e.to_string()),
        }
    }
}

impl From<ModelError> for ApiError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::UnknownModel(_) => Self::not_found(e.to_string()),
            ModelError::NoExamples(_) | ModelError::Dataset { .. } | ModelError::Classify(_) => {
                Self::bad_request("invalid_dataset", e.to_string())
            }
            ModelError::DatasetChanged(_) => Self::new(StatusCode::CONFLICT, "dataset_changed", e.to_string()),
            _ => Self::internal(e.to_string()),
        }
    }
}

/// `Query` with JSON errors.
pub struct ApiQuery<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequestParts<S> for ApiQuery<T> {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| ApiQuery(q.0))
            .map_err(|e| ApiError::bad_request("invalid_query", e.body_text()))
    }
}

/// `Json` with JSON errors.
pub struct ApiJson<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for ApiJson<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        Json::<T>::from_request(req, state)
            .await
            .map(|j| ApiJson(j.0))
            .map_err(|e| ApiError::bad_request("invalid_body", e.body_text()))
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct PageParams {
    #[serde(default, deserialize_with = "lenient_usize")]
    pub limit: Option<usize>,
    #[serde(default, deserialize_with = "lenient_usize")]
    pub offset: Option<usize>,
}

// Flattened query structs hand every value over as a string.
fn lenient_usize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<usize>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(usize),
        Text(String),
    }
    match Option::<Raw>::deserialize(d)? {
        None => Ok(None),
        Some(Raw::Num(n)) => Ok(Some(n)),
        Some(Raw::Text(t)) if t.is_empty() => Ok(None),
        Some(Raw::Text(t)) => t.parse().map(Some).map_err(|_| serde::de::Error::custom(format!("`{t}` is not a non-negative integer"))),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Page<T> {
    pub items: Vec<T>,
    pub total: usize,
    pub limit: usize,
    pub offset: usize,
}

impl PageParams {
    fn resolve(&self) -> Result<(usize, usize), ApiError> {
        let limit = self.limit.unwrap_or(DEFAULT_LIMIT);
        if limit > MAX_LIMIT {
            return Err(ApiError::bad_request("invalid_query", format!("limit must be at most {MAX_LIMIT}")));
        }
        Ok((limit, self.offset.unwrap_or(0)))
    }

    fn page<T>(&self, all: impl IntoIterator<Item = T>) -> Result<Page<T>, ApiError> {
        let (limit, offset) = self.resolve()?;
        let mut total = 0;
        let mut items = Vec::new();
        for (i, x) in all.into_iter().enumerate() {
            total += 1;
            if i >= offset && items.len() < limit {
                items.push(x);
            }
        }
        Ok(Page { items, total, limit, offset })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Job {
    pub job_id: String,
    pub task: Task,
    pub status: JobStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(with = "crate::domain::ts")]
    pub submitted_at: Timestamp,
    #[serde(skip_serializing_if = "Option::is_none", with = "opt_ts")]
    pub finished_at: Option<Timestamp>,
}

mod opt_ts {
    use serde::Serializer;

    use crate::domain::{format_timestamp, Timestamp};

    pub fn serialize<S: Serializer>(t: &Option<Timestamp>, s: S) -> Result<S::Ok, S::Error> {
        match t {
            Some(t) => s.serialize_str(&format_timestamp(t)),
            None => s.serialize_none(),
        }
    }
}

pub struct AppState {
    data_dir: PathBuf,
    config: Config,
    store: SharedStore,
    provider: Result<Arc<dyn Provider>, String>,
    locks: Arc<SyncLocks>,
    jobs: Mutex<BTreeMap<String, Job>>,
    job_counter: AtomicU64,
    training: Mutex<HashSet<Task>>,
    index: Mutex<Option<Arc<IndexSnapshot>>>,
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>, config: Config, store: Store, provider: Result<Arc<dyn Provider>, String>) -> Self {
        Self {
            data_dir: data_dir.into(),
            config,
            store: store.shared(),
            provider,
            locks: Arc::new(SyncLocks::default()),
            jobs: Mutex::new(BTreeMap::new()),
            job_counter: AtomicU64::new(0),
            training: Mutex::new(HashSet::new()),
            index: Mutex::new(None),
        }
    }

    /// Loads the config and store of an initialized data directory. A provider
    /// that cannot be built leaves the read and annotation endpoints usable.
    pub fn open(data_dir: &Path) -> Result<Self, ServiceError> {
        let config = Config::load(data_dir)?;
        let store = Store::open(data_dir)?;
        let provider = config.provider(data_dir).map_err(|e| e.to_string());
        Ok(Self::new(data_dir, config, store, provider))
    }

    pub fn store(&self) -> &SharedStore {
        &self.store
    }

    pub fn locks(&self) -> &Arc<SyncLocks> {
        &self.locks
    }

    fn provider(&self) -> Result<Arc<dyn Provider>, ApiError> {
        self.provider
            .clone()
            .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "provider_unavailable", e))
    }

    fn read(&self) -> Result<std::sync::RwLockReadGuard<'_, Store>, ApiError> {
        self.store.read().map_err(|_| ApiError::internal("store lock poisoned"))
    }

    fn mutate<T>(&self, f: impl FnOnce(&mut Store) -> Result<T, ApiError>) -> Result<T, ApiError> {
        let mut s = self.store.write().map_err(|_| ApiError::internal("store lock poisoned"))?;
        let out = s.transaction(f)?;
        s.save()?;
        Ok(out)
    }

    /// Index matching the current store revision and latest models. Built in
    /// memory when neither the cached nor the persisted one is current.
    fn index(&self, store: &Store) -> Result<Arc<IndexSnapshot>, ApiError> {
        let (ids, loaded) = latest_models(&self.data_dir)?;
        let mut cache = self.index.lock().map_err(|_| ApiError::internal("index cache poisoned"))?;
        if let Some(snapshot) = cache.as_ref().filter(|s| s.is_current(store, &ids)) {
            return Ok(snapshot.clone());
        }
        let snapshot = match read_index(&self.data_dir).map_err(|e| ApiError::internal(e.to_string()))? {
            Some(s) if s.is_current(store, &ids) => s,
            _ => IndexSnapshot { store_revision: store.revision(), models: ids, index: build_index(store, &loaded) },
        };
        let snapshot = Arc::new(snapshot);
        *cache = Some(snapshot.clone());
        Ok(snapshot)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{0}")]
    Bind(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type AppResult<T> = Result<T, ApiError>;
type St = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match state.config.cors_origin.as_deref().map(HeaderValue::from_str) {
        Some(Ok(origin)) => CorsLayer::new().allow_origin(origin).allow_methods(Any).allow_headers(Any),
        _ => CorsLayer::permissive(),
    };
    Router::new()
        .route("/channels", get(list_channels).post(add_channel))
        .route("/channels/{id}", get(get_channel).patch(patch_channel))
        .route("/channels/{id}/sync", post(sync))
        .route("/videos", get(list_videos))
        .route("/videos/{id}", get(get_video))
        .route("/videos/{id}/transcript", get(get_transcript))
        .route("/videos/{id}/comments", get(list_comments))
        .route("/search", get(search))
        .route("/annotations", get(list_annotations).post(post_annotation))
        .route("/stats", get(stats))
        .route("/stats/labels", get(label_stats))
        .route("/taxonomy", get(taxonomy))
        .route("/train", post(train))
        .route("/jobs", get(list_jobs))
        .route("/jobs/{id}", get(get_job))
        .route("/models", get(list_models))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/report", get(model_report))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .layer(cors)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, addr: SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| ServiceError::Bind(format!("cannot bind {addr}: {e}")))?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> AppResult<T> + Send + 'static) -> AppResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(|e| ApiError::internal(e.to_string()))?
}

fn created(change: Change) -> StatusCode {
    if change == Change::Inserted {
        StatusCode::CREATED
    } else {
        StatusCode::OK
    }
}

// channels

#[derive(Serialize)]
struct ChannelView<'a> {
    #[serde(flatten)]
    channel: &'a Channel,
    video_count: usize,
    syncing: bool,
}

fn channel_view<'a>(state: &AppState, store: &'a Store, c: &'a Channel) -> ChannelView<'a> {
    ChannelView { channel: c, video_count: store.videos_of_channel(&c.channel_id).count(), syncing: state.locks.is_running(&c.channel_id) }
}

async fn list_channels(State(state): St, ApiQuery(page): ApiQuery<PageParams>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    let items = store.data().channels.values().map(|c| channel_view(&state, &store, c));
    Ok(Json(json!(page.page(items)?)))
}

async fn get_channel(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    let c = store.channel(&id).ok_or_else(|| ApiError::not_found(format!("unknown channel `{id}`")))?;
    Ok(Json(json!(channel_view(&state, &store, c))))
}

#[derive(Deserialize)]
struct AddChannel {
    /// Channel URL, `@handle` or id.
    url: String,
}

async fn add_channel(State(state): St, ApiJson(body): ApiJson<AddChannel>) -> AppResult<(StatusCode, Json<Channel>)> {
    let provider = state.provider()?;
    blocking(move || {
        let (channel, change) = state.mutate(|s| {
            register_channel(s, &*provider, &body.url).map_err(|e| match e {
                IngestError::UnresolvableChannel(_) => ApiError::bad_request("invalid_channel", e.to_string()),
                IngestError::Provider(p) => p.into(),
                IngestError::Store(s) => s.into(),
            })
        })?;
        Ok((created(change), Json(channel)))
    })
    .await
}

#[derive(Deserialize)]
struct PatchChannel {
    active: Option<bool>,
    title: Option<String>,
}

async fn patch_channel(State(state): St, UrlPath(id): UrlPath<String>, ApiJson(body): ApiJson<PatchChannel>) -> AppResult<Json<Channel>> {
    let channel = state.mutate(|s| {
        let mut c = s.channel(&id).cloned().ok_or_else(|| ApiError::not_found(format!("unknown channel `{id}`")))?;
        if let Some(active) = body.active {
            c.active = active;
        }
        if let Some(title) = body.title {
            c.title = title;
        }
        s.upsert_channel(c.clone())?;
        Ok(c)
    })?;
    Ok(Json(channel))
}

async fn sync(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<Value>> {
    let provider = state.provider()?;
    blocking(move || {
        let options = state.config.sync_options();
        let report = sync_channel(&state.store, &*provider, &state.locks, &id, &options).map_err(|e| match e {
            SyncError::UnknownChannel(_) => ApiError::not_found(e.to_string()),
            SyncError::InactiveChannel(_) => ApiError::bad_request("channel_inactive", e.to_string()),
            SyncError::AlreadyRunning(_) => ApiError::new(StatusCode::CONFLICT, "sync_running", e.to_string()),
            SyncError::Store(s) => s.into(),
        })?;
        Ok(Json(json!(report)))
    })
    .await
}

// videos, transcripts, comments

#[derive(Serialize)]
struct VideoView<'a> {
    #[serde(flatten)]
    video: &'a VideoRecord,
    comment_count: usize,
}

#[derive(Deserialize)]
struct VideoQuery {
    channel: Option<String>,
    #[serde(flatten)]
    page: PageParams,
}

fn comment_counts(store: &Store) -> BTreeMap<&str, usize> {
    let mut counts = BTreeMap::new();
    for c in store.data().comments.values() {
        *counts.entry(c.video_id.as_str()).or_insert(0) += 1;
    }
    counts
}

async fn list_videos(State(state): St, ApiQuery(q): ApiQuery<VideoQuery>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    let channel = q.channel.filter(|c| !c.is_empty());
    if let Some(c) = &channel {
        if store.channel(c).is_none() {
            return Err(ApiError::not_found(format!("unknown channel `{c}`")));
        }
    }
    let counts = comment_counts(&store);
    let mut videos: Vec<&VideoRecord> =
        store.data().videos.values().filter(|v| channel.as_ref().is_none_or(|c| v.channel_id == *c)).collect();
    videos.sort_by(|a, b| b.published_at.cmp(&a.published_at).then_with(|| a.video_id.cmp(&b.video_id)));
    let items = videos.into_iter().map(|v| VideoView { video: v, comment_count: counts.get(v.video_id.as_str()).copied().unwrap_or(0) });
    Ok(Json(json!(q.page.page(items)?)))
}

fn video_or_404<'a>(store: &'a Store, id: &str) -> AppResult<&'a VideoRecord> {
    store.video(id).ok_or_else(|| ApiError::not_found(format!("unknown video `{id}`")))
}

async fn get_video(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    let video = video_or_404(&store, &id)?;
    let counts = comment_counts(&store);
    Ok(Json(json!(VideoView { video, comment_count: counts.get(id.as_str()).copied().unwrap_or(0) })))
}

#[derive(Deserialize)]
struct TranscriptQuery {
    view: Option<String>,
    #[serde(flatten)]
    page: PageParams,
}

async fn get_transcript(State(state): St, UrlPath(id): UrlPath<String>, ApiQuery(q): ApiQuery<TranscriptQuery>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    let video = video_or_404(&store, &id)?;
    let transcript = store.transcript(&id).ok_or_else(|| {
        ApiError::new(StatusCode::NOT_FOUND, "no_transcript", format!("video `{id}` has no transcript ({:?})", video.transcript_status))
    })?;
    let processed = !transcript.sentences.is_empty();
    match q.view.as_deref().unwrap_or("raw") {
        "raw" => {
            let text = if processed {
                transcript.restored_text.clone()
            } else {
                transcript.segments.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ")
            };
            Ok(Json(json!({ "video_id": id, "view": "raw", "processed": processed, "text": text, "segments": transcript.segments })))
        }
        "sentences" => {
            let parent = ParentRef { kind: ParentKind::Transcript, id: id.clone() };
            let labels = human_labels(&store);
            let items = store.sentences_of(&parent).into_iter().map(|s| sentence_view(s, &labels));
            let page = q.page.page(items)?;
            Ok(Json(json!({
                "video_id": id,
                "view": "sentences",
                "processed": processed,
                "items": page.items,
                "total": page.total,
                "limit": page.limit,
                "offset": page.offset,
            })))
        }
        other => Err(ApiError::bad_request("invalid_query", format!("view must be `raw` or `sentences`, not `{other}`"))),
    }
}

type HumanLabels = Vec<(Task, BTreeMap<TargetRef, String>)>;

fn human_labels(store: &Store) -> HumanLabels {
    Task::ALL.iter().map(|&t| (t, majority_labels(store, t))).collect()
}

fn labels_of(labels: &HumanLabels, target: TargetRef) -> BTreeMap<&'static str, String> {
    labels.iter().filter_map(|(task, m)| m.get(&target).map(|l| (task.as_str(), l.clone()))).collect()
}

#[derive(Serialize)]
struct SentenceView<'a> {
    #[serde(flatten)]
    sentence: &'a Sentence,
    labels: BTreeMap<&'static str, String>,
}

fn sentence_view<'a>(s: &'a Sentence, labels: &HumanLabels) -> SentenceView<'a> {
    SentenceView { sentence: s, labels: labels_of(labels, TargetRef { kind: TargetKind::Sentence, id: s.sentence_id.clone() }) }
}

#[derive(Serialize)]
struct CommentView<'a> {
    #[serde(flatten)]
    comment: &'a Comment,
    labels: BTreeMap<&'static str, String>,
}

async fn list_comments(State(state): St, UrlPath(id): UrlPath<String>, ApiQuery(page): ApiQuery<PageParams>) -> AppResult<Json<Value>> {
    let store = state.read()?;
    video_or_404(&store, &id)?;
    let labels = human_labels(&store);
    let items = store.comments_of_video(&id).into_iter().map(|c| CommentView {
        comment: c,
        labels: labels_of(&labels, TargetRef { kind: TargetKind::Comment, id: c.comment_id.clone() }),
    });
    Ok(Json(json!(page.page(items)?)))
}

// search

#[derive(Deserialize)]
struct SearchQuery {
    q: Option<String>,
    kind: Option<String>,
    channel: Option<String>,
    class: Option<String>,
    #[serde(flatten)]
    page: PageParams,
}

#[derive(Serialize)]
struct SearchItem {
    sentence_id: String,
    kind: ParentKind,
    parent_id: String,
    video_id: String,
    channel_id: String,
    ordinal: u32,
    score: f64,
    text: String,
    labels: Vec<String>,
    matches: Vec<sillon_core::index::MatchedTerm>,
}

fn nonempty(s: Option<String>) -> Option<String> {
    s.filter(|x| !x.trim().is_empty())
}

async fn search(State(state): St, ApiQuery(q): ApiQuery<SearchQuery>) -> AppResult<Json<Value>> {
    let terms = query_terms(q.q.as_deref().unwrap_or(""));
    if terms.is_empty() {
        return Err(ApiError::bad_request("empty_query", "the query has no searchable term"));
    }
    let kind = match nonempty(q.kind).as_deref() {
        None => None,
        Some("transcript") => Some(ParentKind::Transcript),
        Some("comment") => Some(ParentKind::Comment),
        Some(other) => return Err(ApiError::bad_request("invalid_query", format!("kind must be `transcript` or `comment`, not `{other}`"))),
    };
    let class = nonempty(q.class);
    if let Some(c) = &class {
        if !Task::ALL.iter().any(|t| t.is_valid_label(c)) {
            return Err(ApiError::bad_request("invalid_query", format!("unknown class `{c}`")));
        }
    }
    let filters = SearchFilters { channel: nonempty(q.channel), kind, class };
    let store = state.read()?;
    let snapshot = state.index(&store)?;
    let hits = snapshot.index.search(&terms, &filters).map_err(|e| ApiError::bad_request("empty_query", e.to_string()))?;
    let items = hits.into_iter().filter_map(|h| {
        let sentence = store.sentence(&h.sentence_id)?;
        let meta = snapshot.index.doc(&h.sentence_id)?;
        Some(SearchItem {
            parent_id: sentence.parent.id.clone(),
            channel_id: meta.channel_id.clone(),
            text: sentence.text.clone(),
            labels: meta.labels.clone(),
            sentence_id: h.sentence_id,
            kind: h.kind,
            video_id: h.video_id,
            ordinal: h.ordinal,
            score: h.score,
            matches: h.matches,
        })
    });
    Ok(Json(json!(q.page.page(items)?)))
}

// annotations

#[derive(Deserialize)]
#[serde(untagged)]
enum TargetInput {
    Text(String),
    Object(TargetRef),
}

#[derive(Deserialize)]
struct AnnotationInput {
    target: TargetInput,
    annotator_id: String,
    task: String,
    label: String,
    #[serde(flatten)]
    extra: Extra,
}

fn parse_task(s: &str) -> AppResult<Task> {
    s.parse().map_err(|e: sillon_core::taxonomy::UnknownTask| ApiError::bad_request("invalid_task", e.to_string()))
}

fn parse_target(s: &str) -> AppResult<TargetRef> {
    s.parse().map_err(|e: crate::domain::TargetParseError| ApiError::bad_request("invalid_target", e.to_string()))
}

async fn post_annotation(State(state): St, ApiJson(body): ApiJson<AnnotationInput>) -> AppResult<(StatusCode, Json<Annotation>)> {
    let target = match body.target {
        TargetInput::Text(s) => parse_target(&s)?,
        TargetInput::Object(t) => t,
    };
    let annotation = Annotation {
        target,
        annotator_id: body.annotator_id,
        task: parse_task(&body.task)?,
        label: body.label,
        created_at: now(),
        extra: body.extra,
    };
    let key = annotation.key();
    let (change, stored) = state.mutate(|s| {
        let change = s.upsert_annotation(annotation)?;
        Ok((change, s.data().annotations[&key].clone()))
    })?;
    Ok((created(change), Json(stored)))
}

#[derive(Deserialize)]
struct AnnotationQuery {
    target: Option<String>,
    task: Option<String>,
    annotator: Option<String>,
    #[serde(flatten)]
    page: PageParams,
}

async fn list_annotations(State(state): St, ApiQuery(q): ApiQuery<AnnotationQuery>) -> AppResult<Json<Value>> {
    let target = nonempty(q.target).map(|t| parse_target(&t)).transpose()?;
    let task = nonempty(q.task).map(|t| parse_task(&t)).transpose()?;
    let annotator = nonempty(q.annotator);
    let store = state.read()?;
    if let Some(t) = &target {
        if !store.target_exists(t) {
            return Err(ApiError::not_found(format!("unknown target `{t}`")));
        }
    }
    let items = store.data().annotations.values().filter(|a| {
        target.as_ref().is_none_or(|t| a.target == *t)
            && task.is_none_or(|t| a.task == t)
            && annotator.as_ref().is_none_or(|x| a.annotator_id == *x)
    });
    Ok(Json(json!(q.page.page(items)?)))
}

// stats and taxonomy

async fn stats(State(state): St) -> AppResult<Json<Value>> {
    Ok(Json(json!(state.read()?.stats())))
}

#[derive(Deserialize)]
struct LabelStatsQuery {
    task: Option<String>,
    kind: Option<String>,
}

fn short_name(task: Task, class: &str) -> &'static str {
    match task {
        Task::InfoType => InfoClass::from_id(class).map_or("", InfoClass::short_name),
        Task::Controversy => match ControversyClass::from_id(class) {
            Some(ControversyClass::Controverse) => "Controverse",
            _ => "Non-controverse",
        },
    }
}

/// Class distribution of annotated targets, one majority label per target.
async fn label_stats(State(state): St, ApiQuery(q): ApiQuery<LabelStatsQuery>) -> AppResult<Json<Value>> {
    let task = parse_task(q.task.as_deref().unwrap_or(""))?;
    let kind = match nonempty(q.kind).as_deref() {
        None => None,
        Some(k) => Some(
            serde_json::from_value::<TargetKind>(json!(k))
                .map_err(|_| ApiError::bad_request("invalid_query", format!("unknown target kind `{k}`")))?,
        ),
    };
    let store = state.read()?;
    let mut counts: BTreeMap<&str, usize> = task.classes().iter().map(|c| (*c, 0)).collect();
    for (target, label) in majority_labels(&store, task) {
        if kind.is_none_or(|k| target.kind == k) {
            if let Some(n) = counts.get_mut(label.as_str()) {
                *n += 1;
            }
        }
    }
    let total: usize = counts.values().sum();
    let classes: Vec<Value> = task
        .classes()
        .iter()
        .map(|c| json!({ "class": c, "short_name": short_name(task, c), "count": counts[c] }))
        .collect();
    Ok(Json(json!({ "task": task, "kind": kind, "classes": classes, "total": total })))
}

async fn taxonomy() -> Json<Value> {
    let kinds = [TargetKind::Comment, TargetKind::Sentence, TargetKind::Transcript];
    let info: Vec<Value> = InfoClass::ALL
        .iter()
        .map(|c| {
            let allowed: Vec<TargetKind> = kinds.iter().copied().filter(|k| c.allowed_on(*k)).collect();
            json!({ "id": c.id(), "short_name": c.short_name(), "definition": c.definition(), "allowed_targets": allowed })
        })
        .collect();
    let controversy: Vec<Value> = ControversyClass::ALL
        .iter()
        .map(|c| {
            json!({
                "id": c.id(),
                "short_name": short_name(Task::Controversy, c.id()),
                "definition": c.definition(),
                "allowed_targets": kinds,
            })
        })
        .collect();
    Json(json!({
        "tasks": [
            { "task": Task::InfoType, "negative_class": Task::InfoType.negative_class(), "classes": info },
            { "task": Task::Controversy, "negative_class": Task::Controversy.negative_class(), "classes": controversy },
        ]
    }))
}

// training and models

struct TrainingSlot {
    state: Arc<AppState>,
    task: Task,
}

impl Drop for TrainingSlot {
    fn drop(&mut self) {
        if let Ok(mut t) = self.state.training.lock() {
            t.remove(&self.task);
        }
    }
}

fn finish_job(state: &AppState, job_id: &str, f: impl FnOnce(&mut Job)) {
    if let Ok(mut jobs) = state.jobs.lock() {
        if let Some(job) = jobs.get_mut(job_id) {
            f(job);
            job.finished_at = Some(now());
        }
    }
}

/// Omitted fields fall back to the configured training settings.
#[derive(Deserialize)]
struct TrainBody {
    task: String,
    seed: Option<u64>,
    weighting: Option<ClassWeighting>,
    split: Option<SplitConfig>,
    train: Option<TrainConfig>,
    dataset: Option<DatasetSource>,
}

async fn train(State(state): St, ApiJson(body): ApiJson<TrainBody>) -> AppResult<(StatusCode, Json<Job>)> {
    let (split, train) = state.config.training.configs(body.seed, body.weighting);
    let request = TrainRequest {
        task: parse_task(&body.task)?,
        split: body.split.unwrap_or(split),
        train: body.train.unwrap_or(train),
        dataset: body.dataset.unwrap_or(DatasetSource::Annotations),
    };
    {
        let mut busy = state.training.lock().map_err(|_| ApiError::internal("training set poisoned"))?;
        if !busy.insert(request.task) {
            return Err(ApiError::new(StatusCode::CONFLICT, "training_running", format!("a {} model is already training", request.task)));
        }
    }
    let slot = TrainingSlot { state: state.clone(), task: request.task };
    let job_id = format!("job-{}", state.job_counter.fetch_add(1, Ordering::Relaxed) + 1);
    let job = Job {
        job_id: job_id.clone(),
        task: request.task,
        status: JobStatus::Running,
        model_id: None,
        report: None,
        error: None,
        submitted_at: now(),
        finished_at: None,
    };
    state.jobs.lock().map_err(|_| ApiError::internal("job table poisoned"))?.insert(job_id.clone(), job.clone());

    tokio::task::spawn_blocking(move || {
        let _slot = slot;
        let outcome = match state.store.read() {
            Ok(store) => models::train(&state.data_dir, &store, &request).map_err(|e| e.to_string()),
            Err(_) => Err("store lock poisoned".to_string()),
        };
        finish_job(&state, &job_id, |job| match outcome {
            Ok(result) => {
                job.status = JobStatus::Succeeded;
                job.model_id = Some(result.meta.model_id);
                job.report = Some(result.report);
            }
            Err(e) => {
                job.status = JobStatus::Failed;
                job.error = Some(e);
            }
        });
    });
    Ok((StatusCode::ACCEPTED, Json(job)))
}

async fn list_jobs(State(state): St, ApiQuery(page): ApiQuery<PageParams>) -> AppResult<Json<Value>> {
    let jobs = state.jobs.lock().map_err(|_| ApiError::internal("job table poisoned"))?;
    Ok(Json(json!(page.page(jobs.values().rev())?)))
}

async fn get_job(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<Job>> {
    let jobs = state.jobs.lock().map_err(|_| ApiError::internal("job table poisoned"))?;
    jobs.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("unknown job `{id}`")))
}

#[derive(Serialize)]
struct ModelView {
    #[serde(flatten)]
    meta: ModelMeta,
    latest: bool,
}

async fn list_models(State(state): St, ApiQuery(page): ApiQuery<PageParams>) -> AppResult<Json<Value>> {
    let latest = models::latest(&state.data_dir)?;
    let items = models::list(&state.data_dir)?
        .into_iter()
        .map(|meta| ModelView { latest: latest.get(meta.task.as_str()) == Some(&meta.model_id), meta });
    Ok(Json(json!(page.page(items)?)))
}

async fn get_model(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<ModelView>> {
    let latest = models::latest(&state.data_dir)?;
    let meta = models::load_meta(&state.data_dir, &id)?;
    Ok(Json(ModelView { latest: latest.get(meta.task.as_str()) == Some(&meta.model_id), meta }))
}

async fn model_report(State(state): St, UrlPath(id): UrlPath<String>) -> AppResult<Json<Value>> {
    let report = models::load_report(&state.data_dir, &id)?;
    Ok(Json(json!({ "model_id": id, "text": report.render(), "report": report })))
}
