//! HTTP study-session service.
//!
//! Every session sits behind its own mutex, so answers to one session are
//! applied one at a time while other sessions proceed in parallel. The
//! service owns the clock: requests never carry timestamps.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write as _;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{FromRequest, Path as UrlPath, Request, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use recall_core::mlr::{MlrModel, MlrParams};
use recall_core::rpl::RplModel;
use recall_core::scheduler::{
    DirectionPolicy, FormatPolicy, NextQuestion, Progress, Question, RankedItem, SessionConfig, SessionModel,
    StateSnapshot, StudySession, DEFAULT_MASTERY_THRESHOLD,
};
use recall_core::{Deck, DeckItem, Direction, FormatKind, QuestionFormat};

use crate::error::EngineError;
use crate::files::{self, ModelKind, ParamsFile};

pub const PUBLISHED: &str = "published";

/// Source of the current time in unix seconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> i64;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs() as i64)
            .unwrap_or(1)
    }
}

pub fn system_clock() -> Arc<dyn Clock> {
    Arc::new(SystemClock)
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(AtomicI64);

impl ManualClock {
    pub fn new(start: i64) -> Arc<Self> {
        Arc::new(Self(AtomicI64::new(start)))
    }

    pub fn set(&self, t: i64) {
        self.0.store(t, Ordering::SeqCst);
    }

    pub fn advance(&self, seconds: i64) -> i64 {
        self.0.fetch_add(seconds, Ordering::SeqCst) + seconds
    }
}

impl Clock for ManualClock {
    fn now(&self) -> i64 {
        self.0.load(Ordering::SeqCst)
    }
}

/// Parameter sets sessions can refer to by name. `published` always resolves
/// to the deployed coefficients of the requested model.
#[derive(Debug, Clone, Default)]
pub struct ParamsRegistry {
    named: BTreeMap<String, ParamsFile>,
}

impl ParamsRegistry {
    pub fn insert(&mut self, name: String, params: ParamsFile) -> Result<(), String> {
        if name == PUBLISHED {
            return Err(format!("{PUBLISHED:?} is reserved"));
        }
        if self.named.insert(name.clone(), params).is_some() {
            return Err(format!("parameter set {name:?} given twice"));
        }
        Ok(())
    }

    fn resolve(&self, name: &str, kind: ModelKind) -> Result<SessionModel, ApiError> {
        let params = if name == PUBLISHED {
            match kind {
                ModelKind::Mlr => ParamsFile::Mlr(MlrParams::published()),
                ModelKind::Rpl => ParamsFile::Rpl(recall_core::rpl::RplParams::published()),
            }
        } else {
            self.named
                .get(name)
                .cloned()
                .ok_or_else(|| ApiError::not_found(format!("no parameter set named {name:?}")).field("params_ref"))?
        };
        if params.kind() != kind {
            return Err(ApiError::bad_request(format!(
                "parameter set {name:?} is for model {}, not {}",
                params.kind().as_str(),
                kind.as_str()
            ))
            .field("params_ref"));
        }
        match params {
            ParamsFile::Mlr(p) => MlrModel::new(p).map(SessionModel::Mlr),
            ParamsFile::Rpl(p) => RplModel::new(p).map(SessionModel::Rpl),
        }
        .map_err(ApiError::from)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ServiceOptions {
    /// Default for answers that do not set `case_insensitive`.
    pub case_insensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SessionSlot {
    params_ref: String,
    session: StudySession,
}

struct Inner {
    decks: RwLock<BTreeMap<String, Deck>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionSlot>>>>,
    params: ParamsRegistry,
    clock: Arc<dyn Clock>,
    store: Option<Store>,
    options: ServiceOptions,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    /// Opens the service state, reloading every deck and session found under
    /// `state_dir`.
    pub fn open(
        state_dir: Option<PathBuf>,
        params: ParamsRegistry,
        clock: Arc<dyn Clock>,
        options: ServiceOptions,
    ) -> Result<Self, EngineError> {
        let mut decks = BTreeMap::new();
        let mut sessions = HashMap::new();
        let store = match state_dir {
            Some(dir) => {
                let store = Store::create(dir)?;
                for deck in store.load::<Deck>("decks")? {
                    decks.insert(deck.deck_id.clone(), deck);
                }
                for slot in store.load::<SessionSlot>("sessions")? {
                    sessions.insert(slot.session.session_id.clone(), Arc::new(Mutex::new(slot)));
                }
                Some(store)
            }
            None => None,
        };
        Ok(Self(Arc::new(Inner {
            decks: RwLock::new(decks),
            sessions: RwLock::new(sessions),
            params,
            clock,
            store,
            options,
        })))
    }

    pub fn in_memory(clock: Arc<dyn Clock>) -> Self {
        Self::open(None, ParamsRegistry::default(), clock, ServiceOptions::default()).expect("no IO without a state dir")
    }

    /// Registers a deck. Re-adding an identical deck is a no-op.
    pub fn add_deck(&self, deck: Deck) -> Result<DeckSummary, ApiError> {
        deck.validate().map_err(|e| ApiError::from(e).field("items"))?;
        let mut decks = self.0.decks.write().expect("deck lock");
        if let Some(existing) = decks.get(&deck.deck_id) {
            if *existing == deck {
                return Ok(DeckSummary::of(existing));
            }
            return Err(ApiError::conflict(format!("deck {:?} already exists", deck.deck_id)).field("deck_id"));
        }
        if let Some(store) = &self.0.store {
            store.save("decks", &deck.deck_id, &deck)?;
        }
        let summary = DeckSummary::of(&deck);
        decks.insert(deck.deck_id.clone(), deck);
        Ok(summary)
    }

    fn deck(&self, id: &str) -> Result<Deck, ApiError> {
        self.0.decks.read().expect("deck lock").get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no deck {id:?}")))
    }

    fn slot(&self, id: &str) -> Result<Arc<Mutex<SessionSlot>>, ApiError> {
        self.0.sessions.read().expect("session lock").get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no session {id:?}")))
    }

    /// Server time for a session: the clock, but never earlier than the
    /// session's last answer.
    fn now_for(&self, session: &StudySession) -> i64 {
        let last = session.answer_log().last().map_or(i64::MIN, |t| t.timestamp_s);
        self.0.clock.now().max(last).max(1)
    }

    fn persist(&self, slot: &SessionSlot) -> Result<(), ApiError> {
        match &self.0.store {
            Some(store) => Ok(store.save("sessions", &slot.session.session_id, slot)?),
            None => Ok(()),
        }
    }

    fn log_answer(&self, slot: &SessionSlot) -> Result<(), ApiError> {
        let (Some(store), Some(entry)) = (&self.0.store, slot.session.answer_log_entries().last()) else {
            return Ok(());
        };
        Ok(store.append_line(&format!("sessions/{}.answers.jsonl", slot.session.session_id), &entry)?)
    }
}

struct Store {
    root: PathBuf,
}

impl Store {
    fn create(root: PathBuf) -> Result<Self, EngineError> {
        for sub in ["decks", "sessions"] {
            let dir = root.join(sub);
            fs::create_dir_all(&dir).map_err(|e| EngineError::io(&dir, e))?;
        }
        Ok(Self { root })
    }

    /// Every `*.json` file of `kind`, in file-name order.
    fn load<T: DeserializeOwned>(&self, kind: &str) -> Result<Vec<T>, EngineError> {
        let dir = self.root.join(kind);
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| EngineError::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json") && !is_temp(p))
            .collect();
        paths.sort();
        paths.iter().map(|p| files::read_json(p)).collect()
    }

    fn save<T: Serialize>(&self, kind: &str, id: &str, value: &T) -> Result<(), EngineError> {
        files::write_json(&self.root.join(kind).join(format!("{id}.json")), value)
    }

    fn append_line<T: Serialize>(&self, relative: &str, value: &T) -> Result<(), EngineError> {
        let path = self.root.join(relative);
        let mut line = serde_json::to_vec(value).expect("serializable");
        line.push(b'\n');
        fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .and_then(|mut f| f.write_all(&line))
            .map_err(|e| EngineError::io(&path, e))
    }
}

fn is_temp(path: &Path) -> bool {
    path.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.'))
}

/// Error body: `{"error": {"code", "message", "field"}}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), field: None }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    fn field(mut self, field: impl Into<String>) -> Self {
        self.field = Some(field.into());
        self
    }
}

impl From<recall_core::Error> for ApiError {
    fn from(e: recall_core::Error) -> Self {
        use recall_core::Error as E;
        match e {
            E::Protocol(_) | E::Precondition(_) | E::SessionComplete => Self::conflict(e.to_string()),
            E::InvalidRecord(_) | E::InvalidDeck(_) | E::InvalidParams(_) | E::InvalidConfig(_) => Self::bad_request(e.to_string()),
            _ => Self::new(StatusCode::INTERNAL_SERVER_ERROR, "numerical", e.to_string()),
        }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    code: &'a str,
    message: &'a str,
    field: Option<&'a str>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: ErrorDetail { code: self.code, message: &self.message, field: self.field.as_deref() } };
        (self.status, Json(body)).into_response()
    }
}

/// JSON body extractor whose errors name the offending field.
pub struct JsonBody<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for JsonBody<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, Self::Rejection> {
        if let Some(ct) = req.headers().get(header::CONTENT_TYPE) {
            let ct = ct.to_str().unwrap_or("").split(';').next().unwrap_or("").trim().to_ascii_lowercase();
            if ct != "application/json" && !ct.ends_with("+json") {
                return Err(ApiError::new(StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type", format!("expected application/json, got {ct}")));
            }
        }
        let bytes = Bytes::from_request(req, state).await.map_err(|e| ApiError::bad_request(e.body_text()))?;
        decode(&bytes).map(JsonBody)
    }
}

fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ApiError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let message = e.inner().to_string();
        let mut path = e.path().to_string();
        if let Some(name) = backticked(&message) {
            if message.starts_with("missing field") || (message.starts_with("unknown field") && path == ".") {
                path = if path == "." { name.to_string() } else { format!("{path}.{name}") };
            }
        }
        let err = ApiError::bad_request(if path == "." { message.clone() } else { format!("{path}: {message}") });
        if path == "." {
            err
        } else {
            err.field(path)
        }
    })
}

fn backticked(message: &str) -> Option<&str> {
    let start = message.find('`')? + 1;
    let len = message[start..].find('`')?;
    Some(&message[start..start + len])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeckSummary {
    pub deck_id: String,
    pub item_count: usize,
}

impl DeckSummary {
    fn of(deck: &Deck) -> Self {
        Self { deck_id: deck.deck_id.clone(), item_count: deck.items.len() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateDeck {
    #[serde(default)]
    pub deck_id: Option<String>,
    pub items: Vec<DeckItem>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub deck_id: String,
    pub model: ModelKind,
    #[serde(default = "published")]
    pub params_ref: String,
    #[serde(default = "forward")]
    pub direction_policy: DirectionPolicy,
    #[serde(default)]
    pub format_policy: Option<FormatPolicy>,
    #[serde(default)]
    pub mastery_threshold: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn published() -> String {
    PUBLISHED.into()
}

fn forward() -> DirectionPolicy {
    DirectionPolicy::Forward
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitAnswer {
    pub kc_id: String,
    pub direction: Direction,
    pub format: FormatKind,
    #[serde(default)]
    pub options_count: Option<u32>,
    #[serde(default)]
    pub correct: Option<bool>,
    #[serde(default)]
    pub typed_answer: Option<String>,
    #[serde(default)]
    pub case_insensitive: Option<bool>,
}

/// A question as shown to the learner. The expected answer is withheld
/// except on self-graded cards, where the learner needs it to grade.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionView {
    pub complete: bool,
    pub question_id: u64,
    pub kc_id: String,
    pub direction: Direction,
    pub format: FormatKind,
    pub options_count: Option<u32>,
    pub prompt: String,
    pub options: Vec<String>,
    pub predicted_recall: f64,
    pub answer: Option<String>,
}

impl QuestionView {
    fn of(q: &Question) -> Self {
        Self {
            complete: false,
            question_id: q.question_id,
            kc_id: q.kc_id.clone(),
            direction: q.direction,
            format: q.format.kind(),
            options_count: q.format.options_count(),
            prompt: q.prompt.clone(),
            options: q.options.clone(),
            predicted_recall: q.predicted_recall,
            answer: (q.format.kind() == FormatKind::SelfGraded).then(|| q.answer.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counters {
    pub answered: usize,
    pub mastered: usize,
    pub total: usize,
    pub mean_predicted_recall: f64,
    pub mastery_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiSessionView {
    pub session_id: String,
    pub deck: DeckSummary,
    pub model: ModelKind,
    pub params_ref: String,
    pub config: SessionConfig,
    pub current_question: Option<QuestionView>,
    pub complete: bool,
    /// Rank order, weakest first.
    pub items: Vec<RankedItem>,
    pub progress: Counters,
    pub now: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerResult {
    pub correct: bool,
    pub correct_answer: String,
    /// Cued-recall prediction for the answered card right after the answer.
    pub predicted_recall: f64,
    pub timestamp_s: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerView {
    #[serde(flatten)]
    pub session: ApiSessionView,
    pub result: AnswerResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressView {
    pub session_id: String,
    #[serde(flatten)]
    pub progress: Progress,
    pub states: Vec<StateSnapshot>,
    pub now: i64,
}

fn session_view(slot: &SessionSlot, now: i64) -> Result<ApiSessionView, ApiError> {
    let s = &slot.session;
    let progress = s.progress(now)?;
    let current = s.outstanding().map(QuestionView::of);
    Ok(ApiSessionView {
        session_id: s.session_id.clone(),
        deck: DeckSummary::of(&s.deck),
        model: match s.model {
            SessionModel::Mlr(_) => ModelKind::Mlr,
            SessionModel::Rpl(_) => ModelKind::Rpl,
        },
        params_ref: slot.params_ref.clone(),
        config: s.config.clone(),
        complete: current.is_none() && progress.complete,
        current_question: current,
        progress: Counters {
            answered: progress.answered,
            mastered: progress.mastered,
            total: progress.total,
            mean_predicted_recall: progress.mean_predicted_recall,
            mastery_threshold: progress.mastery_threshold,
        },
        items: progress.items,
        now,
    })
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/decks", post(create_deck).get(list_decks))
        .route("/decks/{id}", get(get_deck))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/next", get(next_question))
        .route("/sessions/{id}/answers", post(submit_answer))
        .route("/sessions/{id}/progress", get(progress))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

async fn create_deck(State(state): State<AppState>, JsonBody(req): JsonBody<CreateDeck>) -> Result<impl IntoResponse, ApiError> {
    let deck_id = match req.deck_id {
        Some(id) if valid_id(&id) => id,
        Some(_) => return Err(ApiError::bad_request("deck_id must be 1-64 characters from [A-Za-z0-9_-]").field("deck_id")),
        None => uuid::Uuid::new_v4().simple().to_string(),
    };
    let summary = state.add_deck(Deck { deck_id, items: req.items })?;
    Ok((StatusCode::CREATED, Json(summary)))
}

async fn list_decks(State(state): State<AppState>) -> Json<Vec<DeckSummary>> {
    Json(state.0.decks.read().expect("deck lock").values().map(DeckSummary::of).collect())
}

async fn get_deck(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<Deck>, ApiError> {
    state.deck(&id).map(Json)
}

async fn create_session(State(state): State<AppState>, JsonBody(req): JsonBody<CreateSession>) -> Result<impl IntoResponse, ApiError> {
    let deck = state.deck(&req.deck_id).map_err(|e| e.field("deck_id"))?;
    let model = state.0.params.resolve(&req.params_ref, req.model)?;
    let id = uuid::Uuid::new_v4();
    let config = SessionConfig {
        direction_policy: req.direction_policy,
        format_policy: req.format_policy.unwrap_or_default(),
        mastery_threshold: req.mastery_threshold.unwrap_or(DEFAULT_MASTERY_THRESHOLD),
        seed: req.seed.unwrap_or_else(|| id.as_u64_pair().0),
    };
    let session = StudySession::new(id.simple().to_string(), deck, model, config)?;
    let slot = SessionSlot { params_ref: req.params_ref, session };
    state.persist(&slot)?;
    let view = session_view(&slot, state.now_for(&slot.session))?;
    state.0.sessions.write().expect("session lock").insert(view.session_id.clone(), Arc::new(Mutex::new(slot)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<ApiSessionView>, ApiError> {
    let slot = state.slot(&id)?;
    let slot = slot.lock().expect("session mutex");
    session_view(&slot, state.now_for(&slot.session)).map(Json)
}

async fn next_question(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    let mut slot = slot.lock().expect("session mutex");
    let had_question = slot.session.outstanding().is_some();
    let now = state.now_for(&slot.session);
    match slot.session.next_question(now)? {
        NextQuestion::Complete => Ok(Json(serde_json::json!({ "complete": true })).into_response()),
        NextQuestion::Question(q) => {
            if !had_question {
                state.persist(&slot)?;
            }
            Ok(Json(QuestionView::of(&q)).into_response())
        }
    }
}

async fn submit_answer(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    JsonBody(req): JsonBody<SubmitAnswer>,
) -> Result<Json<AnswerView>, ApiError> {
    let slot = state.slot(&id)?;
    let mut slot = slot.lock().expect("session mutex");
    let outstanding = slot.session.outstanding().cloned();
    let format = match (req.options_count, &outstanding) {
        (Some(n), _) => QuestionFormat::new(req.format, Some(n)).map_err(|e| ApiError::from(e).field("options_count"))?,
        (None, Some(q)) if q.format.kind() == req.format => q.format,
        (None, _) => QuestionFormat::new(req.format, None).map_err(|e| ApiError::from(e).field("options_count"))?,
    };
    let now = state.now_for(&slot.session);
    let case_insensitive = req.case_insensitive.unwrap_or(state.0.options.case_insensitive);
    let outcome = match (req.correct, req.typed_answer.as_deref()) {
        (Some(correct), None) => slot.session.record_answer(&req.kc_id, req.direction, format, correct, now)?,
        (None, Some(typed)) => slot.session.record_typed_answer(&req.kc_id, req.direction, format, typed, case_insensitive, now)?,
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give either correct or typed_answer, not both").field("typed_answer")),
        (None, None) => return Err(ApiError::bad_request("missing field `correct` (or `typed_answer`)").field("correct")),
    };
    state.persist(&slot)?;
    state.log_answer(&slot)?;
    let result = AnswerResult {
        correct: outcome.trial.correct,
        correct_answer: outcome.correct_answer,
        predicted_recall: outcome.predicted_recall,
        timestamp_s: outcome.trial.timestamp_s,
    };
    Ok(Json(AnswerView { session: session_view(&slot, now)?, result }))
}

async fn progress(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<ProgressView>, ApiError> {
    let slot = state.slot(&id)?;
    let slot = slot.lock().expect("session mutex");
    let now = state.now_for(&slot.session);
    Ok(Json(ProgressView {
        session_id: id,
        progress: slot.session.progress(now)?,
        states: slot.session.state_snapshots(),
        now,
    }))
}
