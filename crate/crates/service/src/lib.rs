//! HTTP API over live question/answer sessions.
//!
//! Routes:
//!
//! | method | path                              | body / query                                   |
//! |--------|-----------------------------------|------------------------------------------------|
//! | GET    | `/topics`                         |                                                |
//! | POST   | `/topics/{id}/sessions`           | `{gamma?, beta?, error_model?, n_q_limit?}`    |
//! | GET    | `/sessions/{id}`                  |                                                |
//! | POST   | `/sessions/{id}/answer`           | `{answer: "yes"\|"no"\|"skip", question?}`     |
//! | GET    | `/sessions/{id}/ranking`          | `?k=` (default 10)                             |
//! | GET    | `/sessions/{id}/transcript`       |                                                |
//!
//! Sessions live in memory and are dropped after an idle period. Each
//! session has its own lock, so requests for different sessions run
//! concurrently. An answer may carry the number of the question it
//! responds to; a stale number is rejected with 409, which is how a client
//! de-duplicates a repeated click.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use qsbps::session::{FinishReason, Question, RankedProduct, Transcript};
use qsbps::{
    Answer, Corpus, ErrorModel, ModelSet, SelectionParams, Session, SessionConfig, SessionStatus, TopicIndex,
    TopicModel,
};
use rand::RngCore;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_TTL: Duration = Duration::from_secs(30 * 60);

/// Defaults applied to fields a session request leaves out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionDefaults {
    pub params: SelectionParams,
    pub error_model: ErrorModel,
    pub n_q_limit: usize,
}

impl Default for SessionDefaults {
    fn default() -> Self {
        SessionDefaults {
            params: SelectionParams::default(),
            error_model: ErrorModel::NoNoise,
            n_q_limit: 15,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ServiceConfig {
    pub idle_ttl: Duration,
    pub defaults: SessionDefaults,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            idle_ttl: DEFAULT_TTL,
            defaults: SessionDefaults::default(),
        }
    }
}

struct TopicEntry {
    index: Arc<TopicIndex>,
    model: TopicModel,
}

/// Topics that can be served: an index paired with its trained model.
pub struct Catalog {
    topics: BTreeMap<String, TopicEntry>,
}

impl Catalog {
    /// Every corpus topic that has a model, indexed with the model's field mode.
    pub fn new(corpus: &Corpus, models: &ModelSet) -> qsbps::Result<Catalog> {
        let mut topics = BTreeMap::new();
        for model in models.topics() {
            if corpus.topic(model.topic_id()).is_none() {
                continue;
            }
            let index = corpus.index_with(model.topic_id(), models.field_mode)?;
            model.rewards_for(&index)?;
            topics.insert(
                model.topic_id().to_string(),
                TopicEntry {
                    index: Arc::new(index),
                    model: model.clone(),
                },
            );
        }
        Ok(Catalog { topics })
    }

    pub fn from_parts(parts: Vec<(TopicIndex, TopicModel)>) -> qsbps::Result<Catalog> {
        let mut topics = BTreeMap::new();
        for (index, model) in parts {
            model.rewards_for(&index)?;
            topics.insert(
                index.topic_id().to_string(),
                TopicEntry {
                    index: Arc::new(index),
                    model,
                },
            );
        }
        Ok(Catalog { topics })
    }

    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }
}

struct LiveSession {
    session: Session,
    last_used: Instant,
}

#[derive(Clone)]
pub struct AppState {
    catalog: Arc<Catalog>,
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<LiveSession>>>>>,
    config: ServiceConfig,
}

impl AppState {
    pub fn new(catalog: Catalog, config: ServiceConfig) -> Self {
        AppState {
            catalog: Arc::new(catalog),
            sessions: Arc::new(Mutex::new(HashMap::new())),
            config,
        }
    }

    /// Drops sessions idle for longer than the TTL; returns how many.
    pub fn reap_expired(&self) -> usize {
        let ttl = self.config.idle_ttl;
        let mut map = self.sessions.lock().expect("session table poisoned");
        let before = map.len();
        map.retain(|_, s| match s.try_lock() {
            Ok(live) => live.last_used.elapsed() <= ttl,
            // busy right now, so not idle
            Err(_) => true,
        });
        before - map.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table poisoned").len()
    }

    fn lookup(&self, id: &str) -> Result<Arc<Mutex<LiveSession>>, ApiError> {
        let map = self.sessions.lock().expect("session table poisoned");
        let entry = map
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))?;
        drop(map);
        let expired = entry.lock().expect("session poisoned").last_used.elapsed() > self.config.idle_ttl;
        if expired {
            self.sessions.lock().expect("session table poisoned").remove(id);
            return Err(ApiError::not_found(format!("session `{id}` expired")));
        }
        Ok(entry)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/topics", get(list_topics))
        .route("/topics/{id}/sessions", post(create_session))
        .route("/sessions/{id}", get(session_state))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/ranking", get(ranking))
        .route("/sessions/{id}/transcript", get(transcript))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Binds `addr` and serves until the process is stopped. Expired sessions
/// are swept periodically.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let sweeper = state.clone();
    let period = (state.config.idle_ttl / 4).max(Duration::from_secs(1));
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(period);
        loop {
            tick.tick().await;
            sweeper.reap_expired();
        }
    });
    axum::serve(listener, router(state)).await
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, msg: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: msg.into(),
                path: None,
            },
        }
    }

    fn not_found(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, msg)
    }

    fn conflict(msg: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, msg)
    }

    fn invalid(path: &str, msg: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: ErrorBody {
                error: msg.into(),
                path: (!path.is_empty() && path != ".").then(|| path.to_string()),
            },
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

/// Parses a JSON body, reporting the failing field path. An empty body
/// reads as `{}`.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let body = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}".as_slice()
    } else {
        body
    };
    let de = &mut serde_json::Deserializer::from_slice(body);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ApiError::invalid(&path, e.into_inner().to_string())
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TopicSummary {
    pub topic_id: String,
    pub n_products: usize,
    pub n_entities: usize,
}

async fn list_topics(State(state): State<AppState>) -> Json<Vec<TopicSummary>> {
    Json(
        state
            .catalog
            .topics
            .iter()
            .map(|(id, t)| TopicSummary {
                topic_id: id.clone(),
                n_products: t.index.len(),
                n_entities: t.index.pool_len(),
            })
            .collect(),
    )
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    gamma: Option<f64>,
    beta: Option<f64>,
    error_model: Option<String>,
    n_q_limit: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionView {
    pub number: usize,
    pub entity_id: String,
    pub entity_label: String,
    pub prompt: String,
}

impl From<Question> for QuestionView {
    fn from(q: Question) -> Self {
        QuestionView {
            number: q.number,
            entity_id: q.label.clone(),
            entity_label: q.label,
            prompt: q.prompt,
        }
    }
}

/// Session state as returned by every session endpoint.
#[derive(Debug, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub topic_id: String,
    pub status: SessionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finish_reason: Option<FinishReason>,
    pub questions_asked: usize,
    pub questions_remaining: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionView>,
    pub top: Vec<RankedProduct>,
}

fn view(id: &str, s: &Session) -> SessionView {
    SessionView {
        session_id: id.to_string(),
        topic_id: s.index().topic_id().to_string(),
        status: s.status(),
        finish_reason: s.finish_reason(),
        questions_asked: s.question_count(),
        questions_remaining: s.config().n_q_limit.saturating_sub(s.question_count()),
        question: s.current_question().map(QuestionView::from),
        top: s.ranking(DEFAULT_TOP_K),
    }
}

fn new_session_id() -> String {
    let mut bytes = [0u8; 16];
    rand::rng().fill_bytes(&mut bytes);
    bytes.iter().fold(String::with_capacity(32), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

async fn create_session(
    State(state): State<AppState>,
    Path(topic): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let entry = state
        .catalog
        .topics
        .get(&topic)
        .ok_or_else(|| ApiError::not_found(format!("unknown topic `{topic}`")))?;
    let req: CreateRequest = parse_body(&body)?;
    let d = state.config.defaults;
    let gamma = req.gamma.unwrap_or(d.params.gamma);
    let beta = req.beta.unwrap_or(d.params.beta);
    let params = SelectionParams::new(gamma, beta).map_err(|e| {
        let path = if gamma.is_finite() && gamma >= 0.0 {
            "beta"
        } else {
            "gamma"
        };
        ApiError::invalid(path, e.to_string())
    })?;
    let error_model = match req.error_model {
        None => d.error_model,
        Some(s) => s
            .parse::<ErrorModel>()
            .and_then(|m| m.validate().map(|_| m))
            .map_err(|e| ApiError::invalid("error_model", e.to_string()))?,
    };
    let config = SessionConfig::new(params, error_model, req.n_q_limit.unwrap_or(d.n_q_limit));
    let session = Session::start(entry.index.clone(), &entry.model, config)
        .map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;

    state.reap_expired();
    let id = new_session_id();
    let body = view(&id, &session);
    state.sessions.lock().expect("session table poisoned").insert(
        id,
        Arc::new(Mutex::new(LiveSession {
            session,
            last_used: Instant::now(),
        })),
    );
    Ok((StatusCode::CREATED, Json(body)))
}

async fn session_state(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let entry = state.lookup(&id)?;
    let mut live = entry.lock().expect("session poisoned");
    live.last_used = Instant::now();
    Ok(Json(view(&id, &live.session)))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerRequest {
    answer: String,
    /// Number of the question being answered, if the client tracks it.
    question: Option<usize>,
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<SessionView>, ApiError> {
    let entry = state.lookup(&id)?;
    let req: AnswerRequest = parse_body(&body)?;
    let answer = match req.answer.as_str() {
        "yes" => Answer::Yes,
        "no" => Answer::No,
        "skip" => Answer::Skip,
        other => {
            return Err(ApiError::invalid(
                "answer",
                format!("expected \"yes\", \"no\" or \"skip\", got {other:?}"),
            ))
        }
    };
    let mut live = entry.lock().expect("session poisoned");
    live.last_used = Instant::now();
    let Some(current) = live.session.current_question() else {
        return Err(ApiError::conflict("session is finished"));
    };
    if let Some(n) = req.question {
        if n != current.number {
            return Err(ApiError::conflict(format!(
                "question {n} is not pending; current question is {}",
                current.number
            )));
        }
    }
    live.session
        .submit(answer)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(Json(view(&id, &live.session)))
}

#[derive(Debug, Deserialize)]
struct RankingQuery {
    k: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RankingView {
    pub session_id: String,
    pub k: usize,
    pub products: Vec<RankedProduct>,
}

async fn ranking(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<RankingQuery>,
) -> Result<Json<RankingView>, ApiError> {
    let entry = state.lookup(&id)?;
    let mut live = entry.lock().expect("session poisoned");
    live.last_used = Instant::now();
    let k = q.k.unwrap_or(DEFAULT_TOP_K);
    Ok(Json(RankingView {
        session_id: id,
        k,
        products: live.session.ranking(k),
    }))
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Transcript>, ApiError> {
    let entry = state.lookup(&id)?;
    let mut live = entry.lock().expect("session poisoned");
    live.last_used = Instant::now();
    Ok(Json(live.session.transcript()))
}
