//! HTTP session API.
//!
//! | method | path                              | body / reply                          |
//! |--------|-----------------------------------|---------------------------------------|
//! | GET    | `/api/lists`                      | available lists                       |
//! | POST   | `/api/sessions`                   | `{list_id, role?, participant?}`      |
//! | GET    | `/api/sessions/{id}`              | current state                         |
//! | POST   | `/api/sessions/{id}/actions`      | `{action: question|build|debrief, …}` |
//! | GET    | `/api/sessions/{id}/transcript`   | event log, one JSON object per line   |
//!
//! Errors carry `{code, message}`: 404 for unknown sessions or lists, 409
//! for actions the current phase or mode does not allow, 422 for invalid
//! builds or ratings. A failed action never changes the session.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use bwim_core::session::{
    Phase, Session, SessionConfig, SessionError, SpeakerChangeMessage, TrialPrompt,
};
use bwim_core::speakers::{
    read_list, AnswerMessage, ExperimentList, FeedbackMessage, Mode, Speaker,
};
use bwim_core::world::render_wire;

#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    status: StatusCode,
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    fn unknown_session(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "unknown_session", format!("no session {id}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match e {
            SessionError::WrongMode(_)
            | SessionError::WrongPhase(_)
            | SessionError::QuestionLimitExceeded => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

#[derive(Default)]
pub struct AppState {
    lists: BTreeMap<String, Arc<ExperimentList>>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
}

impl AppState {
    pub fn new(lists: impl IntoIterator<Item = ExperimentList>) -> Self {
        AppState {
            lists: lists
                .into_iter()
                .map(|l| (l.id.clone(), Arc::new(l)))
                .collect(),
            sessions: RwLock::new(HashMap::new()),
        }
    }

    /// Loads every `*.list` file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, String> {
        let mut lists = Vec::new();
        let entries = std::fs::read_dir(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "list"))
            .collect();
        paths.sort();
        for path in paths {
            let file = std::fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
            let list = read_list(std::io::BufReader::new(file))
                .map_err(|e| format!("{}: {e}", path.display()))?;
            lists.push(list);
        }
        Ok(AppState::new(lists))
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session store lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::unknown_session(id))
    }
}

#[derive(Debug, Serialize)]
pub struct ListInfo {
    pub id: String,
    pub mode: Mode,
    pub speaker_order: Vec<Speaker>,
    pub trials: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    #[default]
    Human,
    External,
}

#[derive(Debug, Deserialize)]
pub struct CreateSession {
    pub list_id: String,
    #[serde(default)]
    pub role: Role,
    #[serde(default)]
    pub participant: Option<String>,
    #[serde(default)]
    pub carry_over: bool,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub session_id: String,
    pub list_id: String,
    pub mode: Mode,
    pub phase: Phase,
    pub total_trials: usize,
    pub total_score: i64,
    pub questions_remaining: u8,
    pub system_prompt: String,
    /// Present while a trial is running.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trial: Option<TrialView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub debrief: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct TrialView {
    pub index: usize,
    pub speaker_index: usize,
    pub existing: String,
    pub instruction: String,
    pub text: String,
}

impl From<TrialPrompt> for TrialView {
    fn from(p: TrialPrompt) -> Self {
        TrialView {
            index: p.trial,
            speaker_index: p.speaker_index,
            existing: render_wire(&p.existing),
            instruction: p.instruction,
            text: p.text,
        }
    }
}

fn view(id: &str, s: &Session) -> SessionView {
    let config = s.config();
    let questions_remaining = match (config.mode, s.phase()) {
        (Mode::Qa, Phase::AwaitingAction) => 1,
        _ => 0,
    };
    SessionView {
        session_id: id.to_string(),
        list_id: config.list.id.clone(),
        mode: config.mode,
        phase: s.phase(),
        total_trials: config.list.len(),
        total_score: s.state().total_score,
        questions_remaining,
        system_prompt: bwim_core::session::system_prompt(config.mode),
        trial: s.current_prompt().map(TrialView::from),
        debrief: (s.phase() == Phase::Debrief).then(bwim_core::session::debrief_text),
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Question {
        text: String,
    },
    Build {
        structure: String,
        #[serde(default)]
        rating: Option<u8>,
    },
    Debrief {
        text: String,
    },
}

#[derive(Debug, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ActionResult {
    Answer(AnswerMessage),
    Feedback {
        feedback: FeedbackView,
        #[serde(skip_serializing_if = "Option::is_none")]
        speaker_change: Option<SpeakerChangeMessage>,
    },
    Done,
}

#[derive(Debug, Serialize)]
pub struct FeedbackView {
    pub correct: bool,
    pub built: String,
    pub target: String,
    pub round_score: i64,
    pub total_score: i64,
    pub text: String,
}

impl From<FeedbackMessage> for FeedbackView {
    fn from(f: FeedbackMessage) -> Self {
        FeedbackView {
            correct: f.correct,
            built: render_wire(&f.built),
            target: render_wire(&f.target),
            round_score: f.round_score,
            total_score: f.total_score,
            text: f.text,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ActionReply {
    #[serde(flatten)]
    pub result: ActionResult,
    pub state: SessionView,
}

async fn lists(State(app): State<Arc<AppState>>) -> Json<Vec<ListInfo>> {
    Json(
        app.lists
            .values()
            .map(|l| ListInfo {
                id: l.id.clone(),
                mode: l.mode,
                speaker_order: l.speaker_order(),
                trials: l.len(),
            })
            .collect(),
    )
}

async fn create_session(
    State(app): State<Arc<AppState>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let Json(req) = body?;
    let list = app.lists.get(&req.list_id).cloned().ok_or_else(|| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "unknown_list",
            format!("no list {}", req.list_id),
        )
    })?;
    let participant = req.participant.unwrap_or_else(|| {
        match req.role {
            Role::Human => "human",
            Role::External => "external",
        }
        .to_string()
    });
    let mut config = SessionConfig::new(list, participant);
    config.posterior_carry_over = req.carry_over;
    let (session, _) = Session::start(config)?;
    let id = Uuid::new_v4().to_string();
    let reply = view(&id, &session);
    app.sessions
        .write()
        .expect("session store lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(reply)))
}

async fn get_session(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionView>, ApiError> {
    let session = app.session(&id)?;
    let guard = session.lock().expect("session lock");
    Ok(Json(view(&id, &guard)))
}

fn apply(session: &mut Session, action: Action) -> Result<ActionResult, ApiError> {
    Ok(match action {
        Action::Question { text } => ActionResult::Answer(session.submit_question(&text)?),
        Action::Build { structure, rating } => {
            let turn = session.submit_build_text(&structure, rating)?;
            ActionResult::Feedback {
                feedback: turn.feedback.into(),
                speaker_change: turn.speaker_change,
            }
        }
        Action::Debrief { text } => {
            session.submit_debrief(&text)?;
            ActionResult::Done
        }
    })
}

async fn post_action(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<Action>, JsonRejection>,
) -> Result<Json<ActionReply>, ApiError> {
    let session = app.session(&id)?;
    let Json(action) = body?;
    let mut guard = session.lock().expect("session lock");
    let result = apply(&mut guard, action)?;
    Ok(Json(ActionReply {
        result,
        state: view(&id, &guard),
    }))
}

async fn transcript(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let session = app.session(&id)?;
    let body = session.lock().expect("session lock").transcript().to_jsonl();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/lists", get(lists))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/actions", post(post_action))
        .route("/api/sessions/{id}/transcript", get(transcript))
        .with_state(state)
}

pub async fn serve(state: AppState, port: u16) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("127.0.0.1", port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
