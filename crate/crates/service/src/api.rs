use axum::extract::{FromRequest, Path, Request, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use featline_core::analysis::Report;
use featline_core::session::{LogEntry, NextSolution, Restriction, VarView, View};
use featline_core::{
    compile, parse_unchecked, validate_model, AnalysisReport, AnalysisRequest, Session, SessionError,
};
use featline_fd::Strategy;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::state::CancelOnDrop;
use crate::{ApiError, AppState, ModelEntry, ModelSummary};

/// `axum::Json` with rejections reported as [`ApiError`].
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match axum::Json::<T>::from_request(req, state).await {
            Ok(axum::Json(v)) => Ok(Body(v)),
            Err(rej) => Err(ApiError::bad_request(rej.body_text())),
        }
    }
}

type ApiResult<T> = Result<axum::Json<T>, ApiError>;

pub async fn health() -> axum::Json<Value> {
    axum::Json(json!({"status": "ok"}))
}

pub async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "method_not_allowed", "method not allowed on this route")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewModel {
    text: String,
}

pub async fn create_model(State(st): State<AppState>, Body(req): Body<NewModel>) -> ApiResult<Value> {
    let model = parse_unchecked(&req.text).map_err(ApiError::parse)?;
    let diagnostics = validate_model(&model).err().unwrap_or_default();
    let valid = diagnostics.is_empty();
    let id = st.add_model(ModelEntry {
        model,
        diagnostics: diagnostics.clone(),
    });
    Ok(axum::Json(json!({"model_id": id, "valid": valid, "diagnostics": diagnostics})))
}

pub async fn get_model(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<ModelSummary> {
    let entry = st.model(&id)?;
    Ok(axum::Json(ModelSummary::new(&id, &entry)))
}

// Runs solver work off the async workers. Dropping the returned future
// (client abort) raises the cancel flag handed to `f`.
async fn blocking<T: Send + 'static>(
    f: impl FnOnce(std::sync::Arc<std::sync::atomic::AtomicBool>) -> T + Send + 'static,
) -> Result<T, ApiError> {
    let guard = CancelOnDrop::new();
    let flag = guard.flag();
    let out = tokio::task::spawn_blocking(move || f(flag))
        .await
        .map_err(|e| ApiError::internal(e.to_string()));
    guard.disarm();
    out
}

pub async fn run_analysis(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(body): Body<Value>,
) -> Result<Response, ApiError> {
    let entry = st.model(&id)?;
    let Value::Object(mut req) = body else {
        return Err(ApiError::bad_request("expected a JSON object"));
    };
    match req.remove("params") {
        Some(Value::Object(params)) => req.extend(params),
        Some(Value::Null) | None => {}
        Some(_) => return Err(ApiError::bad_request("`params` must be an object")),
    }
    if req.get("kind").and_then(Value::as_str) == Some("check") {
        let mut limits = st.limits();
        return blocking(move |cancel| {
            limits.cancel = Some(cancel);
            let void = match compile(&entry.model) {
                Ok(mut c) => Some(c.is_void(&limits)?),
                Err(_) => None,
            };
            let report = Report::Check {
                valid: entry.valid(),
                void,
                diagnostics: entry.diagnostics.clone(),
            };
            Ok::<_, ApiError>(axum::Json(AnalysisReport { report, elapsed_ms: None }).into_response())
        })
        .await?;
    }
    let request: AnalysisRequest =
        serde_json::from_value(Value::Object(req)).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let mut limits = st.limits();
    blocking(move |cancel| {
        limits.cancel = Some(cancel);
        let r = featline_core::analysis::analyze(&entry.model, &request, &limits)?;
        Ok(axum::Json(r).into_response())
    })
    .await?
}

// Serialized access: waiters queue on the session's FIFO mutex, then the
// operation runs on a blocking thread while the lock is held.
async fn with_session<T: Send + 'static>(
    st: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    let slot = st.session(id)?;
    let mut session = slot.session.clone().lock_owned().await;
    blocking(move |cancel| {
        session.set_cancel(Some(cancel));
        let r = f(&mut session);
        session.set_cancel(None);
        r
    })
    .await?
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewSession {
    model_id: String,
    #[serde(default)]
    log: Vec<LogEntry>,
    #[serde(default)]
    strategy: Strategy,
}

#[derive(Serialize)]
pub struct SessionCreated {
    session_id: String,
    view: View,
}

pub async fn create_session(
    State(st): State<AppState>,
    Body(req): Body<NewSession>,
) -> Result<(StatusCode, axum::Json<SessionCreated>), ApiError> {
    let entry = st.model(&req.model_id)?;
    if !entry.valid() {
        return Err(
            ApiError::new(StatusCode::BAD_REQUEST, "invalid_model", "the model has validation errors")
                .with_diagnostics(entry.diagnostics.clone()),
        );
    }
    let (budget, cap) = (st.config().time_budget, st.config().view_cap);
    let (session, view) = blocking(move |cancel| {
        let mut s = Session::replay(&entry.model, &req.log).map_err(|(i, e)| replay_error(i, e, req.log.len()))?;
        s = s.with_strategy(req.strategy).with_view_cap(cap).with_budget(Some(budget));
        s.set_cancel(Some(cancel));
        let view = s.view();
        s.set_cancel(None);
        Ok::<_, ApiError>((s, view))
    })
    .await??;
    let session_id = st.add_session(&req.model_id, session);
    Ok((StatusCode::CREATED, axum::Json(SessionCreated { session_id, view })))
}

fn replay_error(i: usize, e: SessionError, len: usize) -> ApiError {
    if matches!(e, SessionError::VoidModel) || len == 0 {
        return e.into();
    }
    let mut err = ApiError::from(e);
    err.message = format!("log entry {i} cannot be replayed: {}", err.message);
    if err.status != StatusCode::CONFLICT {
        err.status = StatusCode::CONFLICT;
        err.code = "replay_failed";
    }
    err.index = Some(i);
    err
}

#[derive(Serialize)]
pub struct SessionState {
    model_id: String,
    view: View,
    log: Vec<LogEntry>,
}

pub async fn get_session(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionState> {
    let model_id = st.session(&id)?.model_id.clone();
    let (view, log) = with_session(&st, &id, |s| Ok((s.view(), s.log()))).await?;
    Ok(axum::Json(SessionState { model_id, view, log }))
}

pub async fn get_log(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<Vec<LogEntry>> {
    Ok(axum::Json(with_session(&st, &id, |s| Ok(s.log())).await?))
}

pub async fn delete_session(State(st): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    if st.remove_session(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(ApiError::not_found("session", &id))
    }
}

#[derive(Serialize)]
pub struct Changed {
    delta: Vec<VarView>,
    view: View,
}

async fn mutate(
    st: &AppState,
    id: &str,
    f: impl FnOnce(&mut Session) -> Result<Vec<VarView>, SessionError> + Send + 'static,
) -> ApiResult<Changed> {
    let out = with_session(st, id, |s| {
        let delta = f(s)?;
        Ok(Changed { delta, view: s.view() })
    })
    .await?;
    Ok(axum::Json(out))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decision {
    name: String,
    restriction: Restriction,
}

pub async fn decide(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(d): Body<Decision>,
) -> ApiResult<Changed> {
    mutate(&st, &id, move |s| s.decide(&d.name, d.restriction)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraConstraint {
    expr_text: String,
}

pub async fn add_constraint(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(c): Body<ExtraConstraint>,
) -> ApiResult<Changed> {
    mutate(&st, &id, move |s| s.add_constraint_text(&c.expr_text)).await
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Undo {
    k: usize,
}

pub async fn undo(State(st): State<AppState>, Path(id): Path<String>, Body(u): Body<Undo>) -> ApiResult<Changed> {
    mutate(&st, &id, move |s| s.undo(u.k)).await
}

pub async fn next_solution(State(st): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    match with_session(&st, &id, |s| Ok(s.next_solution())).await? {
        NextSolution::Solution { solution } => Ok(axum::Json(json!({ "solution": solution })).into_response()),
        NextSolution::Exhausted => Ok(StatusCode::NO_CONTENT.into_response()),
        NextSolution::Interrupted => Err(featline_core::AnalysisError::Interrupted.into()),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeGoal {
    goal: String,
}

pub async fn optimize(
    State(st): State<AppState>,
    Path(id): Path<String>,
    Body(g): Body<OptimizeGoal>,
) -> ApiResult<featline_core::analysis::OptimumReport> {
    let r = with_session(&st, &id, move |s| Ok(s.optimize(&g.goal)?)).await?;
    Ok(axum::Json(r))
}
