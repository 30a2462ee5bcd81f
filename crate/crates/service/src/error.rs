use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use featline_core::ast::Span;
use featline_core::session::Conflict;
use featline_core::{AnalysisError, CompileError, Diagnostic, SessionError};
use serde::Serialize;

/// Body of every non-2xx response.
#[derive(Debug, Clone, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    /// Machine token, e.g. `conflict` or `parse_error`.
    pub code: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub culprit: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Vec<Diagnostic>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conflict: Option<Conflict>,
    /// Position of the failing entry when a decision log is replayed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
            span: None,
            culprit: None,
            diagnostics: None,
            conflict: None,
            index: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id `{id}`"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    pub fn with_diagnostics(mut self, d: Vec<Diagnostic>) -> Self {
        self.span = d.iter().find_map(|x| x.span);
        self.diagnostics = Some(d);
        self
    }

    pub fn parse(d: Vec<Diagnostic>) -> Self {
        let msg = d.first().map_or_else(|| "cannot parse".to_string(), |x| x.to_string());
        ApiError::new(StatusCode::BAD_REQUEST, "parse_error", msg).with_diagnostics(d)
    }
}

impl From<CompileError> for ApiError {
    fn from(e: CompileError) -> Self {
        let msg = e.to_string();
        match e {
            CompileError::Invalid(d) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_model", msg).with_diagnostics(d)
            }
            CompileError::Type(_) => ApiError::new(StatusCode::BAD_REQUEST, "type_error", msg),
            CompileError::NotReifiable(_) => ApiError::new(StatusCode::BAD_REQUEST, "not_reifiable", msg),
            CompileError::Fd(_) => ApiError::internal(msg),
        }
    }
}

impl From<AnalysisError> for ApiError {
    fn from(e: AnalysisError) -> Self {
        let msg = e.to_string();
        match e {
            AnalysisError::Compile(c) => c.into(),
            AnalysisError::VoidModel => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "void_model", msg),
            AnalysisError::Unsatisfiable => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "unsatisfiable", msg),
            AnalysisError::UnknownGoal(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_goal", msg),
            AnalysisError::UnknownName(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_name", msg),
            AnalysisError::Incomplete(_) => ApiError::new(StatusCode::BAD_REQUEST, "incomplete", msg),
            AnalysisError::Interrupted => ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "interrupted", msg),
            AnalysisError::InvalidArgument(_) => ApiError::bad_request(msg),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let msg = e.to_string();
        match e {
            SessionError::VoidModel => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "void_model", msg),
            SessionError::UnknownName(_) => ApiError::new(StatusCode::BAD_REQUEST, "unknown_name", msg),
            SessionError::Parse(d) => ApiError::parse(d),
            SessionError::Compile(c) => c.into(),
            SessionError::OutOfRange { .. } => ApiError::new(StatusCode::BAD_REQUEST, "out_of_range", msg),
            SessionError::Conflict(c) => {
                let mut err = ApiError::new(StatusCode::CONFLICT, "conflict", msg);
                err.culprit = c.culprit.clone();
                err.conflict = Some(*c);
                err
            }
            SessionError::Analysis(a) => a.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, axum::Json(&self)).into_response()
    }
}
